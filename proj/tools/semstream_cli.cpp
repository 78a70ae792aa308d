// Scenario-driven entry point: run simulation rounds or inspect a KG.
#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>
#include <vector>

#include "semstream/semstream.hpp"

namespace {

int run_one(const std::string& scenario_path, const semstream::RunOptions& options) {
    auto cfg = semstream::load_scenario(scenario_path);
    auto output = semstream::run_scenario(cfg, options);
    for (std::size_t i = 0; i < output.rounds.size(); ++i)
        std::cout << scenario_path << " round " << (i + 1)
                  << " fidelity=" << semstream::format_double(output.rounds[i].report.fidelity)
                  << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic sound stream simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run scenario files");
    std::vector<std::string> scenarios;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    bool audio = false;
    unsigned jobs = 1;
    run->add_option("scenario", scenarios, "scenario file(s)")->required()->expected(-1);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_flag("--audio", audio, "write rendered stereo wav per round");
    run->add_option("--jobs", jobs, "run independent scenarios in parallel");

    auto* inspect = app.add_subcommand("inspect", "query relevance in a KG file");
    std::string kg_file, from, to;
    inspect->add_option("kg-file", kg_file, "KG text file")->required();
    inspect->add_option("--from", from, "source entity")->required();
    inspect->add_option("--to", to, "target entity")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            semstream::RunOptions options;
            options.audio = audio;
            if (seed >= 0) options.seed_override = static_cast<std::uint64_t>(seed);

            auto out_for = [&](const std::string& path) {
                if (scenarios.size() == 1) return out_dir;
                auto stem = std::filesystem::path(path).stem().string();
                return (std::filesystem::path(out_dir) / stem).string();
            };

            if (jobs <= 1 || scenarios.size() == 1) {
                for (const auto& s : scenarios) {
                    auto opts = options;
                    opts.out_dir = out_for(s);
                    run_one(s, opts);
                }
            } else {
                std::vector<std::thread> workers;
                std::vector<std::exception_ptr> errors(scenarios.size());
                std::atomic<std::size_t> next{0};
                for (unsigned t = 0; t < jobs; ++t) {
                    workers.emplace_back([&] {
                        for (std::size_t i = next.fetch_add(1); i < scenarios.size();
                             i = next.fetch_add(1)) {
                            try {
                                auto opts = options;
                                opts.out_dir = out_for(scenarios[i]);
                                run_one(scenarios[i], opts);
                            } catch (...) {
                                errors[i] = std::current_exception();
                            }
                        }
                    });
                }
                for (auto& w : workers) w.join();
                for (auto& e : errors)
                    if (e) std::rethrow_exception(e);
            }
        } else if (inspect->parsed()) {
            auto kg = semstream::load_kg(kg_file);
            auto [value, path] = kg.relevance_path(from, to);
            std::cout << "relevance=" << semstream::format_double(value) << "\n";
            if (path.empty()) {
                std::cout << "no path\n";
            } else {
                for (std::size_t i = 0; i < path.size(); ++i) {
                    if (i) {
                        // best prob across parallel relations for this hop
                        double best = 0.0;
                        for (const auto& [key, p] : kg.triples())
                            if (key.head == path[i - 1] && key.tail == path[i])
                                best = std::max(best, p);
                        std::cout << " -(" << semstream::format_double(best) << ")-> ";
                    }
                    std::cout << path[i];
                }
                std::cout << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
