#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semstream/coordinator.hpp"
#include "semstream/scenario.hpp"
#include "semstream/sync.hpp"
#include "semstream/wav.hpp"

namespace semstream {

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    bool audio = false;
};

struct RoundOutcome {
    SyncReport report;
    std::size_t edges_updated = 0;
    std::size_t devices_served = 0;
};

struct RunOutput {
    std::vector<RoundOutcome> rounds;
    std::vector<std::string> files; // everything written, relative to out_dir
};

namespace detail {

inline std::string csv_time(const std::optional<double>& t) {
    return t ? format_double(*t) : "";
}

inline void write_file(const std::filesystem::path& path, const std::string& content,
                       RunOutput& out, const std::string& rel) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write output file: " + path.string());
    f << content;
    if (!f) throw ValidationError("failed writing output file: " + path.string());
    out.files.push_back(rel);
}

} // namespace detail

// Runs every coordinator round of a scenario and writes the report, token
// and delivery traces, the feedback log, and (optionally) rendered audio.
inline RunOutput run_scenario(ScenarioConfig cfg, const RunOptions& options) {
    namespace fs = std::filesystem;
    if (options.seed_override) cfg.seed = *options.seed_override;
    fs::path out_dir(options.out_dir);
    fs::create_directories(out_dir);

    std::vector<DeviceRegistration> registrations;
    for (const auto& d : cfg.devices)
        registrations.push_back(DeviceRegistration{d.id, d.role, d.private_kg});

    // Initial provisioning: merge private KGs and distribute locals/filters.
    RoundResult dist = round_update(cfg.global_kg, registrations, {}, cfg.policy);
    KnowledgeGraph global = dist.global;

    RunOutput output;
    std::ostringstream report;
    std::ostringstream feedback_log;
    feedback_log << "time_s,listener_id,head,relation,tail,verdict\n";
    std::vector<FeedbackEvent> pending;
    double elapsed_since_update = 0.0;

    for (int round = 1; round <= cfg.rounds; ++round) {
        SessionConfig session;
        session.profile = cfg.profile;
        session.listener_kg = global;
        session.playout_latency_budget = cfg.latency_budget;
        session.readiness_fraction = cfg.readiness_fraction;
        session.seed = derive_seed(cfg.seed, "round/" + std::to_string(round));
        session.sample_rate = cfg.sample_rate;
        session.frame_length = cfg.frame_length;
        session.hop = cfg.hop;
        double round_duration = 0.0;
        for (const auto& d : cfg.devices) {
            SenderConfig sc;
            sc.id = d.id;
            sc.scene = d.scene;
            sc.channel = d.channel;
            sc.role_filter = dist.role_filters.at(d.id);
            session.senders.push_back(std::move(sc));
            round_duration = std::max(round_duration, d.scene.length);
        }

        SessionTrace trace = run_session(session);
        RoundOutcome outcome;
        outcome.report = compute_metrics(trace, session);
        outcome.devices_served = dist.locals.size();

        // Token trace: scheduled tokens with their channel outcomes.
        std::ostringstream tokens_csv;
        tokens_csv << "seq,entity,kind,onset_s,duration_s,salience,status\n";
        std::ostringstream delivery_csv;
        delivery_csv << "frame_id,seq,status,send_time_s,arrival_time_s,received_entity\n";
        for (const auto& st : trace.streams) {
            std::map<std::size_t, const DeliveryRecord*> rec_by_seq;
            for (const auto& r : st.records) rec_by_seq[r.seq] = &r;
            for (const auto& tok : st.frame.tokens) {
                const auto* rec = rec_by_seq.at(tok.seq);
                tokens_csv << tok.seq << "," << tok.entity << "," << to_string(tok.kind)
                           << "," << format_double(tok.onset) << ","
                           << format_double(tok.duration) << ","
                           << format_double(tok.salience) << "," << to_string(rec->status)
                           << "\n";
            }
            for (const auto& r : st.records)
                delivery_csv << st.frame.header.frame_id << "," << r.seq << ","
                             << to_string(r.status) << "," << detail::csv_time(r.send_time)
                             << "," << detail::csv_time(r.arrival_time) << ","
                             << (r.arrival_time ? r.received_entity : "") << "\n";
        }
        const std::string tag = "_round_" + std::to_string(round);
        detail::write_file(out_dir / ("tokens" + tag + ".csv"), tokens_csv.str(), output,
                           "tokens" + tag + ".csv");
        detail::write_file(out_dir / ("delivery" + tag + ".csv"), delivery_csv.str(), output,
                           "delivery" + tag + ".csv");
        if (options.audio) {
            const std::string wav_name = "audio" + tag + ".wav";
            write_wav_stereo((out_dir / wav_name).string(), trace.rendered.left,
                             trace.rendered.right);
            output.files.push_back(wav_name);
        }

        // Scripted feedback for this round, then the update decision.
        std::size_t edges_updated = 0;
        for (const auto& rs : cfg.round_specs) {
            if (rs.index != round) continue;
            for (const auto& fb : rs.feedback) {
                pending.push_back(fb);
                feedback_log << format_double(fb.time) << "," << fb.listener_id << ","
                             << fb.triple.head << "," << fb.triple.relation << ","
                             << fb.triple.tail << ","
                             << (fb.verdict == Verdict::Positive ? "positive" : "negative")
                             << "\n";
            }
        }
        elapsed_since_update += round_duration;
        if (should_update(cfg.policy, static_cast<int>(pending.size()),
                          elapsed_since_update)) {
            dist = round_update(global, registrations, pending, cfg.policy);
            global = dist.global;
            edges_updated = dist.edges_updated;
            pending.clear();
            elapsed_since_update = 0.0;
        }
        outcome.edges_updated = edges_updated;

        report << format_report(outcome.report);
        report << "round_index=" << round << "\n";
        report << "edges_updated=" << outcome.edges_updated << "\n";
        report << "devices_served=" << outcome.devices_served << "\n";
        if (round < cfg.rounds) report << "\n";
        output.rounds.push_back(std::move(outcome));
    }

    detail::write_file(out_dir / "report.txt", report.str(), output, "report.txt");
    detail::write_file(out_dir / "feedback.csv", feedback_log.str(), output, "feedback.csv");
    return output;
}

} // namespace semstream
