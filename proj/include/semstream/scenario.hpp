#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semstream/coordinator.hpp"
#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/kg_io.hpp"
#include "semstream/sound.hpp"
#include "semstream/sync.hpp"
#include "semstream/transmission.hpp"

namespace semstream {

struct DeviceSpec {
    std::string id;
    std::string role;
    SoundScene scene;
    ChannelModel channel;
    KnowledgeGraph private_kg;
};

struct RoundSpec {
    int index = 1;
    std::vector<FeedbackEvent> feedback; // applied after this round's session
};

struct ScenarioConfig {
    int format_version = 1;
    std::uint64_t seed = 0;
    int rounds = 1;
    int sample_rate = 8000;
    int frame_length = 256;
    int hop = 128;
    double readiness_fraction = 0.8;
    double latency_budget = 1.0;
    std::string kg_path; // empty when the KG is inline
    KnowledgeGraph global_kg;
    std::vector<DeviceSpec> devices;
    PreferenceProfile profile;
    std::string listener_id = "listener";
    UpdatePolicy policy;
    std::vector<RoundSpec> round_specs;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double parse_num(const std::string& s, int line, const std::string& field) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, field + ": not a number: " + s);
    }
}

inline ChannelModel parse_channel(const std::string& value, int line) {
    ChannelModel ch;
    bool has_rate = false;
    for (const auto& tok : split_ws(value)) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ParseError(line, "channel expects key=value pairs, got: " + tok);
        const std::string key = tok.substr(0, eq);
        const double v = parse_num(tok.substr(eq + 1), line, "channel." + key);
        if (key == "rate") { ch.rate = v; has_rate = true; }
        else if (key == "delay") ch.propagation_delay = v;
        else if (key == "jitter") ch.jitter_std = v;
        else if (key == "erase") ch.erasure_prob = v;
        else if (key == "corrupt") ch.corruption_prob = v;
        else throw ParseError(line, "unknown channel key: " + key);
    }
    if (!has_rate) throw ValidationError("channel.rate is required");
    return ch;
}

} // namespace detail

// Hierarchical key-value scenario document; see the README for the grammar.
// base_dir resolves relative kg file paths.
inline ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir = "") {
    ScenarioConfig cfg;
    std::string section;
    std::string section_arg;
    DeviceSpec* device = nullptr;
    RoundSpec* round = nullptr;
    std::vector<std::pair<std::string, std::string>> kg_lines; // inline entity/triple
    std::map<std::string, double> device_lengths;
    bool saw_scenario = false;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string line = detail::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
            auto inner = detail::trim(line.substr(1, line.size() - 2));
            auto parts = detail::split_ws(inner);
            if (parts.empty()) throw ParseError(lineno, "empty section header");
            section = parts[0];
            section_arg = parts.size() > 1 ? parts[1] : "";
            device = nullptr;
            round = nullptr;
            if (section == "scenario") {
                saw_scenario = true;
            } else if (section == "device") {
                if (section_arg.empty()) throw ParseError(lineno, "[device] needs an id");
                cfg.devices.push_back(DeviceSpec{});
                device = &cfg.devices.back();
                device->id = section_arg;
                device->scene.sender_id = section_arg;
            } else if (section == "round") {
                if (section_arg.empty()) throw ParseError(lineno, "[round] needs an index");
                cfg.round_specs.push_back(RoundSpec{});
                round = &cfg.round_specs.back();
                round->index = static_cast<int>(detail::parse_num(section_arg, lineno, "round"));
            } else if (section != "kg" && section != "listener" && section != "policy") {
                throw ParseError(lineno, "unknown section: " + section);
            }
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(lineno, "empty key");

        if (section == "scenario") {
            if (key == "format_version")
                cfg.format_version = static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "seed")
                cfg.seed = static_cast<std::uint64_t>(detail::parse_num(value, lineno, key));
            else if (key == "rounds")
                cfg.rounds = static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "sample_rate")
                cfg.sample_rate = static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "frame_length")
                cfg.frame_length = static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "hop")
                cfg.hop = static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "q")
                cfg.readiness_fraction = detail::parse_num(value, lineno, key);
            else if (key == "latency_budget")
                cfg.latency_budget = detail::parse_num(value, lineno, key);
            else
                throw ParseError(lineno, "unknown scenario key: " + key);
        } else if (section == "kg") {
            if (key == "path") cfg.kg_path = value;
            else if (key == "entity" || key == "triple") kg_lines.emplace_back(key, value);
            else throw ParseError(lineno, "unknown kg key: " + key);
        } else if (section == "device") {
            if (!device) throw ParseError(lineno, "key outside a device section");
            if (key == "role") device->role = value;
            else if (key == "length")
                device_lengths[device->id] = detail::parse_num(value, lineno, key);
            else if (key == "channel")
                device->channel = detail::parse_channel(value, lineno);
            else if (key == "private_kg") {
                auto p = std::filesystem::path(base_dir) / value;
                device->private_kg = load_kg(p.string());
            } else if (key == "event") {
                auto parts = detail::split_ws(value);
                if (parts.size() != 5)
                    throw ParseError(lineno,
                                     "event expects <kind> <entity> <onset> <duration> <salience>");
                auto kind = kind_from_string(parts[0]);
                if (!kind) throw ParseError(lineno, "unknown event kind: " + parts[0]);
                SoundEvent e;
                e.kind = *kind;
                e.entity = parts[1];
                e.onset = detail::parse_num(parts[2], lineno, "event.onset");
                e.duration = detail::parse_num(parts[3], lineno, "event.duration");
                e.salience = detail::parse_num(parts[4], lineno, "event.salience");
                if (kind_from_entity(e.entity) != *kind)
                    throw ValidationError("event entity '" + e.entity +
                                          "' does not match kind " + parts[0]);
                try {
                    device->scene.add(std::move(e));
                } catch (const ValidationError&) {
                    throw;
                }
            } else {
                throw ParseError(lineno, "unknown device key: " + key);
            }
        } else if (section == "listener") {
            if (key == "channels")
                cfg.profile.device_channels =
                    static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "id") cfg.listener_id = value;
            else if (key == "target") {
                auto parts = detail::split_ws(value);
                if (parts.size() != 2)
                    throw ParseError(lineno, "target expects <entity> <weight>");
                cfg.profile.targets.emplace_back(
                    parts[0], detail::parse_num(parts[1], lineno, "target.weight"));
            } else {
                throw ParseError(lineno, "unknown listener key: " + key);
            }
        } else if (section == "policy") {
            if (key == "min_feedback")
                cfg.policy.min_feedback_count =
                    static_cast<int>(detail::parse_num(value, lineno, key));
            else if (key == "min_interval")
                cfg.policy.min_interval = detail::parse_num(value, lineno, key);
            else if (key == "alpha") cfg.policy.alpha = detail::parse_num(value, lineno, key);
            else if (key == "hop_limit")
                cfg.policy.hop_limit =
                    static_cast<unsigned>(detail::parse_num(value, lineno, key));
            else if (key == "role_threshold")
                cfg.policy.role_threshold = detail::parse_num(value, lineno, key);
            else throw ParseError(lineno, "unknown policy key: " + key);
        } else if (section == "round") {
            if (!round) throw ParseError(lineno, "key outside a round section");
            if (key == "feedback") {
                auto parts = detail::split_ws(value);
                if (parts.size() != 6)
                    throw ParseError(
                        lineno,
                        "feedback expects <time> <listener> <head> <relation> <tail> <verdict>");
                FeedbackEvent fb;
                fb.time = detail::parse_num(parts[0], lineno, "feedback.time");
                fb.listener_id = parts[1];
                fb.triple = TripleKey{parts[2], parts[3], parts[4]};
                if (parts[5] == "positive") fb.verdict = Verdict::Positive;
                else if (parts[5] == "negative") fb.verdict = Verdict::Negative;
                else throw ParseError(lineno, "verdict must be positive|negative");
                round->feedback.push_back(std::move(fb));
            } else {
                throw ParseError(lineno, "unknown round key: " + key);
            }
        } else {
            throw ParseError(lineno, "key before any section: " + key);
        }
    }

    if (!saw_scenario) throw ValidationError("missing [scenario] section");
    if (cfg.format_version != 1)
        throw ValidationError("unsupported format_version " +
                              std::to_string(cfg.format_version));
    if (cfg.rounds < 1) throw ValidationError("rounds must be >= 1");
    if (cfg.devices.empty()) throw ValidationError("at least one [device] section required");

    // Assemble the global KG: file (if any) plus inline lines.
    if (!cfg.kg_path.empty()) {
        auto p = std::filesystem::path(base_dir) / cfg.kg_path;
        cfg.global_kg = load_kg(p.string());
    }
    for (const auto& [kind, value] : kg_lines) {
        std::istringstream ls(value);
        if (kind == "entity") {
            std::string id, cat;
            if (!(ls >> id >> cat)) throw ValidationError("kg entity line: " + value);
            auto c = category_from_string(cat);
            if (!c) throw ValidationError("unknown category: " + cat);
            cfg.global_kg.add_entity(id, *c);
        } else {
            std::string h, r, t;
            double p;
            if (!(ls >> h >> r >> t >> p)) throw ValidationError("kg triple line: " + value);
            cfg.global_kg.add_triple(h, r, t, p);
        }
    }

    // Cross-reference validation.
    for (auto& d : cfg.devices) {
        if (d.role.empty()) throw ValidationError("device " + d.id + ": role is required");
        if (!(d.channel.rate > 0.0))
            throw ValidationError("device " + d.id + ": channel.rate is required");
        d.channel.validate();
        if (!cfg.global_kg.has_entity(d.role))
            throw ValidationError("device " + d.id + ": role entity '" + d.role +
                                  "' not in kg");
        for (const auto& e : d.scene.events)
            if (!cfg.global_kg.has_entity(e.entity))
                throw ValidationError("device " + d.id + ": scene entity '" + e.entity +
                                      "' not in kg");
        auto it = device_lengths.find(d.id);
        if (it != device_lengths.end()) {
            d.scene.length = it->second;
        } else {
            for (const auto& e : d.scene.events)
                d.scene.length = std::max(d.scene.length, e.onset + e.duration);
        }
        for (const auto& e : d.scene.events)
            if (e.onset + e.duration > d.scene.length + 1e-9)
                throw ValidationError("device " + d.id + ": event '" + e.entity +
                                      "' exceeds scene length");
        if (!(d.scene.length > 0.0))
            throw ValidationError("device " + d.id + ": scene has no length");
    }
    for (const auto& [target, weight] : cfg.profile.targets) {
        if (!(weight >= 0.0 && weight <= 1.0))
            throw ValidationError("target weight out of [0,1]: " + target);
        if (!cfg.global_kg.has_entity(target))
            throw ValidationError("listener target '" + target + "' not in kg");
    }
    for (const auto& r : cfg.round_specs)
        if (r.index < 1 || r.index > cfg.rounds)
            throw ValidationError("round index out of range: " + std::to_string(r.index));
    cfg.policy.validate();
    if (!(cfg.readiness_fraction >= 0.0 && cfg.readiness_fraction <= 1.0))
        throw ValidationError("q must be in [0,1]");
    if (!(cfg.latency_budget > 0.0)) throw ValidationError("latency_budget must be > 0");
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
}

// Canonical serialization; parsing the output reproduces the config
// (the KG is always written inline).
inline std::string serialize_scenario(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "format_version = " << cfg.format_version << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "rounds = " << cfg.rounds << "\n";
    out << "sample_rate = " << cfg.sample_rate << "\n";
    out << "frame_length = " << cfg.frame_length << "\n";
    out << "hop = " << cfg.hop << "\n";
    out << "q = " << format_double(cfg.readiness_fraction) << "\n";
    out << "latency_budget = " << format_double(cfg.latency_budget) << "\n";
    out << "\n[kg]\n";
    for (const auto& [id, cat] : cfg.global_kg.entities())
        out << "entity = " << id << " " << to_string(cat) << "\n";
    for (const auto& [key, p] : cfg.global_kg.triples())
        out << "triple = " << key.head << " " << key.relation << " " << key.tail << " "
            << format_double(p) << "\n";
    for (const auto& d : cfg.devices) {
        out << "\n[device " << d.id << "]\n";
        out << "role = " << d.role << "\n";
        out << "length = " << format_double(d.scene.length) << "\n";
        out << "channel = rate=" << format_double(d.channel.rate)
            << " delay=" << format_double(d.channel.propagation_delay)
            << " jitter=" << format_double(d.channel.jitter_std)
            << " erase=" << format_double(d.channel.erasure_prob)
            << " corrupt=" << format_double(d.channel.corruption_prob) << "\n";
        for (const auto& e : d.scene.events)
            out << "event = " << to_string(e.kind) << " " << e.entity << " "
                << format_double(e.onset) << " " << format_double(e.duration) << " "
                << format_double(e.salience) << "\n";
    }
    out << "\n[listener]\n";
    out << "id = " << cfg.listener_id << "\n";
    out << "channels = " << cfg.profile.device_channels << "\n";
    for (const auto& [target, weight] : cfg.profile.targets)
        out << "target = " << target << " " << format_double(weight) << "\n";
    out << "\n[policy]\n";
    out << "min_feedback = " << cfg.policy.min_feedback_count << "\n";
    out << "min_interval = " << format_double(cfg.policy.min_interval) << "\n";
    out << "alpha = " << format_double(cfg.policy.alpha) << "\n";
    out << "hop_limit = " << cfg.policy.hop_limit << "\n";
    out << "role_threshold = " << format_double(cfg.policy.role_threshold) << "\n";
    for (const auto& r : cfg.round_specs) {
        out << "\n[round " << r.index << "]\n";
        for (const auto& fb : r.feedback)
            out << "feedback = " << format_double(fb.time) << " " << fb.listener_id << " "
                << fb.triple.head << " " << fb.triple.relation << " " << fb.triple.tail << " "
                << (fb.verdict == Verdict::Positive ? "positive" : "negative") << "\n";
    }
    return out.str();
}

} // namespace semstream
