#ifndef OOBSIM_CONFIG_HPP
#define OOBSIM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oobsim/decoder.hpp"
#include "oobsim/encoder.hpp"
#include "oobsim/protocol.hpp"

namespace oobsim {

// ---------------------------------------------------------------------------
// Fault injection: display-side misbehavior and channel conditions. Faults
// only ever touch the rendered frames; the wireless adversary cannot forge
// the visual channel.
// ---------------------------------------------------------------------------

enum class FaultKind {
    SasBitFlip,     // displayed SAS bits flipped on one node
    SyncMissing,    // final sync flash never happens
    SyncPremature,  // sync LED on during a bit frame
    SyncDelayed,    // final sync flash late by whole frames (after capture ends)
    DistanceScale,  // camera closer/farther: whole layout scaled
    Displacement,   // camera/board shake over a frame range
};

struct FaultSpec {
    FaultKind kind = FaultKind::SasBitFlip;
    std::size_t node = 0;             // SasBitFlip, Sync*
    std::vector<std::size_t> bits;    // SasBitFlip
    std::size_t frame = 0;            // SyncPremature: bit-frame index
    std::size_t frames = 1;           // SyncDelayed: delay in frames
    double factor = 1.0;              // DistanceScale
    int dx = 0, dy = 0;               // Displacement
    std::size_t from_frame = 0;       // Displacement range, inclusive
    std::size_t to_frame = 0;
};

// ---------------------------------------------------------------------------
// Adversary actions by name (for config files); programmatic policies can
// carry arbitrary transforms instead.
// ---------------------------------------------------------------------------

struct AdversarySpec {
    std::uint32_t session = 0;
    int round = 1;
    std::string action;  // drop | delay | replay | substitute_pk | substitute_nonce
    TimeMs delay_ms = 0;
};

struct AdminPolicyConfig {
    double misclick_prob = 0.0;        // chance of turning off a passed node
    TimeMs ok_delay_ms = 3000;         // camera focus + OK press after Ready
    TimeMs decision_delay_ms = 10000;  // reading the result screen
};

struct ScenarioConfig {
    std::size_t n = 16;
    std::size_t k = 0;  // 0 -> sas_length(n)
    std::size_t data_leds = 2;
    TimeMs hold_ms = 250;
    int width = 640;
    int height = 480;
    int led_radius = 6;
    TimeMs delta_ms = 120000;  // default-acceptance window
    std::uint64_t seed = 1;
    TimeMs retry_delay_ms = 1000;
    NoiseModel noise;
    std::vector<FaultSpec> faults;
    std::vector<AdversarySpec> adversary;
    AdminPolicyConfig admin;
    DetectorConfig detector;
    ChannelConfig channel;

    std::size_t effective_k() const { return k != 0 ? k : sas_length(n); }

    void validate() const {
        if (n < 1) throw ConfigError("config: n must be >= 1");
        std::size_t kk = effective_k();
        if (kk < kMinProtocolSasBits || kk > kMaxProtocolSasBits)
            throw ConfigError("config: k outside the supported 8..32 range");
        if (data_leds < 1) throw ConfigError("config: data_leds must be >= 1");
        if (hold_ms < 1) throw ConfigError("config: hold_ms must be >= 1");
        for (const auto& f : faults) {
            bool per_node = f.kind == FaultKind::SasBitFlip || f.kind == FaultKind::SyncMissing ||
                            f.kind == FaultKind::SyncPremature || f.kind == FaultKind::SyncDelayed;
            if (per_node && f.node >= n) throw ConfigError("config: fault node out of range");
            if (f.kind == FaultKind::SasBitFlip)
                for (std::size_t b : f.bits)
                    if (b >= kk) throw ConfigError("config: fault bit index out of range");
        }
        for (const auto& a : adversary) {
            if (a.session >= n) throw ConfigError("config: adversary session out of range");
            if (a.round < 1 || a.round > 3) throw ConfigError("config: adversary round out of range");
        }
    }
};

// ---------------------------------------------------------------------------
// JSON parsing (strict: unknown keys are rejected)
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
    if (!j.is_object()) throw ConfigError("config: " + ctx + " must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown key \"" + item.key() + "\" in " + ctx);
    }
}

inline Rgb parse_rgb(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("config: " + ctx + " must be [r,g,b]");
    return Rgb{j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

inline NoiseModel parse_noise(const nlohmann::json& j) {
    require_keys(j, {"sigma", "ambient", "reflections", "displacement"}, "noise");
    NoiseModel noise;
    if (j.contains("sigma")) {
        if (j["sigma"].is_array()) {
            if (j["sigma"].size() != 3) throw ConfigError("config: sigma array must have 3 entries");
            for (int c = 0; c < 3; ++c)
                noise.sigma[static_cast<std::size_t>(c)] = j["sigma"][static_cast<std::size_t>(c)].get<double>();
        } else {
            double s = j["sigma"].get<double>();
            noise.sigma = {s, s, s};
        }
    }
    if (j.contains("ambient")) noise.ambient = parse_rgb(j["ambient"], "noise.ambient");
    if (j.contains("reflections")) {
        for (const auto& r : j["reflections"]) {
            require_keys(r, {"x", "y", "radius", "color"}, "noise.reflections[]");
            noise.reflections.push_back({r.at("x").get<int>(), r.at("y").get<int>(),
                                         r.at("radius").get<int>(),
                                         parse_rgb(r.at("color"), "reflection color")});
        }
    }
    if (j.contains("displacement")) {
        for (const auto& d : j["displacement"]) {
            require_keys(d, {"frame", "dx", "dy"}, "noise.displacement[]");
            std::size_t frame = d.at("frame").get<std::size_t>();
            if (noise.per_frame_displacement.size() <= frame)
                noise.per_frame_displacement.resize(frame + 1);
            noise.per_frame_displacement[frame] = {d.at("dx").get<int>(), d.at("dy").get<int>()};
        }
    }
    return noise;
}

inline FaultSpec parse_fault(const nlohmann::json& j) {
    require_keys(j,
                 {"kind", "node", "bits", "frame", "frames", "factor", "dx", "dy", "from_frame",
                  "to_frame"},
                 "faults[]");
    FaultSpec f;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "sas_bit_flip") f.kind = FaultKind::SasBitFlip;
    else if (kind == "sync_missing") f.kind = FaultKind::SyncMissing;
    else if (kind == "sync_premature") f.kind = FaultKind::SyncPremature;
    else if (kind == "sync_delayed") f.kind = FaultKind::SyncDelayed;
    else if (kind == "distance_scale") f.kind = FaultKind::DistanceScale;
    else if (kind == "displacement") f.kind = FaultKind::Displacement;
    else throw ConfigError("config: unknown fault kind \"" + kind + "\"");
    if (j.contains("node")) f.node = j["node"].get<std::size_t>();
    if (j.contains("bits")) f.bits = j["bits"].get<std::vector<std::size_t>>();
    if (j.contains("frame")) f.frame = j["frame"].get<std::size_t>();
    if (j.contains("frames")) f.frames = j["frames"].get<std::size_t>();
    if (j.contains("factor")) f.factor = j["factor"].get<double>();
    if (j.contains("dx")) f.dx = j["dx"].get<int>();
    if (j.contains("dy")) f.dy = j["dy"].get<int>();
    if (j.contains("from_frame")) f.from_frame = j["from_frame"].get<std::size_t>();
    if (j.contains("to_frame")) f.to_frame = j["to_frame"].get<std::size_t>();
    return f;
}

inline DetectorConfig parse_detector(const nlohmann::json& j) {
    require_keys(j,
                 {"threshold_start", "threshold_step", "threshold_floor", "min_run", "exclusion_px",
                  "window_half", "red_margin", "proximity_px"},
                 "detector");
    DetectorConfig d;
    if (j.contains("threshold_start")) d.threshold_start = j["threshold_start"].get<int>();
    if (j.contains("threshold_step")) d.threshold_step = j["threshold_step"].get<int>();
    if (j.contains("threshold_floor")) d.threshold_floor = j["threshold_floor"].get<int>();
    if (j.contains("min_run")) d.min_run = j["min_run"].get<int>();
    if (j.contains("exclusion_px")) d.exclusion_px = j["exclusion_px"].get<double>();
    if (j.contains("window_half")) d.window_half = j["window_half"].get<int>();
    if (j.contains("red_margin")) d.red_margin = j["red_margin"].get<int>();
    if (j.contains("proximity_px")) d.proximity_px = j["proximity_px"].get<double>();
    return d;
}

}  // namespace detail

inline ScenarioConfig parse_scenario_config(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"n", "k", "data_leds", "hold_ms", "width", "height", "led_radius",
                          "delta_ms", "seed", "retry_delay_ms", "noise", "faults", "adversary",
                          "admin", "detector", "channel"},
                         "top level");
    ScenarioConfig cfg;
    if (j.contains("n")) cfg.n = j["n"].get<std::size_t>();
    if (j.contains("k")) cfg.k = j["k"].get<std::size_t>();
    if (j.contains("data_leds")) cfg.data_leds = j["data_leds"].get<std::size_t>();
    if (j.contains("hold_ms")) cfg.hold_ms = j["hold_ms"].get<TimeMs>();
    if (j.contains("width")) cfg.width = j["width"].get<int>();
    if (j.contains("height")) cfg.height = j["height"].get<int>();
    if (j.contains("led_radius")) cfg.led_radius = j["led_radius"].get<int>();
    if (j.contains("delta_ms")) cfg.delta_ms = j["delta_ms"].get<TimeMs>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("retry_delay_ms")) cfg.retry_delay_ms = j["retry_delay_ms"].get<TimeMs>();
    if (j.contains("noise")) cfg.noise = detail::parse_noise(j["noise"]);
    if (j.contains("faults"))
        for (const auto& f : j["faults"]) cfg.faults.push_back(detail::parse_fault(f));
    if (j.contains("adversary")) {
        for (const auto& a : j["adversary"]) {
            detail::require_keys(a, {"session", "round", "action", "delay_ms"}, "adversary[]");
            AdversarySpec spec;
            spec.session = a.at("session").get<std::uint32_t>();
            spec.round = a.at("round").get<int>();
            spec.action = a.at("action").get<std::string>();
            if (a.contains("delay_ms")) spec.delay_ms = a["delay_ms"].get<TimeMs>();
            cfg.adversary.push_back(std::move(spec));
        }
    }
    if (j.contains("admin")) {
        detail::require_keys(j["admin"], {"misclick_prob", "ok_delay_ms", "decision_delay_ms"},
                             "admin");
        if (j["admin"].contains("misclick_prob"))
            cfg.admin.misclick_prob = j["admin"]["misclick_prob"].get<double>();
        if (j["admin"].contains("ok_delay_ms"))
            cfg.admin.ok_delay_ms = j["admin"]["ok_delay_ms"].get<TimeMs>();
        if (j["admin"].contains("decision_delay_ms"))
            cfg.admin.decision_delay_ms = j["admin"]["decision_delay_ms"].get<TimeMs>();
    }
    if (j.contains("detector")) cfg.detector = detail::parse_detector(j["detector"]);
    if (j.contains("channel")) {
        detail::require_keys(j["channel"], {"transit_ms", "timeout_ms", "replay_gap_ms"}, "channel");
        if (j["channel"].contains("transit_ms"))
            cfg.channel.transit_ms = j["channel"]["transit_ms"].get<TimeMs>();
        if (j["channel"].contains("timeout_ms"))
            cfg.channel.timeout_ms = j["channel"]["timeout_ms"].get<TimeMs>();
        if (j["channel"].contains("replay_gap_ms"))
            cfg.channel.replay_gap_ms = j["channel"]["replay_gap_ms"].get<TimeMs>();
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_scenario_config(j);
}

/// Config echo for the report (and for writing default configs).
inline nlohmann::json scenario_config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json noise{{"sigma", {cfg.noise.sigma[0], cfg.noise.sigma[1], cfg.noise.sigma[2]}},
                         {"ambient", {cfg.noise.ambient.r, cfg.noise.ambient.g, cfg.noise.ambient.b}}};
    nlohmann::json faults = nlohmann::json::array();
    for (const auto& f : cfg.faults) {
        const char* kind = nullptr;
        switch (f.kind) {
            case FaultKind::SasBitFlip: kind = "sas_bit_flip"; break;
            case FaultKind::SyncMissing: kind = "sync_missing"; break;
            case FaultKind::SyncPremature: kind = "sync_premature"; break;
            case FaultKind::SyncDelayed: kind = "sync_delayed"; break;
            case FaultKind::DistanceScale: kind = "distance_scale"; break;
            case FaultKind::Displacement: kind = "displacement"; break;
        }
        faults.push_back({{"kind", kind},
                          {"node", f.node},
                          {"bits", f.bits},
                          {"frame", f.frame},
                          {"frames", f.frames},
                          {"factor", f.factor},
                          {"dx", f.dx},
                          {"dy", f.dy},
                          {"from_frame", f.from_frame},
                          {"to_frame", f.to_frame}});
    }
    nlohmann::json adversary = nlohmann::json::array();
    for (const auto& a : cfg.adversary)
        adversary.push_back({{"session", a.session},
                             {"round", a.round},
                             {"action", a.action},
                             {"delay_ms", a.delay_ms}});
    return nlohmann::json{{"n", cfg.n},
                          {"k", cfg.effective_k()},
                          {"data_leds", cfg.data_leds},
                          {"hold_ms", cfg.hold_ms},
                          {"width", cfg.width},
                          {"height", cfg.height},
                          {"led_radius", cfg.led_radius},
                          {"delta_ms", cfg.delta_ms},
                          {"seed", cfg.seed},
                          {"noise", noise},
                          {"faults", faults},
                          {"adversary", adversary}};
}

}  // namespace oobsim

#endif  // OOBSIM_CONFIG_HPP
