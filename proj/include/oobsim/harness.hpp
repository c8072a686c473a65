#ifndef OOBSIM_HARNESS_HPP
#define OOBSIM_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oobsim/config.hpp"
#include "oobsim/decoder.hpp"
#include "oobsim/encoder.hpp"
#include "oobsim/protocol.hpp"

namespace oobsim {

// ---------------------------------------------------------------------------
// SAS matching: decoded values against the sink's free list
// ---------------------------------------------------------------------------

/// Free-list matching. Every decoded SAS may consume at most one computed
/// value (lowest free index on ties across sessions); identical decoded
/// values are all rejected together with any computed entries equal to them,
/// so one on-screen value can never validate two displays.
struct MatchResult {
    struct ExtractedEntry {
        MatchStatus status = MatchStatus::Mismatched;
        std::optional<std::size_t> matched_computed;
    };
    struct ComputedEntry {
        MatchStatus status = MatchStatus::Free;
        std::optional<std::size_t> matched_extracted;
    };
    std::vector<ExtractedEntry> extracted;
    std::vector<ComputedEntry> computed;
};

inline MatchResult match_sas(const std::vector<BitString>& extracted,
                             const std::vector<SasValue>& computed) {
    std::size_t k = 0;
    for (const auto& e : extracted) {
        if (k == 0) k = e.size();
        if (e.size() != k) throw LengthMismatchError("match_sas: extracted lengths differ");
    }
    for (const auto& c : computed) {
        if (k == 0) k = c.k();
        if (c.k() != k) throw LengthMismatchError("match_sas: computed length differs");
    }
    MatchResult result;
    result.extracted.resize(extracted.size());
    result.computed.resize(computed.size());

    std::map<std::string, int> extraction_count;
    for (const auto& e : extracted) ++extraction_count[e.to_hex()];

    for (std::size_t i = 0; i < extracted.size(); ++i) {
        if (extraction_count[extracted[i].to_hex()] > 1) {
            result.extracted[i].status = MatchStatus::Mismatched;
            for (std::size_t j = 0; j < computed.size(); ++j)
                if (computed[j].value == extracted[i])
                    result.computed[j].status = MatchStatus::Mismatched;
        }
    }
    for (std::size_t i = 0; i < extracted.size(); ++i) {
        if (extraction_count[extracted[i].to_hex()] > 1) continue;
        bool matched = false;
        for (std::size_t j = 0; j < computed.size(); ++j) {
            if (result.computed[j].status != MatchStatus::Free) continue;
            if (computed[j].value == extracted[i]) {
                result.computed[j].status = MatchStatus::Used;
                result.computed[j].matched_extracted = i;
                result.extracted[i].status = MatchStatus::Used;
                result.extracted[i].matched_computed = j;
                matched = true;
                break;
            }
        }
        if (!matched) result.extracted[i].status = MatchStatus::Mismatched;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct PowerEstimate {
    double joules = 0;
    double battery_fraction = 0;  // of one battery charge; *100 for percent
};

inline PowerEstimate power_estimate(double volts, double amps, double seconds, int led_count,
                                    double battery_joules = 30780.0) {
    if (volts < 0 || amps < 0 || seconds < 0 || led_count < 0)
        throw ConfigError("power_estimate: negative input");
    PowerEstimate est;
    est.joules = led_count * volts * amps * seconds;
    est.battery_fraction = battery_joules > 0 ? est.joules / battery_joules : 0.0;
    return est;
}

inline TimeMs timing_estimate(std::size_t k, std::size_t data_leds, TimeMs hold_ms) {
    return schedule_duration(k, data_leds, hold_ms);
}

// ---------------------------------------------------------------------------
// Batch report
// ---------------------------------------------------------------------------

enum class VerdictCause { None, SasMismatch, SyncError, Both, Protocol, Camera };

inline const char* verdict_cause_name(VerdictCause c) {
    switch (c) {
        case VerdictCause::None: return "none";
        case VerdictCause::SasMismatch: return "sas_mismatch";
        case VerdictCause::SyncError: return "sync_error";
        case VerdictCause::Both: return "both";
        case VerdictCause::Protocol: return "protocol";
        case VerdictCause::Camera: return "camera";
    }
    return "?";
}

inline const char* match_status_name(MatchStatus s) {
    switch (s) {
        case MatchStatus::Free: return "free";
        case MatchStatus::Used: return "used";
        case MatchStatus::Mismatched: return "mismatched";
    }
    return "?";
}

inline const char* node_state_name(NodeSession::State s) {
    switch (s) {
        case NodeSession::State::Idle: return "idle";
        case NodeSession::State::Committed: return "committed";
        case NodeSession::State::AwaitingStart: return "awaiting_start";
        case NodeSession::State::SasEmitted: return "sas_emitted";
        case NodeSession::State::AwaitingDecision: return "awaiting_decision";
        case NodeSession::State::Accepted: return "accepted";
        case NodeSession::State::Rejected: return "rejected";
        case NodeSession::State::Failed: return "failed";
    }
    return "?";
}

struct NodeReport {
    std::uint32_t session_id = 0;
    bool passed = false;
    VerdictCause cause = VerdictCause::None;
    FailureCause protocol_cause = FailureCause::None;
    MatchStatus expected_status = MatchStatus::Free;
    bool sync_ok = false;
    std::string expected_sas_hex;   // empty when the sink never computed one
    std::string extracted_sas_hex;  // from this node's own display, if decoded
    bool turned_off = false;
    std::string node_state;
    std::string node_link_fp;  // first 8 hex chars of sha256(link key)
    std::string sink_link_fp;
};

struct ClusterReport {
    std::size_t index = 0;
    int node_index = -1;       // physical display this cluster sits on (admin's view)
    int matched_session = -1;  // session bound by SAS matching, never by geometry
    double cx = 0, cy = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // bounding box over the cluster's LEDs
    std::string sas_hex;
    bool sync_ok = false;
    bool passed = false;
    VerdictCause cause = VerdictCause::None;
};

struct BatchTallies {
    int passed = 0;
    int failed = 0;
    int sas_mismatch = 0;
    int sync_error = 0;
    int both = 0;
    int protocol = 0;
    int camera = 0;
};

struct BatchReport {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t data_leds = 0;
    std::size_t frame_count = 0;
    TimeMs duration_ms = 0;
    TimeMs protocol_ms = 0;
    TimeMs st_time_ms = 0;
    TimeMs first_capture_ms = 0;
    TimeMs last_capture_ms = 0;
    TimeMs decision_ms = 0;
    bool retry_used = false;
    bool aborted = false;
    std::string abort_reason;
    std::vector<NodeReport> per_node;
    std::vector<ClusterReport> clusters;
    BatchTallies tallies;
};

struct ReportRender {
    RasterImage overlay;
    std::string table;
};

/// Result screen: green rectangle around each passed display, red cross over
/// each failed one, plus a plain-text table with per-node causes.
inline ReportRender render_report(const BatchReport& report, const LedLayout& layout) {
    ReportRender out;
    if (layout.nodes.empty()) {
        out.overlay = RasterImage(layout.width, layout.height, kAmbientColor);
    } else {
        FrameStates all_on;
        all_on.kind = FrameKind::AllOn;
        for (const auto& node : layout.nodes)
            all_on.nodes.push_back({true, std::vector<bool>(node.data_leds.size(), true)});
        out.overlay = render_frame(layout, all_on, NoiseModel{}, 0);
    }
    const Rgb green{0, 220, 0};
    const Rgb red{230, 0, 0};
    for (const auto& cluster : report.clusters) {
        int x0 = cluster.x0 - 4, y0 = cluster.y0 - 4;
        int x1 = cluster.x1 + 4, y1 = cluster.y1 + 4;
        if (cluster.passed) {
            draw_rect_outline(out.overlay, x0, y0, x1, y1, green, 2);
        } else {
            draw_line(out.overlay, x0, y0, x1, y1, red);
            draw_line(out.overlay, x0, y0 + 1, x1, y1 + 1, red);
            draw_line(out.overlay, x0, y1, x1, y0, red);
            draw_line(out.overlay, x0, y1 - 1, x1, y0 - 1, red);
        }
    }
    for (const auto& node : report.per_node) {
        out.table += "node " + std::to_string(node.session_id) + "  " +
                     (node.passed ? "PASSED" : "FAILED") +
                     (node.passed ? "" : std::string("  ") + verdict_cause_name(node.cause)) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

struct ScenarioResult {
    BatchReport report;
    FrameSchedule schedule;           // as displayed, faults applied
    LedLayout layout;                 // as rendered (distance scale applied)
    std::vector<RasterImage> frames;  // captured frames of the final attempt
    RasterImage overlay;
    std::string table;
    std::vector<TranscriptRecord> transcript;
};

namespace detail {

inline void apply_fault_to_schedule(FrameSchedule& schedule, const FaultSpec& fault,
                                    std::size_t node_count) {
    const std::size_t bit_frames = schedule.bit_frame_count();
    switch (fault.kind) {
        case FaultKind::SasBitFlip:
            for (std::size_t bit : fault.bits) {
                std::size_t j = bit / schedule.data_leds;
                std::size_t m = bit % schedule.data_leds;
                if (fault.node < node_count && j < bit_frames) {
                    auto& state = schedule.frames[2 + j].nodes[fault.node];
                    state.data[m] = !state.data[m];
                }
            }
            break;
        case FaultKind::SyncMissing:
        case FaultKind::SyncDelayed:
            // a flash delayed past the final capture is never seen
            if (fault.node < node_count) schedule.frames.back().nodes[fault.node].sync = false;
            break;
        case FaultKind::SyncPremature:
            if (fault.node < node_count && fault.frame < bit_frames)
                schedule.frames[2 + fault.frame].nodes[fault.node].sync = true;
            break;
        case FaultKind::DistanceScale:
        case FaultKind::Displacement:
            break;  // applied to layout / noise model
    }
}

inline AdversaryPolicy build_adversary_policy(const ScenarioConfig& config,
                                              const Bytes& scenario_seed) {
    AdversaryPolicy policy;
    for (std::size_t i = 0; i < config.adversary.size(); ++i) {
        const AdversarySpec& spec = config.adversary[i];
        if (spec.action == "drop") {
            policy.set(spec.session, spec.round, AdversaryAction::drop());
        } else if (spec.action == "delay") {
            policy.set(spec.session, spec.round, AdversaryAction::delay(spec.delay_ms));
        } else if (spec.action == "replay") {
            policy.set(spec.session, spec.round, AdversaryAction::replay());
        } else if (spec.action == "substitute_pk" || spec.action == "substitute_nonce") {
            Bytes adv_seed = derive_bytes(scenario_seed, "adversary." + std::to_string(i), 32);
            KeyPair adv_keys = keygen(adv_seed);
            bool swap_pk = spec.action == "substitute_pk";
            std::size_t k = config.effective_k();
            policy.set(spec.session, spec.round,
                       AdversaryAction::substitute([adv_keys, adv_seed, swap_pk,
                                                    k](const WirelessMessage& msg) {
                           WirelessMessage forged = msg;
                           if (swap_pk) {
                               forged.pk = adv_keys.public_key;
                           } else if (!msg.nonce.empty()) {
                               forged.nonce = derive_bits(adv_seed, "nonce", msg.nonce.size());
                           } else {
                               forged.commitment = derive_bytes(adv_seed, "commitment", 32);
                           }
                           return forged;
                       }));
        } else {
            throw ConfigError("config: unknown adversary action \"" + spec.action + "\"");
        }
    }
    return policy;
}

inline std::string link_fingerprint(const Bytes& key) {
    return key.empty() ? std::string() : to_hex(sha256(key)).substr(0, 8);
}

}  // namespace detail

/// Full initialization batch: wireless protocol rounds, simultaneous SAS
/// display, capture + decode, free-list matching, result screen, and the
/// default-acceptance administrator step. Deterministic for a fixed config.
inline ScenarioResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const std::size_t n = config.n;
    const std::size_t k = config.effective_k();
    const std::size_t n_data = config.data_leds;

    ScenarioResult result;
    BatchReport& report = result.report;
    report.n = n;
    report.k = k;
    report.data_leds = n_data;

    LedLayout layout =
        make_grid_layout(n, n_data, config.width, config.height, config.led_radius);
    double scale = 1.0;
    for (const auto& fault : config.faults)
        if (fault.kind == FaultKind::DistanceScale) scale *= fault.factor;
    if (scale != 1.0) layout = scale_layout(layout, scale);
    result.layout = layout;

    const Bytes scenario_seed = batch_seed_bytes(config.seed);
    AdversaryPolicy policy = detail::build_adversary_policy(config, scenario_seed);
    BatchRun batch = run_batch(n, k, policy, config.seed, config.channel);
    result.transcript = std::move(batch.transcript);
    report.protocol_ms = batch.clock;

    std::vector<bool> transmits(n);
    std::size_t ready_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        transmits[i] = batch.nodes[i].state() == NodeSession::State::AwaitingStart;
        if (transmits[i]) ++ready_count;
    }

    // Displayed schedule: protocol-failed nodes stay dark through every frame.
    std::vector<SasValue> sas_all;
    sas_all.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        sas_all.push_back(transmits[i] ? batch.nodes[i].sas() : SasValue{BitString(k)});
    FrameSchedule schedule = build_schedule(sas_all, layout, config.hold_ms);
    for (const auto& fault : config.faults)
        detail::apply_fault_to_schedule(schedule, fault, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (transmits[i]) continue;
        for (auto& frame : schedule.frames) {
            frame.nodes[i].sync = false;
            frame.nodes[i].data.assign(frame.nodes[i].data.size(), false);
        }
    }
    result.schedule = schedule;
    report.frame_count = schedule.frames.size();
    report.duration_ms = schedule.duration_ms();

    NoiseModel noise = config.noise;
    for (const auto& fault : config.faults) {
        if (fault.kind != FaultKind::Displacement) continue;
        std::size_t last = std::min(fault.to_frame, schedule.frames.size() - 1);
        if (noise.per_frame_displacement.size() <= last)
            noise.per_frame_displacement.resize(last + 1);
        for (std::size_t f = fault.from_frame; f <= last; ++f)
            noise.per_frame_displacement[f] = {fault.dx, fault.dy};
    }

    // SAS transmission phase, with a single camera-adjustment retry.
    std::optional<DecodeOutcome> decode;
    CapturePlan plan;
    TimeMs st_time = batch.clock + config.admin.ok_delay_ms;
    const int expected_leds = static_cast<int>(ready_count * (n_data + 1));
    if (ready_count > 0) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            result.frames =
                render_schedule(layout, schedule, noise, mix_seed(config.seed, 0xF0A0 + attempt));
            plan = capture_plan(st_time, config.hold_ms, result.frames.size());
            try {
                decode = decode_session(result.frames, k, n_data, config.detector, expected_leds);
                break;
            } catch (const DetectionIncompleteError&) {
            } catch (const ClusterInvalidError&) {
            }
            // only the SAS transmission repeats; the wireless phase stands
            if (attempt == 0) {
                report.retry_used = true;
                st_time = plan.timestamps.back() + config.retry_delay_ms;
            } else {
                report.aborted = true;
                report.abort_reason = "camera_adjustment_error";
            }
        }
    }
    report.st_time_ms = st_time;
    if (!plan.timestamps.empty()) {
        report.first_capture_ms = plan.timestamps.front();
        report.last_capture_ms = plan.timestamps.back();
    }

    // Matching: computed free list over sessions whose sink reached a SAS.
    std::vector<SasValue> computed;
    std::vector<std::size_t> computed_session;
    for (std::size_t i = 0; i < n; ++i) {
        if (batch.sinks[i].state() == SinkSession::State::SasComputed) {
            computed.push_back(*batch.sinks[i].expected_sas());
            computed_session.push_back(i);
        }
    }
    std::vector<BitString> extracted;
    std::vector<int> cluster_node;  // positional display index per cluster
    if (decode) {
        for (const auto& cd : decode->clusters) {
            extracted.push_back(cd.sas);
            double best = 1e18;
            int best_node = -1;
            for (std::size_t i = 0; i < layout.nodes.size(); ++i) {
                double dx = cd.cluster.sync_led.cx - layout.nodes[i].sync_led.cx;
                double dy = cd.cluster.sync_led.cy - layout.nodes[i].sync_led.cy;
                double d2 = dx * dx + dy * dy;
                if (d2 < best) {
                    best = d2;
                    best_node = static_cast<int>(i);
                }
            }
            cluster_node.push_back(best_node);
        }
    }
    MatchResult match;
    if (decode) match = match_sas(extracted, computed);

    std::map<std::size_t, std::size_t> session_to_computed;
    for (std::size_t j = 0; j < computed_session.size(); ++j)
        session_to_computed[computed_session[j]] = j;
    std::map<int, std::size_t> node_to_cluster;
    for (std::size_t c = 0; c < cluster_node.size(); ++c)
        if (cluster_node[c] >= 0) node_to_cluster.emplace(cluster_node[c], c);

    for (auto& sink : batch.sinks) {
        auto it = session_to_computed.find(sink.id());
        if (it == session_to_computed.end() || !decode) continue;
        const auto& centry = match.computed[it->second];
        sink.match_status = centry.status;
        if (centry.status == MatchStatus::Used)
            sink.sync_status = decode->clusters[*centry.matched_extracted].sync_ok
                                   ? SyncStatus::Ok
                                   : SyncStatus::Error;
    }

    // Per-node verdicts. A session passes only when its computed SAS was
    // consumed by exactly one decoded value and that display's sync pattern
    // checked out.
    report.per_node.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        NodeReport& entry = report.per_node[i];
        entry.session_id = static_cast<std::uint32_t>(i);
        entry.protocol_cause = batch.sinks[i].cause() != FailureCause::None
                                   ? batch.sinks[i].cause()
                                   : batch.nodes[i].cause();
        auto cit = session_to_computed.find(i);
        if (cit != session_to_computed.end())
            entry.expected_sas_hex = computed[cit->second].to_hex();

        auto nit = node_to_cluster.find(static_cast<int>(i));
        bool positional_sync = false;
        if (nit != node_to_cluster.end() && decode) {
            entry.extracted_sas_hex = decode->clusters[nit->second].sas.to_hex();
            positional_sync = decode->clusters[nit->second].sync_ok;
        }

        if (report.aborted || (!decode && ready_count > 0)) {
            entry.passed = false;
            entry.cause = VerdictCause::Camera;
        } else if (cit == session_to_computed.end() || !transmits[i]) {
            entry.passed = false;
            entry.cause = VerdictCause::Protocol;
        } else {
            const auto& centry = match.computed[cit->second];
            entry.expected_status = centry.status;
            if (centry.status == MatchStatus::Used) {
                std::size_t cluster = *centry.matched_extracted;
                entry.sync_ok = decode->clusters[cluster].sync_ok;
                entry.passed = entry.sync_ok;
                entry.cause = entry.passed ? VerdictCause::None : VerdictCause::SyncError;
            } else {
                entry.passed = false;
                entry.sync_ok = positional_sync;
                entry.cause = positional_sync ? VerdictCause::SasMismatch : VerdictCause::Both;
                if (nit == node_to_cluster.end()) entry.cause = VerdictCause::SasMismatch;
            }
        }
    }

    // Per-cluster verdicts for the result screen.
    if (decode) {
        for (std::size_t c = 0; c < decode->clusters.size(); ++c) {
            const auto& cd = decode->clusters[c];
            ClusterReport cr;
            cr.index = c;
            cr.node_index = cluster_node[c];
            if (match.extracted[c].matched_computed)
                cr.matched_session =
                    static_cast<int>(computed_session[*match.extracted[c].matched_computed]);
            cr.cx = cd.cluster.sync_led.cx;
            cr.cy = cd.cluster.sync_led.cy;
            double x0 = cd.cluster.sync_led.cx - cd.cluster.sync_led.width / 2.0;
            double y0 = cd.cluster.sync_led.cy - cd.cluster.sync_led.height / 2.0;
            double x1 = cd.cluster.sync_led.cx + cd.cluster.sync_led.width / 2.0;
            double y1 = cd.cluster.sync_led.cy + cd.cluster.sync_led.height / 2.0;
            for (const auto& led : cd.cluster.data_leds) {
                x0 = std::min(x0, led.cx - led.width / 2.0);
                y0 = std::min(y0, led.cy - led.height / 2.0);
                x1 = std::max(x1, led.cx + led.width / 2.0);
                y1 = std::max(y1, led.cy + led.height / 2.0);
            }
            cr.x0 = static_cast<int>(std::floor(x0));
            cr.y0 = static_cast<int>(std::floor(y0));
            cr.x1 = static_cast<int>(std::ceil(x1));
            cr.y1 = static_cast<int>(std::ceil(y1));
            cr.sas_hex = cd.sas.to_hex();
            cr.sync_ok = cd.sync_ok;
            bool used = match.extracted[c].status == MatchStatus::Used;
            cr.passed = used && cd.sync_ok;
            if (!cr.passed)
                cr.cause = !used && !cd.sync_ok ? VerdictCause::Both
                           : !used             ? VerdictCause::SasMismatch
                                               : VerdictCause::SyncError;
            report.clusters.push_back(std::move(cr));
        }
    }

    // Administrator: turn off exactly what the screen shows as failed (plus
    // optional misclicks on passed nodes), then the default-acceptance
    // deadline decides everything left on.
    TimeMs decision_time = (ready_count > 0 ? plan.timestamps.back() : st_time) +
                           config.admin.decision_delay_ms;
    report.decision_ms = decision_time;
    std::mt19937_64 misclick_rng(mix_seed(config.seed, 0xAD31));
    for (std::size_t i = 0; i < n; ++i) {
        NodeReport& entry = report.per_node[i];
        // one draw per node regardless of verdict keeps nodes independent
        double roll = std::uniform_real_distribution<double>(0.0, 1.0)(misclick_rng);
        bool turn_off = !entry.passed;
        if (entry.passed && config.admin.misclick_prob > 0 && roll < config.admin.misclick_prob)
            turn_off = true;
        entry.turned_off = turn_off;

        NodeSession& node = batch.nodes[i];
        if (transmits[i] && !report.aborted) {
            node.start_transmission(st_time);
            node.transmission_done(st_time + config.channel.transit_ms + schedule.duration_ms(),
                                   config.delta_ms);
            if (turn_off) {
                node.finalize(true, decision_time);
            } else {
                node.finalize(false, node.deadline());
            }
        }
        entry.node_state = node_state_name(node.state());
        if (node.state() == NodeSession::State::Accepted)
            entry.node_link_fp = detail::link_fingerprint(node.link_key());
        if (entry.passed) entry.sink_link_fp = detail::link_fingerprint(batch.sinks[i].derive_link());
    }

    for (const auto& entry : report.per_node) {
        if (entry.passed) {
            ++report.tallies.passed;
            continue;
        }
        ++report.tallies.failed;
        switch (entry.cause) {
            case VerdictCause::SasMismatch: ++report.tallies.sas_mismatch; break;
            case VerdictCause::SyncError: ++report.tallies.sync_error; break;
            case VerdictCause::Both: ++report.tallies.both; break;
            case VerdictCause::Protocol: ++report.tallies.protocol; break;
            case VerdictCause::Camera: ++report.tallies.camera; break;
            case VerdictCause::None: break;
        }
    }

    ReportRender render = render_report(report, layout);
    result.overlay = std::move(render.overlay);
    result.table = std::move(render.table);
    return result;
}

// ---------------------------------------------------------------------------
// Attack experiments
// ---------------------------------------------------------------------------

enum class AttackStrategy { RandomGuess, Exhaustive };

struct AttackResult {
    std::size_t trials = 0;
    std::size_t runs = 0;  // protocol executions (trials * 2^k when exhaustive)
    std::size_t successes = 0;
    double rate = 0;
    double bound = 0;  // n * 2^-k
    double std_error = 0;
    double ci99_half = 0;
};

/// Wireless substitution attack against one session of an n-node batch. The
/// visual channel is authenticated, so decoded values are exactly the SAS
/// values the nodes computed; an attack succeeds only when the tampered
/// session still matches a free computed value.
inline AttackResult attack_experiment(std::size_t n, std::size_t k, std::size_t trials,
                                      AttackStrategy strategy, std::uint64_t seed) {
    if (n < 1 || k < 1 || k > 32) throw ConfigError("attack_experiment: bad n or k");
    if (trials < 1) throw ConfigError("attack_experiment: need at least one trial");
    if (strategy == AttackStrategy::Exhaustive && k > 16)
        throw ConfigError("attack_experiment: exhaustive strategy needs k <= 16");

    const Bytes exp_seed = batch_seed_bytes(mix_seed(seed, 0xA77AC4));
    BatchKeys keys;
    keys.sink = keygen(derive_bytes(exp_seed, "sink.key", 32));
    for (std::size_t i = 0; i < n; ++i)
        keys.nodes.push_back(keygen(derive_bytes(exp_seed, "node." + std::to_string(i), 32)));
    const KeyPair adversary_keys = keygen(derive_bytes(exp_seed, "adv.key", 32));

    // Drives the session state machines directly: the batch runner's config
    // guard pins k to deployable sizes, while experiments shrink k down to
    // brute-forceable ranges.
    auto run_once = [&](std::uint64_t trial_seed,
                        const std::function<WirelessMessage(const WirelessMessage&)>& forge) {
        Bytes batch = batch_seed_bytes(trial_seed);
        std::vector<BitString> decoded;
        std::vector<SasValue> computed;
        std::optional<std::size_t> target;  // session 0's slot in the free list
        for (std::uint32_t sid = 0; sid < n; ++sid) {
            Bytes session_seed = derive_bytes(batch, "session." + std::to_string(sid), 32);
            NodeSession node(sid, k, session_seed, keys.nodes[sid]);
            SinkSession sink(sid, k, keys.sink, session_seed);
            WirelessMessage r2 = sink.round2(node.round1());
            WirelessMessage r3 = node.round3(sid == 0 ? forge(r2) : r2);
            sink.receive_decommit(r3);
            decoded.push_back(node.sas().value);
            if (sid == 0) target = computed.size();
            computed.push_back(*sink.expected_sas());
        }
        if (!target) return false;
        MatchResult match = match_sas(decoded, computed);
        return match.computed[*target].status == MatchStatus::Used;
    };

    AttackResult result;
    result.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        std::uint64_t trial_seed = mix_seed(seed, t);
        if (strategy == AttackStrategy::RandomGuess) {
            BitString r_e = derive_bits(batch_seed_bytes(trial_seed), "adv.re", k);
            bool hit = run_once(trial_seed, [&](const WirelessMessage& msg) {
                WirelessMessage forged = msg;
                forged.pk = adversary_keys.public_key;
                forged.nonce = r_e;
                return forged;
            });
            ++result.runs;
            if (hit) ++result.successes;
        } else {
            for (std::uint64_t g = 0; g < (std::uint64_t{1} << k); ++g) {
                BitString delta = BitString::from_uint(g, k);
                bool hit = run_once(trial_seed, [&](const WirelessMessage& msg) {
                    WirelessMessage forged = msg;
                    forged.pk = adversary_keys.public_key;
                    forged.nonce = msg.nonce ^ delta;
                    return forged;
                });
                ++result.runs;
                if (hit) ++result.successes;
            }
        }
    }
    result.rate = static_cast<double>(result.successes) / static_cast<double>(result.runs);
    result.bound = static_cast<double>(n) * std::pow(2.0, -static_cast<double>(k));
    result.std_error = std::sqrt(result.bound * (1.0 - result.bound) /
                                 static_cast<double>(result.runs));
    result.ci99_half = 2.576 * std::sqrt(std::max(result.rate * (1.0 - result.rate),
                                                  result.bound * (1.0 - result.bound)) /
                                         static_cast<double>(result.runs));
    return result;
}

}  // namespace oobsim

#endif  // OOBSIM_HARNESS_HPP
