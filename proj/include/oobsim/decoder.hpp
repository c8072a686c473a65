#ifndef OOBSIM_DECODER_HPP
#define OOBSIM_DECODER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "oobsim/bitstring.hpp"
#include "oobsim/common.hpp"
#include "oobsim/image.hpp"

namespace oobsim {

// ---------------------------------------------------------------------------
// Capture timing
// ---------------------------------------------------------------------------

/// Capture timestamps for one transmission: the first frame is grabbed an
/// "initial waiting" of 0.6 x hold time after the Start Transmission signal,
/// which centers every capture inside a hold interval, then one frame per
/// hold time.
struct CapturePlan {
    TimeMs st_time = 0;
    TimeMs initial_wait = 0;
    std::vector<TimeMs> timestamps;
};

inline CapturePlan capture_plan(TimeMs st_time, TimeMs hold_time_ms, std::size_t frame_count) {
    if (frame_count < 1) throw ConfigError("capture_plan: need at least one frame");
    CapturePlan plan;
    plan.st_time = st_time;
    plan.initial_wait = hold_time_ms * 3 / 5;
    plan.timestamps.reserve(frame_count);
    for (std::size_t i = 0; i < frame_count; ++i)
        plan.timestamps.push_back(st_time + plan.initial_wait + i * hold_time_ms);
    return plan;
}

// ---------------------------------------------------------------------------
// LED detection on the All-ON / All-OFF difference map
// ---------------------------------------------------------------------------

/// Per-pixel max(dR,dG,dB) between the calibration frames.
struct DeltaMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mu;

    std::uint8_t at(int x, int y) const { return mu[static_cast<std::size_t>(y) * width + x]; }
};

inline DeltaMap pixel_delta(const RasterImage& all_off, const RasterImage& all_on) {
    if (all_off.width() != all_on.width() || all_off.height() != all_on.height())
        throw DimensionMismatchError("pixel_delta: frame dimensions differ");
    DeltaMap map;
    map.width = all_off.width();
    map.height = all_off.height();
    map.mu.resize(static_cast<std::size_t>(map.width) * map.height);
    const auto& a = all_off.pixels();
    const auto& b = all_on.pixels();
    for (std::size_t i = 0, p = 0; p < map.mu.size(); ++p, i += 3) {
        int d0 = std::abs(int(a[i]) - int(b[i]));
        int d1 = std::abs(int(a[i + 1]) - int(b[i + 1]));
        int d2 = std::abs(int(a[i + 2]) - int(b[i + 2]));
        map.mu[p] = static_cast<std::uint8_t>(std::max({d0, d1, d2}));
    }
    return map;
}

enum class LedRole { Unknown, Sync, Data };

struct DetectedLed {
    double cx = 0;
    double cy = 0;
    int width = 0;   // horizontal extent through the center row
    int height = 0;  // vertical extent through the center column
    std::array<double, 3> on_rgb{};
    std::array<double, 3> off_rgb{};
    LedRole role = LedRole::Unknown;
};

struct DetectorConfig {
    int threshold_start = 200;
    int threshold_step = 16;
    int threshold_floor = 48;
    int min_run = 3;              // shortest accepted run of bright pixels
    double exclusion_px = 12.0;   // 2x the expected LED radius; capped per pair below
    int window_half = 2;          // safeness check window is (2h+1)^2
    int red_margin = 32;          // sync LEDs are red-dominant by this margin
    double proximity_px = 0.0;    // clustering distance; 0 -> from measured widths
};

namespace detail {

/// Extends from (x, y) along one axis while pixels stay above tau, healing
/// single-pixel gaps (sensor noise can dip one pixel of a lit LED below the
/// threshold without there being two separate blobs).
inline int walk_extent(const DeltaMap& map, int tau, int x, int y, int dx, int dy) {
    int cx = x, cy = y;
    while (true) {
        int nx = cx + dx, ny = cy + dy;
        if (nx < 0 || nx >= map.width || ny < 0 || ny >= map.height) break;
        if (map.at(nx, ny) > tau) {
            cx = nx;
            cy = ny;
            continue;
        }
        int fx = nx + dx, fy = ny + dy;
        if (fx < 0 || fx >= map.width || fy < 0 || fy >= map.height) break;
        if (map.at(fx, fy) <= tau) break;
        cx = fx;
        cy = fy;
    }
    return dx != 0 ? cx : cy;
}

/// Walks the four axis rays from a candidate and returns the refined center
/// and extent of the bright region ("centeredness" of a row-run hit).
inline void refine_blob(const DeltaMap& map, int tau, int cx0, int y0, double& cx, double& cy,
                        int& width, int& height) {
    int top = walk_extent(map, tau, cx0, y0, 0, -1);
    int bot = walk_extent(map, tau, cx0, y0, 0, 1);
    int mid_y = (top + bot) / 2;
    int left = walk_extent(map, tau, cx0, mid_y, -1, 0);
    int right = walk_extent(map, tau, cx0, mid_y, 1, 0);
    cx = (left + right) / 2.0;
    cy = (top + bot) / 2.0;
    width = right - left + 1;
    height = bot - top + 1;
}

inline bool window_majority(const DeltaMap& map, int tau, int cx, int cy, int half) {
    int above = 0, total = 0;
    for (int y = cy - half; y <= cy + half; ++y) {
        for (int x = cx - half; x <= cx + half; ++x) {
            if (x < 0 || x >= map.width || y < 0 || y >= map.height) continue;
            ++total;
            if (map.at(x, y) > tau) ++above;
        }
    }
    return total > 0 && 2 * above > total;
}

/// Groups 1-D positions into rows: sorted values belong to the same row while
/// consecutive gaps stay within `tolerance`. Returns the row index per input.
inline std::vector<int> group_rows(const std::vector<double>& values, double tolerance) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<int> row(values.size(), 0);
    int current = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && values[order[i]] - values[order[i - 1]] > tolerance) ++current;
        row[order[i]] = current;
    }
    return row;
}

}  // namespace detail

/// Iterative threshold sweep: binarize rows at tau, accept runs of bright
/// pixels as LEDs after a duplicate-exclusion and local-majority check, then
/// lower tau until every expected LED is found (or the floor is reached).
inline std::vector<DetectedLed> detect_leds(const DeltaMap& map, const DetectorConfig& config = {},
                                            std::optional<int> expected_count = std::nullopt) {
    std::vector<DetectedLed> accepted;
    int tau = config.threshold_start;
    while (true) {
        for (int y = 0; y < map.height; ++y) {
            int x = 0;
            while (x < map.width) {
                if (map.at(x, y) <= tau) {
                    ++x;
                    continue;
                }
                // maximal run of bright pixels, healing single-pixel gaps
                int run_start = x, run_end = x;
                int cursor = x + 1;
                while (cursor < map.width) {
                    if (map.at(cursor, y) > tau) {
                        run_end = cursor++;
                    } else if (cursor + 1 < map.width && map.at(cursor + 1, y) > tau) {
                        run_end = cursor + 1;
                        cursor += 2;
                    } else {
                        break;
                    }
                }
                x = cursor;
                int run_len = run_end - run_start + 1;
                if (run_len < config.min_run) continue;
                int cx0 = (run_start + run_end) / 2;
                DetectedLed led;
                detail::refine_blob(map, tau, cx0, y, led.cx, led.cy, led.width, led.height);
                if (led.width < config.min_run || led.height < config.min_run) continue;
                bool excluded = false;
                for (const auto& a : accepted) {
                    double limit =
                        std::min(config.exclusion_px, 0.5 * (led.width + a.width));
                    double dx = led.cx - a.cx, dy = led.cy - a.cy;
                    if (dx * dx + dy * dy < limit * limit) {
                        excluded = true;
                        break;
                    }
                }
                if (excluded) continue;
                if (!detail::window_majority(map, tau, static_cast<int>(std::lround(led.cx)),
                                             static_cast<int>(std::lround(led.cy)),
                                             config.window_half))
                    continue;
                accepted.push_back(led);
            }
        }
        if (expected_count && static_cast<int>(accepted.size()) >= *expected_count) break;
        if (tau == config.threshold_floor) break;
        tau = std::max(config.threshold_floor, tau - config.threshold_step);
    }
    if (expected_count && static_cast<int>(accepted.size()) < *expected_count)
        throw DetectionIncompleteError(static_cast<int>(accepted.size()), *expected_count);
    return accepted;
}

// ---------------------------------------------------------------------------
// Calibration and state sampling
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<double, 3> average_rgb(const RasterImage& img, const DetectedLed& led) {
    int radius = std::max(1, std::min(led.width, led.height) / 2);
    int cx = static_cast<int>(std::lround(led.cx));
    int cy = static_cast<int>(std::lround(led.cy));
    double sum[3] = {0, 0, 0};
    int count = 0;
    for (int y = cy - radius; y <= cy + radius; ++y) {
        for (int x = cx - radius; x <= cx + radius; ++x) {
            if (!img.in_bounds(x, y)) continue;
            int dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy > radius * radius) continue;
            Rgb c = img.at(x, y);
            sum[0] += c.r;
            sum[1] += c.g;
            sum[2] += c.b;
            ++count;
        }
    }
    if (count == 0) return {0, 0, 0};
    return {sum[0] / count, sum[1] / count, sum[2] / count};
}

inline double rgb_dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

}  // namespace detail

/// Records each LED's ON/OFF reference colors from the calibration frames and
/// assigns roles (sync = red-dominant ON color).
inline void calibrate_leds(std::vector<DetectedLed>& leds, const RasterImage& all_on,
                           const RasterImage& all_off, const DetectorConfig& config = {}) {
    for (auto& led : leds) {
        led.on_rgb = detail::average_rgb(all_on, led);
        led.off_rgb = detail::average_rgb(all_off, led);
        bool red_dominant = led.on_rgb[0] > led.on_rgb[1] + config.red_margin &&
                            led.on_rgb[0] > led.on_rgb[2] + config.red_margin;
        led.role = red_dominant ? LedRole::Sync : LedRole::Data;
    }
}

/// ON/OFF decision by the nearest calibrated reference color.
inline bool led_is_on(const RasterImage& frame, const DetectedLed& led) {
    auto rgb = detail::average_rgb(frame, led);
    return detail::rgb_dist2(rgb, led.on_rgb) < detail::rgb_dist2(rgb, led.off_rgb);
}

// ---------------------------------------------------------------------------
// Clustering into node displays
// ---------------------------------------------------------------------------

struct NodeCluster {
    DetectedLed sync_led;
    std::vector<DetectedLed> data_leds;  // reading order: rows top-down, x within a row
};

inline double auto_proximity(const std::vector<DetectedLed>& leds) {
    if (leds.empty()) return 4.0;
    std::vector<int> widths;
    widths.reserve(leds.size());
    for (const auto& led : leds) widths.push_back(led.width);
    std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
    return std::max(4.0, 2.0 * widths[widths.size() / 2]);
}

/// Single-linkage grouping with link distance < proximity. Every cluster must
/// contain exactly one sync LED and at least one data LED; anything else
/// (merged neighbors, stray LEDs) raises ClusterInvalid rather than guessing.
inline std::vector<NodeCluster> cluster_nodes(const std::vector<DetectedLed>& leds,
                                              double proximity) {
    if (leds.empty()) return {};
    std::vector<std::size_t> parent(leds.size());
    std::iota(parent.begin(), parent.end(), 0u);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < leds.size(); ++i) {
        for (std::size_t j = i + 1; j < leds.size(); ++j) {
            double dx = leds[i].cx - leds[j].cx, dy = leds[i].cy - leds[j].cy;
            if (dx * dx + dy * dy < proximity * proximity) parent[find(i)] = find(j);
        }
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> group_of(leds.size(), -1);
    for (std::size_t i = 0; i < leds.size(); ++i) {
        std::size_t root = find(i);
        if (group_of[root] < 0) {
            group_of[root] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(group_of[root])].push_back(i);
    }

    double row_tol = 3.0;
    for (const auto& led : leds) row_tol = std::max(row_tol, led.height / 2.0);

    std::vector<NodeCluster> clusters;
    for (const auto& group : groups) {
        NodeCluster cluster;
        int sync_count = 0;
        for (std::size_t idx : group) {
            if (leds[idx].role == LedRole::Sync) {
                cluster.sync_led = leds[idx];
                ++sync_count;
            } else {
                cluster.data_leds.push_back(leds[idx]);
            }
        }
        if (sync_count != 1)
            throw ClusterInvalidError("cluster with " + std::to_string(sync_count) +
                                      " sync LEDs (expected exactly 1)");
        if (cluster.data_leds.empty())
            throw ClusterInvalidError("cluster without data LEDs");
        std::vector<double> ys;
        for (const auto& led : cluster.data_leds) ys.push_back(led.cy);
        std::vector<int> row = detail::group_rows(ys, row_tol);
        std::vector<std::size_t> order(cluster.data_leds.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (row[a] != row[b]) return row[a] < row[b];
            return cluster.data_leds[a].cx < cluster.data_leds[b].cx;
        });
        std::vector<DetectedLed> sorted;
        sorted.reserve(order.size());
        for (std::size_t idx : order) sorted.push_back(cluster.data_leds[idx]);
        cluster.data_leds = std::move(sorted);
        clusters.push_back(std::move(cluster));
    }

    // deterministic cluster order: reading order of the sync LEDs
    std::vector<double> sync_ys;
    for (const auto& c : clusters) sync_ys.push_back(c.sync_led.cy);
    std::vector<int> cluster_row = detail::group_rows(sync_ys, row_tol);
    std::vector<std::size_t> order(clusters.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cluster_row[a] != cluster_row[b]) return cluster_row[a] < cluster_row[b];
        return clusters[a].sync_led.cx < clusters[b].sync_led.cx;
    });
    std::vector<NodeCluster> sorted;
    sorted.reserve(order.size());
    for (std::size_t idx : order) sorted.push_back(std::move(clusters[idx]));
    return sorted;
}

// ---------------------------------------------------------------------------
// Bit extraction and sync validation
// ---------------------------------------------------------------------------

/// Reassembles each cluster's SAS from the bit frames: in frame j, data LED m
/// carries bit j*N+m; trailing pad slots are discarded. Missing frames read
/// as zero bits (the sync check flags the truncation).
inline std::vector<BitString> extract_bits(std::span<const RasterImage> bit_frames,
                                           const std::vector<NodeCluster>& clusters,
                                           std::size_t k, std::size_t data_leds) {
    std::vector<BitString> out;
    out.reserve(clusters.size());
    const std::size_t bit_frame_count = (k + data_leds - 1) / data_leds;
    for (const auto& cluster : clusters) {
        BitString bits(k);
        for (std::size_t j = 0; j < bit_frame_count && j < bit_frames.size(); ++j) {
            for (std::size_t m = 0; m < data_leds && m < cluster.data_leds.size(); ++m) {
                std::size_t bit = j * data_leds + m;
                if (bit >= k) break;
                bits.set_bit(bit, led_is_on(bit_frames[j], cluster.data_leds[m]));
            }
        }
        out.push_back(std::move(bits));
    }
    return out;
}

/// Sync pattern: OFF through every bit frame, ON in the final frame with all
/// data LEDs OFF. A missing final frame fails every cluster.
inline std::vector<bool> check_sync(std::span<const RasterImage> bit_frames,
                                    const RasterImage* final_frame,
                                    const std::vector<NodeCluster>& clusters) {
    std::vector<bool> out;
    out.reserve(clusters.size());
    for (const auto& cluster : clusters) {
        bool ok = final_frame != nullptr;
        for (const auto& frame : bit_frames)
            if (led_is_on(frame, cluster.sync_led)) ok = false;
        if (final_frame) {
            if (!led_is_on(*final_frame, cluster.sync_led)) ok = false;
            for (const auto& led : cluster.data_leds)
                if (led_is_on(*final_frame, led)) ok = false;
        }
        out.push_back(ok);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

struct ClusterDecode {
    NodeCluster cluster;
    BitString sas;
    bool sync_ok = false;
};

struct DecodeOutcome {
    std::vector<ClusterDecode> clusters;
    bool truncated = false;  // fewer frames than the schedule required
};

/// pixel_delta -> detect_leds -> calibrate -> cluster -> extract + sync.
/// `expected_led_count` enables the threshold sweep early-exit and the
/// incomplete-detection error (the batch-level camera adjustment retry).
inline DecodeOutcome decode_session(std::span<const RasterImage> frames, std::size_t k,
                                    std::size_t data_leds, const DetectorConfig& config = {},
                                    std::optional<int> expected_led_count = std::nullopt) {
    if (k == 0 || data_leds == 0) throw ConfigError("decode_session: bad schedule geometry");
    if (frames.size() < 2)
        throw DetectionIncompleteError(0, expected_led_count.value_or(0));
    DeltaMap delta = pixel_delta(frames[1], frames[0]);
    std::vector<DetectedLed> leds = detect_leds(delta, config, expected_led_count);
    calibrate_leds(leds, frames[0], frames[1], config);
    double proximity = config.proximity_px > 0 ? config.proximity_px : auto_proximity(leds);
    std::vector<NodeCluster> clusters = cluster_nodes(leds, proximity);
    for (const auto& cluster : clusters)
        if (cluster.data_leds.size() != data_leds)
            throw ClusterInvalidError("cluster has " + std::to_string(cluster.data_leds.size()) +
                                      " data LEDs, schedule says " + std::to_string(data_leds));

    const std::size_t bit_frame_count = (k + data_leds - 1) / data_leds;
    const std::size_t bit_avail =
        frames.size() > 2 ? std::min(bit_frame_count, frames.size() - 2) : 0;
    std::span<const RasterImage> bit_frames = frames.subspan(2, bit_avail);
    const RasterImage* final_frame =
        frames.size() >= 3 + bit_frame_count ? &frames[2 + bit_frame_count] : nullptr;

    DecodeOutcome outcome;
    outcome.truncated = frames.size() < 3 + bit_frame_count;
    std::vector<BitString> extracted = extract_bits(bit_frames, clusters, k, data_leds);
    std::vector<bool> sync = check_sync(bit_frames, final_frame, clusters);
    for (std::size_t i = 0; i < clusters.size(); ++i)
        outcome.clusters.push_back({clusters[i], extracted[i], sync[i]});
    return outcome;
}

}  // namespace oobsim

#endif  // OOBSIM_DECODER_HPP
