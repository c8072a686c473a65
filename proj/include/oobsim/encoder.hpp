#ifndef OOBSIM_ENCODER_HPP
#define OOBSIM_ENCODER_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oobsim/crypto.hpp"
#include "oobsim/image.hpp"
#include "oobsim/rng.hpp"

namespace oobsim {

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

struct LedSpec {
    int cx = 0;
    int cy = 0;
    int radius = 6;
    Rgb on_color;
    Rgb off_color{20, 20, 20};
};

struct NodeDisplay {
    LedSpec sync_led;
    std::vector<LedSpec> data_leds;  // left-to-right transmission order
};

struct LedLayout {
    int width = 640;
    int height = 480;
    std::vector<NodeDisplay> nodes;

    std::size_t data_leds_per_node() const {
        if (nodes.empty()) throw EmptyLayoutError("layout has no node displays");
        return nodes.front().data_leds.size();
    }
};

constexpr Rgb kSyncOnColor{255, 0, 0};
constexpr Rgb kDataOnColor{0, 255, 0};
constexpr Rgb kLedOffColor{20, 20, 20};
constexpr Rgb kAmbientColor{10, 10, 10};

/// Grid of node displays, one row of LEDs per node (sync leftmost, then the
/// data LEDs). Intra-node LED spacing is 3 radii center-to-center and the
/// nearest LEDs of adjacent nodes are 6 radii apart, which keeps proximity
/// clustering well-posed; the grid is centered so distance scaling up to 2x
/// stays inside the frame.
inline LedLayout make_grid_layout(std::size_t n, std::size_t data_leds, int width = 640,
                                  int height = 480, int radius = 6) {
    if (n == 0 || data_leds == 0) throw EmptyLayoutError("grid layout needs nodes and data LEDs");
    LedLayout layout;
    layout.width = width;
    layout.height = height;
    const int intra = 3 * radius;
    const int inter = 6 * radius;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = static_cast<int>((n + cols - 1) / cols);
    const int pitch_x = static_cast<int>(data_leds) * intra + inter;
    const int pitch_y = inter;
    const int span_x = (cols - 1) * pitch_x + static_cast<int>(data_leds) * intra;
    const int span_y = (rows - 1) * pitch_y;
    const int x0 = (width - span_x) / 2;
    const int y0 = (height - span_y) / 2;
    if (x0 < 2 * radius || y0 < 2 * radius)
        throw OutOfBoundsError("grid layout does not fit the frame");
    for (std::size_t i = 0; i < n; ++i) {
        int r = static_cast<int>(i) / cols;
        int c = static_cast<int>(i) % cols;
        NodeDisplay node;
        node.sync_led = {x0 + c * pitch_x, y0 + r * pitch_y, radius, kSyncOnColor, kLedOffColor};
        for (std::size_t m = 0; m < data_leds; ++m)
            node.data_leds.push_back({x0 + c * pitch_x + static_cast<int>(m + 1) * intra,
                                      y0 + r * pitch_y, radius, kDataOnColor, kLedOffColor});
        layout.nodes.push_back(std::move(node));
    }
    return layout;
}

/// Scales LED positions about the image center and LED radii by `factor`
/// (camera closer / farther).
inline LedLayout scale_layout(const LedLayout& layout, double factor) {
    LedLayout out = layout;
    const double cx = layout.width / 2.0;
    const double cy = layout.height / 2.0;
    auto scale_led = [&](LedSpec& led) {
        led.cx = static_cast<int>(std::lround(cx + (led.cx - cx) * factor));
        led.cy = static_cast<int>(std::lround(cy + (led.cy - cy) * factor));
        led.radius = std::max(1, static_cast<int>(std::lround(led.radius * factor)));
    };
    for (auto& node : out.nodes) {
        scale_led(node.sync_led);
        for (auto& led : node.data_leds) scale_led(led);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Frame schedule
// ---------------------------------------------------------------------------

enum class FrameKind { AllOn, AllOff, Bit, FinalSync };

inline const char* frame_kind_name(FrameKind k) {
    switch (k) {
        case FrameKind::AllOn: return "all_on";
        case FrameKind::AllOff: return "all_off";
        case FrameKind::Bit: return "bit";
        case FrameKind::FinalSync: return "final_sync";
    }
    return "?";
}

struct NodeLedState {
    bool sync = false;
    std::vector<bool> data;
};

struct FrameStates {
    FrameKind kind = FrameKind::AllOff;
    int bit_index = -1;  // first SAS bit shown in this frame, for Bit frames
    std::vector<NodeLedState> nodes;
};

struct FrameSchedule {
    std::vector<FrameStates> frames;
    TimeMs hold_time_ms = 250;
    std::size_t k = 0;
    std::size_t data_leds = 0;

    std::size_t bit_frame_count() const { return (k + data_leds - 1) / data_leds; }
    TimeMs frame_start(std::size_t i) const { return i * hold_time_ms; }
    TimeMs duration_ms() const { return frames.size() * hold_time_ms; }
};

inline TimeMs schedule_duration(std::size_t k, std::size_t data_leds, TimeMs hold_time_ms) {
    if (data_leds == 0) throw ConfigError("schedule_duration: need at least one data LED");
    return ((k + data_leds - 1) / data_leds + 3) * hold_time_ms;
}

/// Frame order: AllOn, AllOff, then the bit frames, then the final sync
/// frame. In bit frame j a node's data LED m shows SAS bit j*N+m (ON = 1);
/// leftover LED slots in the last bit frame stay OFF. Sync LEDs are ON only
/// in AllOn and FinalSync.
inline FrameSchedule build_schedule(const std::vector<SasValue>& sas_per_node,
                                    const LedLayout& layout, TimeMs hold_time_ms = 250) {
    if (layout.nodes.empty()) throw EmptyLayoutError("build_schedule: empty layout");
    if (sas_per_node.size() != layout.nodes.size())
        throw LengthMismatchError("build_schedule: SAS count != node display count");
    const std::size_t n_leds = layout.data_leds_per_node();
    if (n_leds == 0) throw EmptyLayoutError("build_schedule: node display has no data LEDs");
    for (const auto& node : layout.nodes)
        if (node.data_leds.size() != n_leds)
            throw LengthMismatchError("build_schedule: inconsistent data LED counts");
    const std::size_t k = sas_per_node.front().k();
    for (const auto& sas : sas_per_node)
        if (sas.k() != k) throw LengthMismatchError("build_schedule: SAS lengths differ");

    FrameSchedule schedule;
    schedule.hold_time_ms = hold_time_ms;
    schedule.k = k;
    schedule.data_leds = n_leds;

    auto uniform_frame = [&](FrameKind kind, bool sync, bool data) {
        FrameStates fs;
        fs.kind = kind;
        fs.nodes.assign(layout.nodes.size(), NodeLedState{sync, std::vector<bool>(n_leds, data)});
        return fs;
    };
    schedule.frames.push_back(uniform_frame(FrameKind::AllOn, true, true));
    schedule.frames.push_back(uniform_frame(FrameKind::AllOff, false, false));

    const std::size_t bit_frames = (k + n_leds - 1) / n_leds;
    for (std::size_t j = 0; j < bit_frames; ++j) {
        FrameStates fs;
        fs.kind = FrameKind::Bit;
        fs.bit_index = static_cast<int>(j * n_leds);
        for (const auto& sas : sas_per_node) {
            NodeLedState state;
            state.sync = false;
            for (std::size_t m = 0; m < n_leds; ++m) {
                std::size_t bit = j * n_leds + m;
                state.data.push_back(bit < k && sas.value.bit(bit));
            }
            fs.nodes.push_back(std::move(state));
        }
        schedule.frames.push_back(std::move(fs));
    }
    schedule.frames.push_back(uniform_frame(FrameKind::FinalSync, true, false));
    return schedule;
}

// ---------------------------------------------------------------------------
// Synthetic camera
// ---------------------------------------------------------------------------

struct ReflectionBlob {
    int cx = 0;
    int cy = 0;
    int radius = 0;
    Rgb color;
};

struct Displacement {
    int dx = 0;
    int dy = 0;
};

struct NoiseModel {
    std::array<double, 3> sigma{0.0, 0.0, 0.0};  // per-channel gaussian
    Rgb ambient = kAmbientColor;
    std::vector<ReflectionBlob> reflections;
    std::vector<Displacement> per_frame_displacement;  // indexed by frame, missing -> none

    static NoiseModel with_sigma(double s) {
        NoiseModel m;
        m.sigma = {s, s, s};
        return m;
    }

    bool has_noise() const { return sigma[0] > 0 || sigma[1] > 0 || sigma[2] > 0; }

    Displacement displacement_for(std::size_t frame) const {
        if (frame < per_frame_displacement.size()) return per_frame_displacement[frame];
        return {};
    }
};

/// Renders one frame: ambient background, reflection blobs, LED discs in
/// their on/off colors, then per-pixel gaussian noise. Deterministic for a
/// fixed seed. Displaced discs clip at the border; the home layout itself
/// must be in bounds.
inline RasterImage render_frame(const LedLayout& layout, const FrameStates& states,
                                const NoiseModel& noise, std::uint64_t seed,
                                std::size_t frame_index = 0) {
    if (layout.nodes.empty()) throw EmptyLayoutError("render_frame: empty layout");
    if (states.nodes.size() != layout.nodes.size())
        throw LengthMismatchError("render_frame: frame states do not match layout");
    RasterImage img(layout.width, layout.height, noise.ambient);

    for (const auto& blob : noise.reflections) draw_disc(img, blob.cx, blob.cy, blob.radius, blob.color);

    Displacement disp = noise.displacement_for(frame_index);
    auto check_bounds = [&](const LedSpec& led) {
        if (led.cx - led.radius < 0 || led.cx + led.radius >= layout.width ||
            led.cy - led.radius < 0 || led.cy + led.radius >= layout.height)
            throw OutOfBoundsError("render_frame: LED outside the frame");
    };
    for (std::size_t i = 0; i < layout.nodes.size(); ++i) {
        const NodeDisplay& node = layout.nodes[i];
        const NodeLedState& state = states.nodes[i];
        if (state.data.size() != node.data_leds.size())
            throw LengthMismatchError("render_frame: data LED state count mismatch");
        check_bounds(node.sync_led);
        draw_disc(img, node.sync_led.cx + disp.dx, node.sync_led.cy + disp.dy,
                  node.sync_led.radius, state.sync ? node.sync_led.on_color : node.sync_led.off_color);
        for (std::size_t m = 0; m < node.data_leds.size(); ++m) {
            const LedSpec& led = node.data_leds[m];
            check_bounds(led);
            draw_disc(img, led.cx + disp.dx, led.cy + disp.dy, led.radius,
                      state.data[m] ? led.on_color : led.off_color);
        }
    }

    if (noise.has_noise()) {
        GaussianSampler sampler(seed);
        auto& px = img.pixels();
        // every pixel consumes exactly three samples so fault edits on one
        // node never shift the noise under any other pixel
        for (std::size_t i = 0; i < px.size(); i += 3) {
            for (int c = 0; c < 3; ++c) {
                double v = px[i + c] + sampler.next(noise.sigma[static_cast<std::size_t>(c)]);
                px[i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
            }
        }
    }
    return img;
}

inline std::vector<RasterImage> render_schedule(const LedLayout& layout,
                                                const FrameSchedule& schedule,
                                                const NoiseModel& noise, std::uint64_t seed) {
    std::vector<RasterImage> frames;
    frames.reserve(schedule.frames.size());
    for (std::size_t i = 0; i < schedule.frames.size(); ++i)
        frames.push_back(render_frame(layout, schedule.frames[i], noise, mix_seed(seed, i), i));
    return frames;
}

// ---------------------------------------------------------------------------
// Sidecar metadata stored next to dumped frames
// ---------------------------------------------------------------------------

inline nlohmann::json schedule_sidecar(const FrameSchedule& schedule) {
    nlohmann::json kinds = nlohmann::json::array();
    for (const auto& f : schedule.frames) kinds.push_back(frame_kind_name(f.kind));
    return nlohmann::json{{"hold_time_ms", schedule.hold_time_ms},
                          {"frame_kinds", kinds},
                          {"k", schedule.k},
                          {"N", schedule.data_leds}};
}

struct SidecarInfo {
    TimeMs hold_time_ms = 250;
    std::vector<std::string> frame_kinds;
    std::size_t k = 0;
    std::size_t data_leds = 0;
};

inline SidecarInfo parse_sidecar(const nlohmann::json& j) {
    SidecarInfo info;
    try {
        info.hold_time_ms = j.at("hold_time_ms").get<TimeMs>();
        info.frame_kinds = j.at("frame_kinds").get<std::vector<std::string>>();
        info.k = j.at("k").get<std::size_t>();
        info.data_leds = j.at("N").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad schedule sidecar: ") + e.what());
    }
    if (info.k == 0 || info.data_leds == 0) throw ConfigError("bad schedule sidecar: zero k or N");
    return info;
}

}  // namespace oobsim

#endif  // OOBSIM_ENCODER_HPP
