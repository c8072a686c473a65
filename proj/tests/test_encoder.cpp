#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "oobsim/encoder.hpp"

using namespace oobsim;

namespace {

std::vector<SasValue> random_sas(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::vector<SasValue> out;
    for (std::size_t i = 0; i < n; ++i) {
        BitString bits(k);
        for (std::size_t b = 0; b < k; ++b) bits.set_bit(b, rng() & 1);
        out.emplace_back(bits);
    }
    return out;
}

}  // namespace

TEST_CASE("schedule frame counts match the transmission formula") {
    std::mt19937_64 rng(1);
    LedLayout two = make_grid_layout(16, 2);
    CHECK(build_schedule(random_sas(rng, 16, 20), two).frames.size() == 13);

    LedLayout one = make_grid_layout(16, 1);
    CHECK(build_schedule(random_sas(rng, 16, 20), one).frames.size() == 23);
}

TEST_CASE("schedule structure: calibration frames, bit frames, final sync") {
    std::mt19937_64 rng(2);
    LedLayout layout = make_grid_layout(4, 2);
    std::vector<SasValue> sas = random_sas(rng, 4, 20);
    FrameSchedule schedule = build_schedule(sas, layout);

    REQUIRE(schedule.frames.size() == 13);
    CHECK(schedule.frames[0].kind == FrameKind::AllOn);
    CHECK(schedule.frames[1].kind == FrameKind::AllOff);
    CHECK(schedule.frames[12].kind == FrameKind::FinalSync);
    for (const auto& node : schedule.frames[0].nodes) {
        CHECK(node.sync);
        for (bool d : node.data) CHECK(d);
    }
    for (const auto& node : schedule.frames[1].nodes) {
        CHECK_FALSE(node.sync);
        for (bool d : node.data) CHECK_FALSE(d);
    }
    for (const auto& node : schedule.frames[12].nodes) {
        CHECK(node.sync);
        for (bool d : node.data) CHECK_FALSE(d);
    }
}

TEST_CASE("partial last bit frame keeps leftover LEDs off") {
    LedLayout layout = make_grid_layout(1, 2);
    std::vector<SasValue> sas{SasValue{BitString::from_uint(0b11111, 5)}};
    FrameSchedule schedule = build_schedule(sas, layout);
    REQUIRE(schedule.frames.size() == 3 + 3);  // ceil(5/2)=3 bit frames
    const FrameStates& last_bits = schedule.frames[4];
    CHECK(last_bits.kind == FrameKind::Bit);
    CHECK(last_bits.nodes[0].data[0]);        // bit 4
    CHECK_FALSE(last_bits.nodes[0].data[1]);  // padding slot
}

TEST_CASE("bit coverage: every SAS bit appears in exactly one frame slot") {
    std::mt19937_64 rng(3);
    for (std::size_t k : {std::size_t{8}, std::size_t{13}, std::size_t{20}, std::size_t{32}}) {
        for (std::size_t n_leds : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4}}) {
            LedLayout layout = make_grid_layout(3, n_leds, 1280, 960);
            std::vector<SasValue> sas = random_sas(rng, 3, k);
            FrameSchedule schedule = build_schedule(sas, layout);
            std::size_t bit_frames = (k + n_leds - 1) / n_leds;
            CHECK(schedule.frames.size() == bit_frames + 3);
            CHECK(schedule.duration_ms() == schedule_duration(k, n_leds, 250));
            for (std::size_t node = 0; node < 3; ++node) {
                std::vector<int> seen(k, 0);
                for (std::size_t j = 0; j < bit_frames; ++j) {
                    const auto& st = schedule.frames[2 + j].nodes[node];
                    CHECK_FALSE(st.sync);  // sync stays dark through bit frames
                    for (std::size_t m = 0; m < n_leds; ++m) {
                        std::size_t bit = j * n_leds + m;
                        if (bit < k) {
                            CHECK(st.data[m] == sas[node].value.bit(bit));
                            ++seen[bit];
                        } else {
                            CHECK_FALSE(st.data[m]);
                        }
                    }
                }
                for (int count : seen) CHECK(count == 1);
            }
        }
    }
}

TEST_CASE("schedule_duration arithmetic") {
    CHECK(schedule_duration(20, 2, 250) == 3250);
    CHECK(schedule_duration(20, 1, 250) == 5750);
    CHECK(schedule_duration(20, 3, 0) == 0);
    CHECK(schedule_duration(22, 2, 250) == 3500);
}

TEST_CASE("frame i starts at i times the hold time") {
    std::mt19937_64 rng(8);
    LedLayout layout = make_grid_layout(2, 2);
    FrameSchedule schedule = build_schedule(random_sas(rng, 2, 20), layout, 250);
    for (std::size_t i = 0; i < schedule.frames.size(); ++i)
        CHECK(schedule.frame_start(i) == i * 250);
}

TEST_CASE("build_schedule input validation") {
    std::mt19937_64 rng(4);
    LedLayout layout = make_grid_layout(2, 2);
    CHECK_THROWS_AS(build_schedule(random_sas(rng, 3, 20), layout), LengthMismatchError);
    std::vector<SasValue> mixed{SasValue{BitString(20)}, SasValue{BitString(19)}};
    CHECK_THROWS_AS(build_schedule(mixed, layout), LengthMismatchError);
    CHECK_THROWS_AS(build_schedule({}, LedLayout{}), EmptyLayoutError);
}

TEST_CASE("grid layout spacing and bounds") {
    LedLayout layout = make_grid_layout(16, 2);
    REQUIRE(layout.nodes.size() == 16);
    for (const auto& node : layout.nodes) {
        REQUIRE(node.data_leds.size() == 2);
        CHECK(node.data_leds[0].cx - node.sync_led.cx == 18);  // 3 radii apart
        CHECK(node.data_leds[1].cx - node.data_leds[0].cx == 18);
    }
    // nearest LEDs of horizontally adjacent nodes are 6 radii apart
    CHECK(layout.nodes[1].sync_led.cx - layout.nodes[0].data_leds[1].cx == 36);

    SECTION("doubling the distance still fits the frame") {
        LedLayout scaled = scale_layout(layout, 2.0);
        FrameStates all_on;
        all_on.kind = FrameKind::AllOn;
        for (const auto& node : scaled.nodes)
            all_on.nodes.push_back({true, std::vector<bool>(node.data_leds.size(), true)});
        CHECK_NOTHROW(render_frame(scaled, all_on, NoiseModel{}, 0));
        CHECK(scaled.nodes[0].sync_led.radius == 12);
    }
}

TEST_CASE("render: all-off frame shows only off-color discs on ambient") {
    LedLayout layout = make_grid_layout(4, 2);
    std::vector<SasValue> sas{4, SasValue{BitString(20)}};
    FrameSchedule schedule = build_schedule(sas, layout);
    RasterImage img = render_frame(layout, schedule.frames[1], NoiseModel{}, 0);

    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            Rgb c = img.at(x, y);
            CHECK((c == kAmbientColor || c == kLedOffColor));
        }
    CHECK(img.at(layout.nodes[0].sync_led.cx, layout.nodes[0].sync_led.cy) == kLedOffColor);
}

TEST_CASE("render: mean color inside each disc equals its on color") {
    LedLayout layout = make_grid_layout(4, 2);
    std::vector<SasValue> sas{4, SasValue{BitString(20)}};
    FrameSchedule schedule = build_schedule(sas, layout);
    RasterImage img = render_frame(layout, schedule.frames[0], NoiseModel{}, 0);

    auto disc_mean = [&](const LedSpec& led) {
        double sum[3] = {0, 0, 0};
        int count = 0;
        for (int y = led.cy - led.radius; y <= led.cy + led.radius; ++y)
            for (int x = led.cx - led.radius; x <= led.cx + led.radius; ++x) {
                int dx = x - led.cx, dy = y - led.cy;
                if (dx * dx + dy * dy > led.radius * led.radius) continue;
                Rgb c = img.at(x, y);
                sum[0] += c.r;
                sum[1] += c.g;
                sum[2] += c.b;
                ++count;
            }
        return std::array<double, 3>{sum[0] / count, sum[1] / count, sum[2] / count};
    };
    for (const auto& node : layout.nodes) {
        auto sync_mean = disc_mean(node.sync_led);
        CHECK(sync_mean[0] == 255.0);
        CHECK(sync_mean[1] == 0.0);
        for (const auto& led : node.data_leds) {
            auto mean = disc_mean(led);
            CHECK(mean[0] == 0.0);
            CHECK(mean[1] == 255.0);
            CHECK(mean[2] == 0.0);
        }
    }
}

TEST_CASE("render determinism under noise") {
    LedLayout layout = make_grid_layout(4, 2);
    std::vector<SasValue> sas{4, SasValue{BitString(20)}};
    FrameSchedule schedule = build_schedule(sas, layout);
    NoiseModel noise = NoiseModel::with_sigma(8.0);
    RasterImage a = render_frame(layout, schedule.frames[0], noise, 12345);
    RasterImage b = render_frame(layout, schedule.frames[0], noise, 12345);
    CHECK(a == b);
    RasterImage c = render_frame(layout, schedule.frames[0], noise, 54321);
    CHECK(a != c);
}

TEST_CASE("render_schedule produces one image per frame") {
    std::mt19937_64 rng(5);
    LedLayout layout = make_grid_layout(16, 2);
    FrameSchedule schedule = build_schedule(random_sas(rng, 16, 20), layout);
    auto frames = render_schedule(layout, schedule, NoiseModel{}, 7);
    CHECK(frames.size() == 13);
}

TEST_CASE("render rejects out-of-bounds layouts") {
    LedLayout layout = make_grid_layout(1, 1);
    layout.nodes[0].sync_led.cx = 2;  // disc sticks out of the left edge
    FrameStates states;
    states.kind = FrameKind::AllOn;
    states.nodes.push_back({true, {true}});
    CHECK_THROWS_AS(render_frame(layout, states, NoiseModel{}, 0), OutOfBoundsError);
}

TEST_CASE("displaced discs clip instead of failing") {
    LedLayout layout = make_grid_layout(1, 1, 120, 120);
    FrameStates states;
    states.kind = FrameKind::AllOn;
    states.nodes.push_back({true, {true}});
    NoiseModel noise;
    noise.per_frame_displacement = {{-60, 0}};
    CHECK_NOTHROW(render_frame(layout, states, noise, 0, 0));
}

TEST_CASE("PPM round-trip is lossless") {
    std::mt19937_64 rng(6);
    RasterImage img(33, 17);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            img.set(x, y, Rgb{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                              static_cast<std::uint8_t>(rng())});
    auto path = std::filesystem::temp_directory_path() / "oobsim_ppm_test.ppm";
    write_ppm(img, path.string());
    RasterImage back = read_ppm(path.string());
    CHECK(back == img);
    std::filesystem::remove(path);
}

TEST_CASE("schedule sidecar round-trip") {
    std::mt19937_64 rng(7);
    LedLayout layout = make_grid_layout(2, 2);
    FrameSchedule schedule = build_schedule(random_sas(rng, 2, 20), layout);
    SidecarInfo info = parse_sidecar(schedule_sidecar(schedule));
    CHECK(info.hold_time_ms == 250);
    CHECK(info.k == 20);
    CHECK(info.data_leds == 2);
    REQUIRE(info.frame_kinds.size() == 13);
    CHECK(info.frame_kinds.front() == "all_on");
    CHECK(info.frame_kinds[1] == "all_off");
    CHECK(info.frame_kinds.back() == "final_sync");
}
