// Command-line front end: scripted simulation runs, stand-alone decoding of
// dumped frames, attack-probability experiments and the timing/energy
// estimators. Machine-readable output is JSON; images are PPM.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "oobsim/oobsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;
constexpr int kExitDetection = 4;

struct SimulateArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::size_t> k;
    std::optional<std::size_t> data_leds;
    std::optional<oobsim::TimeMs> hold_ms;
};

int run_simulate(const SimulateArgs& args) {
    oobsim::ScenarioConfig config;
    try {
        if (!args.config_path.empty()) config = oobsim::load_scenario_config(args.config_path);
        if (args.seed) config.seed = *args.seed;
        if (args.n) config.n = *args.n;
        if (args.k) config.k = *args.k;
        if (args.data_leds) config.data_leds = *args.data_leds;
        if (args.hold_ms) config.hold_ms = *args.hold_ms;
        config.validate();
    } catch (const oobsim::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::string out_dir = args.out_dir;
    if (const char* env = std::getenv("OOBSIM_OUT"); env && *env) out_dir = env;

    try {
        oobsim::ScenarioResult result = oobsim::simulate_to_directory(config, out_dir);
        nlohmann::json summary{{"out_dir", out_dir},
                               {"passed", result.report.tallies.passed},
                               {"failed", result.report.tallies.failed},
                               {"aborted", result.report.aborted},
                               {"retry_used", result.report.retry_used},
                               {"duration_ms", result.report.duration_ms}};
        std::cout << summary.dump() << "\n";
        return result.report.aborted ? kExitAbort : kExitOk;
    } catch (const oobsim::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const oobsim::Error& e) {
        std::cerr << "batch abort: " << e.what() << "\n";
        return kExitAbort;
    }
}

int run_decode(const std::string& frames_dir) {
    try {
        oobsim::DirectoryDecode decoded = oobsim::decode_directory(frames_dir);
        for (std::size_t i = 0; i < decoded.outcome.clusters.size(); ++i) {
            const auto& cluster = decoded.outcome.clusters[i];
            nlohmann::json line{{"cluster", i},
                                {"sas_hex", cluster.sas.to_hex()},
                                {"sas_bits", cluster.sas.size()},
                                {"sync_ok", cluster.sync_ok}};
            std::cout << line.dump() << "\n";
        }
        return kExitOk;
    } catch (const oobsim::DetectionIncompleteError& e) {
        std::cerr << "detection incomplete: " << e.what() << "\n";
        return kExitDetection;
    } catch (const oobsim::ClusterInvalidError& e) {
        std::cerr << "cluster error: " << e.what() << "\n";
        return kExitDetection;
    } catch (const oobsim::Error& e) {
        std::cerr << "decode error: " << e.what() << "\n";
        return kExitConfig;
    }
}

int run_attack(std::size_t n, std::size_t k, std::size_t trials, std::uint64_t seed,
               const std::string& strategy_name) {
    if (n < 1 || k < 1 || k > 32 || trials < 1) {
        std::cerr << "invalid parameters: need n >= 1, 1 <= k <= 32, trials >= 1\n";
        return kExitConfig;
    }
    oobsim::AttackStrategy strategy;
    if (strategy_name == "random") {
        strategy = oobsim::AttackStrategy::RandomGuess;
    } else if (strategy_name == "exhaustive") {
        strategy = oobsim::AttackStrategy::Exhaustive;
    } else {
        std::cerr << "unknown strategy: " << strategy_name << "\n";
        return kExitConfig;
    }
    try {
        oobsim::AttackResult result = oobsim::attack_experiment(n, k, trials, strategy, seed);
        nlohmann::json out{{"n", n},
                           {"k", k},
                           {"strategy", strategy_name},
                           {"trials", result.trials},
                           {"runs", result.runs},
                           {"successes", result.successes},
                           {"rate", result.rate},
                           {"bound", result.bound},
                           {"ci99_half", result.ci99_half}};
        std::cout << out.dump() << "\n";
        return kExitOk;
    } catch (const oobsim::Error& e) {
        std::cerr << "attack error: " << e.what() << "\n";
        return kExitConfig;
    }
}

int run_analyze(std::size_t k, std::size_t data_leds, oobsim::TimeMs hold_ms, double volts,
                double amps) {
    if (k < 1 || data_leds < 1 || volts < 0 || amps < 0) {
        std::cerr << "invalid parameters\n";
        return kExitConfig;
    }
    oobsim::TimeMs duration = oobsim::timing_estimate(k, data_leds, hold_ms);
    double seconds = static_cast<double>(duration) / 1000.0;
    int led_count = static_cast<int>(data_leds) + 1;  // data LEDs plus the sync LED
    oobsim::PowerEstimate energy = oobsim::power_estimate(volts, amps, seconds, led_count);
    nlohmann::json out{{"k", k},
                       {"data_leds", data_leds},
                       {"hold_ms", hold_ms},
                       {"duration_ms", duration},
                       {"led_count", led_count},
                       {"energy_j", energy.joules},
                       {"battery_percent", energy.battery_fraction * 100.0}};
    std::cout << out.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LED-to-camera secure sensor-node initialization simulator"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run a full initialization batch");
    simulate->add_option("--config", sim.config_path, "scenario config JSON file");
    simulate->add_option("--out", sim.out_dir, "output directory (env OOBSIM_OUT overrides)");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--n", sim.n, "node count");
    simulate->add_option("--k", sim.k, "SAS bits (0 = derive from n)");
    simulate->add_option("--data-leds", sim.data_leds, "data LEDs per node");
    simulate->add_option("--hold-ms", sim.hold_ms, "frame hold time in ms");

    std::string frames_dir;
    CLI::App* decode = app.add_subcommand("decode", "decode a dumped frames directory");
    decode->add_option("frames_dir", frames_dir, "directory with frame_*.ppm and schedule.json")
        ->required();

    std::size_t atk_n = 4, atk_k = 8, atk_trials = 10000;
    std::uint64_t atk_seed = 1;
    std::string atk_strategy = "random";
    CLI::App* attack = app.add_subcommand("attack", "wireless substitution attack experiment");
    attack->add_option("--n", atk_n, "node count");
    attack->add_option("--k", atk_k, "SAS bits");
    attack->add_option("--trials", atk_trials, "Monte Carlo trials");
    attack->add_option("--seed", atk_seed, "RNG seed");
    attack->add_option("--strategy", atk_strategy, "random | exhaustive");

    std::size_t ana_k = 20, ana_leds = 2;
    oobsim::TimeMs ana_hold = 250;
    double ana_volts = 2.9, ana_amps = 0.0022;
    CLI::App* analyze = app.add_subcommand("analyze", "transmission timing and energy estimates");
    analyze->add_option("--k", ana_k, "SAS bits");
    analyze->add_option("--data-leds", ana_leds, "data LEDs per node");
    analyze->add_option("--hold-ms", ana_hold, "frame hold time in ms");
    analyze->add_option("--volts", ana_volts, "LED drop voltage");
    analyze->add_option("--amps", ana_amps, "LED current rating");

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) return run_simulate(sim);
    if (decode->parsed()) return run_decode(frames_dir);
    if (attack->parsed()) return run_attack(atk_n, atk_k, atk_trials, atk_seed, atk_strategy);
    if (analyze->parsed()) return run_analyze(ana_k, ana_leds, ana_hold, ana_volts, ana_amps);
    return kExitConfig;
}
