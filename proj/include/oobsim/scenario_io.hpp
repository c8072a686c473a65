#ifndef OOBSIM_SCENARIO_IO_HPP
#define OOBSIM_SCENARIO_IO_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oobsim/harness.hpp"

namespace oobsim {

inline nlohmann::json report_to_json(const BatchReport& report, const ScenarioConfig& config) {
    nlohmann::json per_node = nlohmann::json::array();
    for (const auto& e : report.per_node) {
        per_node.push_back({{"session_id", e.session_id},
                            {"passed", e.passed},
                            {"cause", verdict_cause_name(e.cause)},
                            {"protocol_cause", failure_cause_name(e.protocol_cause)},
                            {"expected_status", match_status_name(e.expected_status)},
                            {"expected_sas_hex", e.expected_sas_hex},
                            {"extracted_sas_hex", e.extracted_sas_hex},
                            {"sync_ok", e.sync_ok},
                            {"turned_off", e.turned_off},
                            {"node_state", e.node_state},
                            {"node_link_fp", e.node_link_fp},
                            {"sink_link_fp", e.sink_link_fp}});
    }
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : report.clusters) {
        clusters.push_back({{"index", c.index},
                            {"node", c.node_index},
                            {"matched_session", c.matched_session},
                            {"cx", c.cx},
                            {"cy", c.cy},
                            {"x0", c.x0},
                            {"y0", c.y0},
                            {"x1", c.x1},
                            {"y1", c.y1},
                            {"sas_hex", c.sas_hex},
                            {"sync_ok", c.sync_ok},
                            {"passed", c.passed},
                            {"cause", verdict_cause_name(c.cause)}});
    }
    nlohmann::json batch{{"n", report.n},
                         {"k", report.k},
                         {"data_leds", report.data_leds},
                         {"frame_count", report.frame_count},
                         {"duration_ms", report.duration_ms},
                         {"protocol_ms", report.protocol_ms},
                         {"st_time_ms", report.st_time_ms},
                         {"first_capture_ms", report.first_capture_ms},
                         {"last_capture_ms", report.last_capture_ms},
                         {"decision_ms", report.decision_ms},
                         {"retry_used", report.retry_used},
                         {"aborted", report.aborted},
                         {"abort_reason", report.abort_reason},
                         {"tallies",
                          {{"passed", report.tallies.passed},
                           {"failed", report.tallies.failed},
                           {"sas_mismatch", report.tallies.sas_mismatch},
                           {"sync_error", report.tallies.sync_error},
                           {"both", report.tallies.both},
                           {"protocol", report.tallies.protocol},
                           {"camera", report.tallies.camera}}}};
    return nlohmann::json{{"version", 1},
                          {"config", scenario_config_to_json(config)},
                          {"batch", batch},
                          {"per_node", per_node},
                          {"clusters", clusters}};
}

/// Runs the scenario and writes frames/, report.json, overlay.ppm,
/// result_table.txt and transcript.bin under `out_dir`. All outputs are pure
/// functions of the config, so reruns are byte-identical.
inline ScenarioResult simulate_to_directory(const ScenarioConfig& config,
                                            const std::string& out_dir) {
    namespace fs = std::filesystem;
    ScenarioResult result = run_scenario(config);
    fs::create_directories(fs::path(out_dir) / "frames");

    for (std::size_t i = 0; i < result.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.ppm", i);
        write_ppm(result.frames[i], (fs::path(out_dir) / "frames" / name).string());
    }
    {
        std::ofstream out(fs::path(out_dir) / "frames" / "schedule.json");
        out << schedule_sidecar(result.schedule).dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        out << report_to_json(result.report, config).dump(2) << "\n";
    }
    write_ppm(result.overlay, (fs::path(out_dir) / "overlay.ppm").string());
    {
        std::ofstream out(fs::path(out_dir) / "result_table.txt");
        out << result.table;
    }
    write_transcript((fs::path(out_dir) / "transcript.bin").string(), result.transcript);
    return result;
}

struct DirectoryDecode {
    SidecarInfo sidecar;
    DecodeOutcome outcome;
};

/// Stand-alone decode of a dumped frame directory (PPM frames + sidecar).
inline DirectoryDecode decode_directory(const std::string& dir,
                                        const DetectorConfig& config = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    fs::path sidecar_path = fs::path(dir) / "schedule.json";
    if (!fs::is_regular_file(sidecar_path))
        throw IoError("missing schedule.json in " + dir);
    nlohmann::json sidecar_json;
    {
        std::ifstream in(sidecar_path);
        try {
            in >> sidecar_json;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad schedule.json: ") + e.what());
        }
    }
    DirectoryDecode result;
    result.sidecar = parse_sidecar(sidecar_json);

    std::vector<std::string> frame_paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".ppm")
            frame_paths.push_back(entry.path().string());
    }
    if (frame_paths.empty()) throw IoError("no frame_*.ppm files in " + dir);
    std::sort(frame_paths.begin(), frame_paths.end());
    std::vector<RasterImage> frames;
    frames.reserve(frame_paths.size());
    for (const auto& path : frame_paths) frames.push_back(read_ppm(path));

    result.outcome =
        decode_session(frames, result.sidecar.k, result.sidecar.data_leds, config, std::nullopt);
    return result;
}

}  // namespace oobsim

#endif  // OOBSIM_SCENARIO_IO_HPP
