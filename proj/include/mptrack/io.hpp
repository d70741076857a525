#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mptrack/evaluation.hpp"
#include "mptrack/scenarios.hpp"
#include "mptrack/tracker.hpp"

namespace mptrack {

/// Fully resolved run configuration; defaults reproduce the reference
/// experiment parameterization.
struct RunConfig {
    int scenario_id = 1;              // 0 when an inline spec is given
    ScenarioSpec scenario;
    TrackerConfig tracker;
    int runs = 1;
    std::uint64_t base_seed = 1234;
    int threads = 1;
    std::string output_dir = ".";
};

/// Parses a versioned JSON config. Unknown keys are rejected.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

// ---- JSON-lines files -------------------------------------------------------

void write_frames_jsonl(const std::vector<MeasurementFrame>& frames,
                        const std::string& path);
std::vector<MeasurementFrame> read_frames_jsonl(const std::string& path);

void write_truth_jsonl(const std::vector<ScanTruth>& truth,
                       const std::vector<FrameProvenance>& provenance,
                       const std::string& path);
struct TruthFile {
    std::vector<ScanTruth> truth;
    std::vector<FrameProvenance> provenance;
};
TruthFile read_truth_jsonl(const std::string& path);

void write_tracks_jsonl(const std::vector<TrackEstimateRow>& rows, const std::string& path);
std::vector<TrackEstimateRow> read_tracks_jsonl(const std::string& path);

void write_components_jsonl(const std::vector<ComponentEstimateRow>& rows,
                            const std::string& path);
std::vector<ComponentEstimateRow> read_components_jsonl(const std::string& path);

/// Per-scan metric time series as CSV plus an aggregate JSON summary.
void write_metrics_csv(const MetricsReport& report, const std::string& path);
void write_metrics_summary(const MetricsReport& report, const std::string& path);

}  // namespace mptrack
