#pragma once

#include <cstdint>
#include <vector>

#include "mptrack/evaluation.hpp"
#include "mptrack/scenarios.hpp"
#include "mptrack/tracker.hpp"

namespace mptrack {

struct RunOutputs {
    std::vector<ScanTruth> truth;
    std::vector<GeneratedFrame> frames;
    TrackerOutput output;
};

/// Simulates one seeded run of a scenario and tracks it.
RunOutputs simulate_and_track(const ScenarioSpec& scenario, const TrackerConfig& cfg,
                              std::uint64_t seed);

/// Scores one run into the accumulators: OSPA plus track-truth matching
/// (Hungarian on position with the OSPA cutoff as gate) feeding CAR, RSE
/// and NFT, and nearest-component matching feeding TNNC/RMSE/WD.
void accumulate_run(MetricsReport& report, const std::vector<ScanTruth>& truth,
                    const std::vector<FrameProvenance>& provenance,
                    const TrackerOutput& output, std::uint64_t seed,
                    double gate_m = 631.0, double component_gate = 1.0);

/// Independent seeded runs (base_seed + run index), averaged per scan.
/// Reduction is associative and ordered by run index regardless of the
/// worker count.
MetricsReport run_monte_carlo(const ScenarioSpec& scenario, const TrackerConfig& cfg,
                              int runs, std::uint64_t base_seed, int threads = 1);

}  // namespace mptrack
