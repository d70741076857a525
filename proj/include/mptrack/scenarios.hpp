#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mptrack/measurement.hpp"

namespace mptrack {

/// One simulated target: initial CV state, lifetime in scans, mean SNR.
struct TargetSpec {
    Eigen::Vector4d initial_state = Eigen::Vector4d::Zero();  // (x, vx, y, vy), m and m/s
    int k_start = 1;
    int k_end = 1;
    double snr = 1.0;
};

enum class ClutterVariation { constant, sinusoidal };

/// One clutter component: uniform background or a Gaussian region with an
/// optional time-varying rate/shape profile.
struct ClutterSpec {
    bool uniform = false;
    double rate = 0.0;  // mean detections per scan at k_start
    Eigen::Vector2d mean_kmdeg = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov_kmdeg = Eigen::Matrix2d::Identity();
    int k_start = 1;
    int k_end = 1;
    double cnr = 1.0;
    ClutterVariation variation = ClutterVariation::constant;
};

/// Declarative scenario description. An optional converging pair of
/// targets switches to parallel motion (zero cross-velocity) once their
/// separation reaches `parallel_gap_m`.
struct ScenarioSpec {
    std::vector<TargetSpec> targets;
    std::vector<ClutterSpec> clutter;
    int n_scans = 340;
    double period_s = 1.25;
    int parallel_pair_first = -1;   // index into targets, -1 disables
    int parallel_pair_second = -1;
    double parallel_gap_m = 20.0;
};

/// The three experiment configurations: (1) two targets in uniform
/// clutter, (2) five targets with three static Gaussian components,
/// (3) the same components with sinusoidal rate and growing shape.
ScenarioSpec paper_scenario(int id);

/// Deterministic truth propagation (randomness enters only through
/// measurement generation).
std::vector<ScanTruth> truth_trajectories(const ScenarioSpec& spec);

/// Rate multiplier and shape factor of the sinusoidal profile at scan k.
double clutter_rate_at(const ClutterSpec& spec, int k);
Eigen::Matrix2d clutter_cov_at(const ClutterSpec& spec, int k);

}  // namespace mptrack
