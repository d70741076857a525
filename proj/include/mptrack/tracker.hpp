#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mptrack/association.hpp"
#include "mptrack/dynamics.hpp"
#include "mptrack/measurement.hpp"
#include "mptrack/smoothers.hpp"

namespace mptrack {

struct WindowConfig {
    int length = 7;
    int step = 3;
    double mp_tolerance = 1e-3;
    int mp_max_iterations = 3;
    double bp_tolerance = 1e-6;
    int bp_max_iterations = 1000;
    double damping = 0.9;

    void validate() const;
};

struct LifecycleConfig {
    double confirm_threshold = 0.75;
    double delete_threshold = 0.5;
    double initial_visibility = 0.5;  // f_s
    VisibilityChain chain;
    double epsilon = 0.01;            // P_d(s=0)
    double v_max = 120.0;             // per-axis speed bound, m/s
    int l_max = 3;                    // max consecutive misses for pairing
    int max_components = 8;
};

struct TrackerConfig {
    CvModel motion;
    SensorModel sensor;
    ForgettingFactors forgetting;
    WindowConfig window;
    LifecycleConfig lifecycle;

    bool estimate_clutter = true;   // false: uniform background only
    bool known_clutter = false;     // clutter evidence pinned to provided truth
    bool use_strength = true;       // false: kinematics-only ablation
    double claim_threshold = 0.2;   // association mass blocking re-initialization
    int max_new_tracks_per_window = 40;
};

enum class TrackStatus { tentative, confirmed, deleted };

struct TrackEstimateRow {
    int scan = 0;
    int track_id = 0;
    Eigen::Vector4d state = Eigen::Vector4d::Zero();  // (x m, vx m/s, y m, vy m/s)
    double snr_mean = 0.0;
    double visibility = 0.0;
    TrackStatus status = TrackStatus::tentative;
    int assoc_measurement = -1;  // frame index of the argmax association, -1 = miss
};

struct ComponentEstimateRow {
    int scan = 0;
    int comp_id = 0;
    Eigen::Vector2d center_kmdeg = Eigen::Vector2d::Zero();
    Eigen::Matrix2d wishart_w = Eigen::Matrix2d::Identity();
    double dof = 3.0;
    double cnr_mean = 1.0;
    double weight = 0.0;
    double count = 0.0;
};

struct TrackerDiagnostics {
    long bp_runs = 0;
    long bp_converged = 0;
    long mp_iterations = 0;
    int windows = 0;
};

struct TrackerOutput {
    std::vector<TrackEstimateRow> tracks;
    std::vector<ComponentEstimateRow> components;
    TrackerDiagnostics diagnostics;
};

// ---- Initialization helpers (exposed for tests) ----------------------------

/// Uniform-plus-Gaussians mixture fit of unclaimed measurement positions.
/// Components are pruned by weight, support, and peak density against the
/// fitted uniform background.
struct ClusterInit {
    struct Cluster {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
        double support = 0.0;  // responsibility-weighted point count
    };
    std::vector<Cluster> clusters;
    std::vector<int> point_cluster;  // per point: claiming cluster or -1
};

ClusterInit cluster_measurements(const std::vector<Eigen::Vector2d>& points, double volume,
                                 int max_components, std::uint64_t seed,
                                 double min_support = 2.0);

/// A two-point track hypothesis.
struct TrackCandidate {
    int birth_scan = 0;  // global scan of the later measurement
    Eigen::Vector4d state = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
    double strength_scale = 1.0;  // IG beta = sum of squared pair strengths
};

struct TwoPointConfig {
    double v_max = 120.0;
    int l_max = 3;
    double period = 1.25;
    int max_candidates = 40;
};

/// Pairs unclaimed measurements across nearby scans under the per-axis
/// speed bound and deduplicates overlapping hypotheses.
std::vector<TrackCandidate> two_point_init(const std::vector<MeasurementFrame>& frames,
                                           const std::vector<std::vector<bool>>& candidate,
                                           const SensorModel& sensor,
                                           const TwoPointConfig& cfg);

// ---- Tracker ----------------------------------------------------------------

/// Sliding-window batch tracker running the closed-loop message-passing
/// iteration over association, weights, visibility, clutter, and targets.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg);

    /// Required when cfg.known_clutter is set.
    void set_known_clutter(std::vector<ScanTruth> truth);

    TrackerOutput run(const std::vector<MeasurementFrame>& frames);

private:
    struct PersistentTrack {
        int id = 0;
        int birth_scan = 0;
        TrackStatus status = TrackStatus::tentative;
        int anchor_scan = 0;
        GaussianBelief kinematic;
        InverseGammaBelief snr;
        double visibility = 0.5;
    };
    struct PersistentComponent {
        int id = 0;
        int anchor_scan = 0;
        GaussianWishartBelief spatial;
        InverseGammaBelief cnr;
    };

    TrackerConfig cfg_;
    std::vector<ScanTruth> known_clutter_;

    std::vector<PersistentTrack> tracks_;
    std::vector<PersistentComponent> comps_;
    InverseGammaBelief uniform_cnr_{3.0, 4.0};
    DirichletBelief weights_;
    double m_prev_ = 0.0;
    bool state_started_ = false;
    int next_track_id_ = 1;
    int next_comp_id_ = 1;
    std::unordered_map<int, std::vector<bool>> claimed_;

    void process_window(const std::vector<MeasurementFrame>& frames, int begin, int len,
                        int finalize, TrackerOutput& out);
};

}  // namespace mptrack
