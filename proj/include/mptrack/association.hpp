#pragma once

#include <string>
#include <vector>

#include "mptrack/distributions.hpp"
#include "mptrack/measurement.hpp"

namespace mptrack {

/// Per-scan log-evidence. Target rows i = 0..N_T-1 and clutter rows
/// tau = 0..N_C (tau = 0 is the uniform background). Column 0 holds the
/// miss / disappear log-odds; columns j >= 1 correspond to measurements.
/// Entries may be -inf for gated or inactive pairs.
struct EvidenceMatrix {
    std::vector<std::vector<double>> log_target;   // [i][j], j = 0..N_M
    std::vector<std::vector<double>> log_clutter;  // [tau][j], j = 0..N_M

    int num_targets() const { return static_cast<int>(log_target.size()); }
    int num_clutter() const { return static_cast<int>(log_clutter.size()); }
    int num_measurements() const {
        if (!log_clutter.empty()) return static_cast<int>(log_clutter[0].size()) - 1;
        if (!log_target.empty()) return static_cast<int>(log_target[0].size()) - 1;
        return 0;
    }
};

/// Damped-BP fixed point diagnostics.
struct BpState {
    int iterations = 0;
    bool converged = true;
    double max_delta = 0.0;
};

/// Marginal association probabilities. Target rows sum to 1 over
/// j = 0..N_M; measurement columns j >= 1 sum to 1 over all sources.
/// clutter[tau][0] is the component-disappears belief and participates in
/// neither normalization.
struct AssociationBeliefs {
    std::vector<std::vector<double>> target;   // [i][j]
    std::vector<std::vector<double>> clutter;  // [tau][j]

    double target_miss(int i) const { return target[i][0]; }
};

/// Inputs feeding one source row of the evidence matrix.
struct TargetEvidenceInput {
    GaussianBelief kinematic;
    InverseGammaBelief snr;
    double visibility = 0.5;
    bool active = true;
};

struct ClutterEvidenceInput {
    bool uniform = false;
    GaussianWishartBelief spatial;  // ignored for the uniform component
    InverseGammaBelief cnr;
};

struct EvidenceOptions {
    double epsilon = 0.01;          // P_d(s = 0)
    bool use_strength = true;       // drop strength terms for the kinematics-only ablation
    double gate_sigma = 0.0;        // Mahalanobis gate in measurement space; 0 disables
};

/// Builds the per-scan evidence matrix from the current beliefs: spatial
/// and strength log-expectations plus mixing-weight and visibility terms.
EvidenceMatrix build_evidence(const MeasurementFrame& frame,
                              const std::vector<TargetEvidenceInput>& targets,
                              const std::vector<ClutterEvidenceInput>& clutter,
                              const DirichletBelief& weights,
                              const SensorModel& sensor,
                              const EvidenceOptions& options = {});

/// Runs the simplified damped message fixed point and extracts marginal
/// association beliefs (per-variable odds followed by iterative
/// proportional fitting of the row/column normalizations).
std::pair<BpState, AssociationBeliefs> run_bp(const EvidenceMatrix& ev, double damping,
                                              double tolerance, int iter_max);

/// Exact marginals by brute-force enumeration of all joint association
/// events satisfying the one-source-per-measurement and one-measurement-
/// per-target constraints. Test oracle; guarded to small instances.
AssociationBeliefs enumerate_exact(const EvidenceMatrix& ev);

/// Debug dump of the evidence matrix and beliefs as CSV.
void dump_association_csv(const EvidenceMatrix& ev, const AssociationBeliefs& beliefs,
                          const std::string& path);

}  // namespace mptrack
