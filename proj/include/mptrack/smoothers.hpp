#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "mptrack/distributions.hpp"
#include "mptrack/dynamics.hpp"
#include "mptrack/measurement.hpp"

namespace mptrack {

/// Measurement map for the unscented update. `angular` marks degree-valued
/// components whose residuals must be wrapped.
struct MeasurementFunction {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> h;
    std::vector<bool> angular;
};

/// The polar (range km, azimuth deg) observation of a CV state.
MeasurementFunction polar_measurement_function();

/// Association-weighted synthetic measurement of Eq.-(34) form:
/// y_bar = sum_j a_j y_j / (1 - a_0), R_bar = R / (1 - a_0), with a
/// circular azimuth mean. Returns nullopt for an effective miss
/// (1 - a_0 <= 1e-6).
struct SyntheticMeasurement {
    Eigen::Vector2d value;
    Eigen::Matrix2d noise;
};
std::optional<SyntheticMeasurement> synthetic_measurement(
    const MeasurementFrame& frame, const std::vector<double>& assoc_row,
    const Eigen::Matrix2d& noise_cov);

/// Unscented measurement update of `pred` against measurement y with
/// noise covariance r.
GaussianBelief ukf_update(const GaussianBelief& pred, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& r, const MeasurementFunction& h);

/// Backward RTS pass (exact for the linear CV transition). Returns the
/// smoothed sequence; the final entry equals the filtered one.
std::vector<GaussianBelief> urtss_smooth(const std::vector<GaussianBelief>& filtered,
                                         const CvModel& model);

/// One RTS step: smooth `filtered` given the already-smoothed next-scan
/// belief, under transition (F, Q).
GaussianBelief rts_step(const GaussianBelief& filtered, const GaussianBelief& smoothed_next,
                        const Eigen::MatrixXd& f, const Eigen::MatrixXd& q);

/// Association-weighted Inverse-Gamma strength update. assoc_row[0] is the
/// miss probability, assoc_row[j] weights measurement j-1.
InverseGammaBelief ig_update(const InverseGammaBelief& pred,
                             const std::vector<double>& strengths,
                             const std::vector<double>& assoc_row,
                             const SwerlingModel& model);

/// Product of two Inverse-Gamma densities: alpha = a.alpha + b.alpha + 1,
/// beta = a.beta + b.beta (with the shape floored above 2).
InverseGammaBelief ig_product(const InverseGammaBelief& a, const InverseGammaBelief& b);

/// One backward smoothing step: reverse-predict the next-scan smoothed
/// belief and combine with the filtered one.
InverseGammaBelief ig_smooth_step(const InverseGammaBelief& filtered,
                                  const InverseGammaBelief& smoothed_next, double u);

/// Association-weighted Gaussian-Wishart update from one scan's positions.
GaussianWishartBelief gw_update(const GaussianWishartBelief& pred,
                                const std::vector<Eigen::Vector2d>& positions,
                                const std::vector<double>& assoc_row);

/// Product-rule combination of forward and backward Gaussian-Wishart
/// beliefs.
GaussianWishartBelief gw_product(const GaussianWishartBelief& f,
                                 const GaussianWishartBelief& b);

GaussianWishartBelief gw_smooth_step(const GaussianWishartBelief& filtered,
                                     const GaussianWishartBelief& smoothed_next, double xi);

/// Dirichlet count update: alpha_tau += sum_j a^c[tau][j].
DirichletBelief dirichlet_update(const DirichletBelief& pred,
                                 const std::vector<double>& component_counts);

DirichletBelief dirichlet_product(const DirichletBelief& f, const DirichletBelief& b);

DirichletBelief dirichlet_smooth_step(const DirichletBelief& filtered,
                                      const DirichletBelief& smoothed_next, double kappa,
                                      double m_next);

/// Per-scan miss evidence for the visibility chain: xi(s) for the visible
/// and invisible states.
struct VisibilityEvidence {
    double visible = 1.0;
    double invisible = 1.0;
};

/// HMM forward-backward smoothing of the visibility chain. Returns the
/// per-scan smoothed probability of visibility. All-zero evidence at a
/// scan is treated as uninformative. When `filtered` is given it receives
/// the forward (filter-only) probabilities.
std::vector<double> hmm_forward_backward(const std::vector<VisibilityEvidence>& evidence,
                                         const VisibilityChain& chain, double initial,
                                         std::vector<double>* filtered = nullptr);

}  // namespace mptrack
