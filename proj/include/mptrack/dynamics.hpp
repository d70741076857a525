#pragma once

#include <Eigen/Dense>

#include "mptrack/distributions.hpp"

namespace mptrack {

/// Constant-velocity motion model for the 4-state (x, vx, y, vy) ordering.
struct CvModel {
    double period = 1.25;        // sampling period T, seconds
    double accel_var = 0.01;     // process noise intensity sigma_v^2, (m/s^2)^2

    CvModel() = default;
    CvModel(double t, double q);

    Eigen::Matrix4d transition() const;   // F
    Eigen::Matrix4d process_noise() const;  // Q
};

/// Forgetting factors driving the SNR/CNR, clutter-shape, and weight
/// transitions.
struct ForgettingFactors {
    double snr = 1.05;      // u^t, target SNR
    double cnr = 1.05;      // u^c, clutter CNR
    double spatial = 0.99;  // xi, clutter spatial spread
    double weight = 5.0;    // kappa, weight balance

    void validate() const;
};

/// Two-state visibility Markov chain.
struct VisibilityChain {
    double survival = 0.8;  // p_s
    double birth = 0.15;    // p_b

    void validate() const;
    /// Stationary visibility probability p_b / (1 - p_s + p_b).
    double stationary() const { return birth / (1.0 - survival + birth); }
};

/// One-step CV prediction: mean <- F mean, covariance <- F P F^T + Q.
GaussianBelief cv_predict(const GaussianBelief& b, const CvModel& model);

/// Forgetting-factor Inverse-Gamma transition; identical forward and in
/// reverse. alpha' = (alpha+u-1)/u, beta' = beta/u.
InverseGammaBelief ig_predict(const InverseGammaBelief& b, double u);

/// Gaussian-Wishart spreading transition: W' = xi W,
/// nu' = xi (nu - m - 1) + m + 1, location and scale factor unchanged.
/// Degrees of freedom are floored just above m-1 if the rule violates
/// the Wishart domain.
GaussianWishartBelief gw_predict(const GaussianWishartBelief& b, double xi);

/// Dirichlet weight transition: alpha'_tau = kappa M_prev alpha_tau / sum(alpha).
/// Proportions are preserved exactly. A fully dead mixture resets to a
/// uniform prior.
DirichletBelief dirichlet_predict(const DirichletBelief& b, double kappa, double m_prev);

/// One-step visibility prediction p' = p_s p + p_b (1 - p).
double visibility_predict(double p, const VisibilityChain& chain);

}  // namespace mptrack
