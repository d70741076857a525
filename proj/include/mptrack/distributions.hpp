#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mptrack/random.hpp"

namespace mptrack {

/// Gaussian belief over a kinematic state (mean + covariance).
struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    GaussianBelief() = default;
    GaussianBelief(Eigen::VectorXd m, Eigen::MatrixXd p);

    int dim() const { return static_cast<int>(mean.size()); }
    void validate() const;
};

/// Inverse-Gamma belief over a mean power ratio (SNR or CNR).
/// Shape must stay above 2 so the first two moments exist.
struct InverseGammaBelief {
    double shape = 3.0;  // alpha
    double scale = 1.0;  // beta

    InverseGammaBelief() = default;
    InverseGammaBelief(double alpha, double beta);

    double mean() const { return scale / (shape - 1.0); }
    void validate() const;
};

/// Gaussian-Wishart belief over a clutter component's centroid and
/// precision matrix in measurement space (km, deg).
struct GaussianWishartBelief {
    Eigen::Vector2d location;    // x_hat
    double scale_factor = 1.0;   // beta
    Eigen::Matrix2d wishart_w;   // W
    double dof = 3.0;            // upsilon

    GaussianWishartBelief() = default;
    GaussianWishartBelief(const Eigen::Vector2d& x, double beta,
                          const Eigen::Matrix2d& w, double nu);

    static constexpr int kDim = 2;
    /// Posterior-mean precision E[D] = dof * W.
    Eigen::Matrix2d mean_precision() const { return dof * wishart_w; }
    void validate() const;
};

/// Dirichlet belief over clutter mixing weights, one concentration per
/// component (index 0 is the uniform background component).
struct DirichletBelief {
    std::vector<double> concentration;

    DirichletBelief() = default;
    explicit DirichletBelief(std::vector<double> alpha);

    int size() const { return static_cast<int>(concentration.size()); }
    double total() const;
    void validate() const;
};

/// Swerling fluctuation model selecting the exponent of the generalized
/// Rayleigh strength density, together with the detection threshold.
struct SwerlingModel {
    int order = 1;       // 1 = Swerling-I, 2 = Swerling-III
    double threshold = 0.0;

    SwerlingModel() = default;
    SwerlingModel(int n, double d);
    void validate() const;
};

// ---- Strength (generalized Rayleigh) -------------------------------------

/// Thresholded strength density: the generalized Rayleigh density
/// conditioned on m > d. Normalized to 1 over (d, inf).
double rayleigh_thresholded_pdf(double m, double sigma, const SwerlingModel& model);
double rayleigh_thresholded_log_pdf(double m, double sigma, const SwerlingModel& model);

/// Detection probability exp(-n d^2 / (sigma+1)). Exact for order 1,
/// an approximation for order 2 (see rayleigh_tail_probability).
double detection_probability(double sigma, const SwerlingModel& model);

/// Exact tail integral of the (unthresholded) strength density over
/// (d, inf). Coincides with detection_probability for order 1.
double rayleigh_tail_probability(double sigma, const SwerlingModel& model);

/// Draw a strength above the model threshold. Order 1 uses inversion;
/// order 2 uses acceptance-rejection with a bounded retry count.
double sample_strength(double sigma, const SwerlingModel& model, RandomStream& rng);

// ---- Conjugate expectation terms ------------------------------------------

struct InverseGammaMoments {
    double inv_mean;     // E[1/sigma] = alpha/beta
    double mean;         // E[sigma]   = beta/(alpha-1)
    double second;       // E[sigma^2] = beta^2/((alpha-1)(alpha-2))
};

InverseGammaMoments ig_moments(const InverseGammaBelief& b);

struct GaussianWishartExpectations {
    double log_det_precision;  // E[ln |D|]
    double quadratic;          // E[(y-x)^T D (y-x)]
};

GaussianWishartExpectations gw_expectations(const GaussianWishartBelief& b,
                                            const Eigen::Vector2d& y);

/// E[ln pi_tau] = psi(alpha_tau) - psi(sum alpha). Returns -inf for a
/// zero concentration (component excluded).
double dirichlet_log_expectation(const DirichletBelief& b, int tau);

}  // namespace mptrack
