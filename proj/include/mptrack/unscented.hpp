#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace mptrack {

/// Scaled sigma-point set with the standard Gaussian-optimal parameters
/// (alpha = 1e-3, beta = 2, kappa = 0).
struct SigmaPoints {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> mean_weights;
    std::vector<double> cov_weights;

    static constexpr double kAlpha = 1e-3;
    static constexpr double kBeta = 2.0;
    static constexpr double kKappa = 0.0;

    static SigmaPoints from(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
        const int n = static_cast<int>(mean.size());
        const double lambda = kAlpha * kAlpha * (n + kKappa) - n;
        Eigen::LLT<Eigen::MatrixXd> llt((n + lambda) * cov);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("SigmaPoints: covariance not positive definite");
        Eigen::MatrixXd root = llt.matrixL();

        SigmaPoints sp;
        sp.points.reserve(2 * n + 1);
        sp.mean_weights.reserve(2 * n + 1);
        sp.cov_weights.reserve(2 * n + 1);
        sp.points.push_back(mean);
        sp.mean_weights.push_back(lambda / (n + lambda));
        sp.cov_weights.push_back(lambda / (n + lambda) + (1.0 - kAlpha * kAlpha + kBeta));
        for (int i = 0; i < n; ++i) {
            sp.points.push_back(mean + root.col(i));
            sp.points.push_back(mean - root.col(i));
            const double w = 0.5 / (n + lambda);
            sp.mean_weights.push_back(w);
            sp.mean_weights.push_back(w);
            sp.cov_weights.push_back(w);
            sp.cov_weights.push_back(w);
        }
        return sp;
    }
};

}  // namespace mptrack
