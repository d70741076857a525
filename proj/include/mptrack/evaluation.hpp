#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mptrack {

/// Optimal assignment of rows to columns minimizing total cost.
/// Returns, per row, the assigned column or -1. Rectangular matrices are
/// padded internally.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// Optimal subpattern assignment distance between two planar point sets
/// with order p and cutoff c (both empty sets give 0, pure cardinality
/// mismatch gives c).
double ospa(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& estimate, double p = 2.0,
            double cutoff = 631.0);

/// Squared 2-Wasserstein distance between Gaussians with means x and
/// covariances s (the Bures form with symmetric matrix square roots).
double wasserstein_gaussian_sq(const Eigen::Vector2d& x1, const Eigen::Matrix2d& s1,
                               const Eigen::Vector2d& x2, const Eigen::Matrix2d& s2);

/// Monte Carlo accumulators. All per-scan series store sums over runs so
/// that merging two reports is exact and order-independent.
struct MetricsReport {
    int runs = 0;
    int n_scans = 0;
    std::vector<std::uint64_t> seeds;

    std::vector<double> ospa_sum;
    std::vector<double> car_correct, car_total;
    std::vector<double> nft_sum;
    std::vector<double> rse_sum, rse_count;
    std::vector<double> tnnc_est_sum, tnnc_true_sum;
    std::vector<double> comp_err_sq_sum, comp_matched;
    std::vector<double> wd_sum, wd_count;

    std::vector<double> run_mospa;
    std::vector<int> run_targets_tracked;       // true targets covered by a confirmed track
    std::vector<int> run_targets_total;
    std::vector<int> run_components_found;      // true nonuniform components recovered
    std::vector<int> run_components_total;

    void resize(int scans);
    static MetricsReport merge(const MetricsReport& a, const MetricsReport& b);

    double mospa() const;
    double car() const;
    double car_in(int scan_begin, int scan_end) const;  // 1-based inclusive range
    double nft_per_scan() const;
    double mean_rse() const;
    double component_rmse() const;
    double mean_wd() const;
};

}  // namespace mptrack
