#include "mptrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mptrack {

namespace {
constexpr double kBig = 1e18;
}

// Shortest-augmenting-path assignment with potentials (O(n^3)).
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    const int n = std::max(rows, cols);

    // Pad to square; padded entries are "free" but never beat real pairs.
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            a[i][j] = (i <= rows && j <= cols) ? cost(i - 1, j - 1) : kBig;

    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = a[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> match(rows, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] >= 1 && p[j] <= rows && j <= cols) match[p[j] - 1] = j - 1;
    return match;
}

double ospa(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& estimate, double p, double cutoff) {
    const int nx = static_cast<int>(truth.size());
    const int ny = static_cast<int>(estimate.size());
    if (nx == 0 && ny == 0) return 0.0;
    if (nx == 0 || ny == 0) return cutoff;

    const auto& small = nx <= ny ? truth : estimate;
    const auto& large = nx <= ny ? estimate : truth;
    Eigen::MatrixXd cost(small.size(), large.size());
    for (std::size_t i = 0; i < small.size(); ++i)
        for (std::size_t j = 0; j < large.size(); ++j)
            cost(i, j) = std::pow(std::min((small[i] - large[j]).norm(), cutoff), p);

    std::vector<int> match = hungarian(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) total += cost(i, match[i]);
    const int n = std::max(nx, ny);
    total += std::pow(cutoff, p) * (n - static_cast<int>(small.size()));
    return std::pow(total / n, 1.0 / p);
}

double wasserstein_gaussian_sq(const Eigen::Vector2d& x1, const Eigen::Matrix2d& s1,
                               const Eigen::Vector2d& x2, const Eigen::Matrix2d& s2) {
    auto sqrt_spd = [](const Eigen::Matrix2d& m) -> Eigen::Matrix2d {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
        if (es.eigenvalues().minCoeff() < 0.0)
            throw std::invalid_argument("wasserstein_gaussian_sq: matrix not PSD");
        return es.operatorSqrt();
    };
    const Eigen::Matrix2d r1 = sqrt_spd(s1);
    const Eigen::Matrix2d cross = sqrt_spd(r1 * s2 * r1);
    const double trace = (s1 + s2 - 2.0 * cross).trace();
    return (x1 - x2).squaredNorm() + std::max(trace, 0.0);
}

void MetricsReport::resize(int scans) {
    n_scans = scans;
    ospa_sum.assign(scans, 0.0);
    car_correct.assign(scans, 0.0);
    car_total.assign(scans, 0.0);
    nft_sum.assign(scans, 0.0);
    rse_sum.assign(scans, 0.0);
    rse_count.assign(scans, 0.0);
    tnnc_est_sum.assign(scans, 0.0);
    tnnc_true_sum.assign(scans, 0.0);
    comp_err_sq_sum.assign(scans, 0.0);
    comp_matched.assign(scans, 0.0);
    wd_sum.assign(scans, 0.0);
    wd_count.assign(scans, 0.0);
}

MetricsReport MetricsReport::merge(const MetricsReport& a, const MetricsReport& b) {
    if (a.runs == 0) return b;
    if (b.runs == 0) return a;
    if (a.n_scans != b.n_scans)
        throw std::invalid_argument("MetricsReport::merge: scan count mismatch");
    MetricsReport out = a;
    out.runs += b.runs;
    out.seeds.insert(out.seeds.end(), b.seeds.begin(), b.seeds.end());
    auto add = [](std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    };
    add(out.ospa_sum, b.ospa_sum);
    add(out.car_correct, b.car_correct);
    add(out.car_total, b.car_total);
    add(out.nft_sum, b.nft_sum);
    add(out.rse_sum, b.rse_sum);
    add(out.rse_count, b.rse_count);
    add(out.tnnc_est_sum, b.tnnc_est_sum);
    add(out.tnnc_true_sum, b.tnnc_true_sum);
    add(out.comp_err_sq_sum, b.comp_err_sq_sum);
    add(out.comp_matched, b.comp_matched);
    add(out.wd_sum, b.wd_sum);
    add(out.wd_count, b.wd_count);
    out.run_mospa.insert(out.run_mospa.end(), b.run_mospa.begin(), b.run_mospa.end());
    out.run_targets_tracked.insert(out.run_targets_tracked.end(),
                                   b.run_targets_tracked.begin(), b.run_targets_tracked.end());
    out.run_targets_total.insert(out.run_targets_total.end(), b.run_targets_total.begin(),
                                 b.run_targets_total.end());
    out.run_components_found.insert(out.run_components_found.end(),
                                    b.run_components_found.begin(),
                                    b.run_components_found.end());
    out.run_components_total.insert(out.run_components_total.end(),
                                    b.run_components_total.begin(),
                                    b.run_components_total.end());
    return out;
}

double MetricsReport::mospa() const {
    if (runs == 0 || n_scans == 0) return 0.0;
    double s = 0.0;
    for (double v : ospa_sum) s += v;
    return s / (runs * n_scans);
}

double MetricsReport::car() const { return car_in(1, n_scans); }

double MetricsReport::car_in(int scan_begin, int scan_end) const {
    double correct = 0.0, total = 0.0;
    for (int k = scan_begin; k <= scan_end && k <= n_scans; ++k) {
        correct += car_correct[k - 1];
        total += car_total[k - 1];
    }
    return total > 0.0 ? correct / total : 0.0;
}

double MetricsReport::nft_per_scan() const {
    if (runs == 0 || n_scans == 0) return 0.0;
    double s = 0.0;
    for (double v : nft_sum) s += v;
    return s / (runs * n_scans);
}

double MetricsReport::mean_rse() const {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < rse_sum.size(); ++i) {
        s += rse_sum[i];
        c += rse_count[i];
    }
    return c > 0.0 ? s / c : 0.0;
}

double MetricsReport::component_rmse() const {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < comp_err_sq_sum.size(); ++i) {
        s += comp_err_sq_sum[i];
        c += comp_matched[i];
    }
    return c > 0.0 ? std::sqrt(s / c) : 0.0;
}

double MetricsReport::mean_wd() const {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < wd_sum.size(); ++i) {
        s += wd_sum[i];
        c += wd_count[i];
    }
    return c > 0.0 ? s / c : 0.0;
}

}  // namespace mptrack
