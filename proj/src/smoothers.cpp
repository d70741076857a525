#include "mptrack/smoothers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mptrack/unscented.hpp"

namespace mptrack {

namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kMissFloor = 1e-6;
constexpr double kShapeFloor = 2.0 + 1e-6;
}  // namespace

MeasurementFunction polar_measurement_function() {
    MeasurementFunction f;
    f.h = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return observe(Eigen::Vector4d(x));
    };
    f.angular = {false, true};
    return f;
}

std::optional<SyntheticMeasurement> synthetic_measurement(
    const MeasurementFrame& frame, const std::vector<double>& assoc_row,
    const Eigen::Matrix2d& noise_cov) {
    if (static_cast<int>(assoc_row.size()) != frame.size() + 1)
        throw std::invalid_argument("synthetic_measurement: association row size mismatch");
    const double detect = 1.0 - assoc_row[0];
    if (detect <= kMissFloor) return std::nullopt;
    double r = 0.0, c = 0.0, s = 0.0;
    for (int j = 0; j < frame.size(); ++j) {
        const double w = assoc_row[j + 1];
        r += w * frame.measurements[j].range_km;
        c += w * std::cos(frame.measurements[j].azimuth_deg / kDegPerRad);
        s += w * std::sin(frame.measurements[j].azimuth_deg / kDegPerRad);
    }
    SyntheticMeasurement out;
    out.value = {r / detect, std::atan2(s, c) * kDegPerRad};
    out.noise = noise_cov / detect;
    return out;
}

GaussianBelief ukf_update(const GaussianBelief& pred, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& r, const MeasurementFunction& h) {
    const int ny = static_cast<int>(y.size());
    SigmaPoints sp = SigmaPoints::from(pred.mean, pred.covariance);
    const int count = static_cast<int>(sp.points.size());

    std::vector<Eigen::VectorXd> gamma(count);
    for (int i = 0; i < count; ++i) gamma[i] = h.h(sp.points[i]);

    Eigen::VectorXd y_hat = Eigen::VectorXd::Zero(ny);
    for (int d = 0; d < ny; ++d) {
        if (d < static_cast<int>(h.angular.size()) && h.angular[d]) {
            double c = 0.0, s = 0.0;
            for (int i = 0; i < count; ++i) {
                c += sp.mean_weights[i] * std::cos(gamma[i](d) / kDegPerRad);
                s += sp.mean_weights[i] * std::sin(gamma[i](d) / kDegPerRad);
            }
            y_hat(d) = std::atan2(s, c) * kDegPerRad;
        } else {
            for (int i = 0; i < count; ++i) y_hat(d) += sp.mean_weights[i] * gamma[i](d);
        }
    }

    auto wrap_residual = [&](Eigen::VectorXd v) {
        for (int d = 0; d < ny; ++d)
            if (d < static_cast<int>(h.angular.size()) && h.angular[d])
                v(d) = wrap_degrees(v(d));
        return v;
    };

    Eigen::MatrixXd s_yy = Eigen::MatrixXd::Zero(ny, ny);
    Eigen::MatrixXd s_xy = Eigen::MatrixXd::Zero(pred.dim(), ny);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd dy = wrap_residual(gamma[i] - y_hat);
        Eigen::VectorXd dx = sp.points[i] - pred.mean;
        s_yy += sp.cov_weights[i] * dy * dy.transpose();
        s_xy += sp.cov_weights[i] * dx * dy.transpose();
    }
    s_yy += r;

    Eigen::MatrixXd gain = s_xy * s_yy.inverse();
    GaussianBelief out;
    out.mean = pred.mean + gain * wrap_residual(y - y_hat);
    out.covariance = pred.covariance - gain * s_yy * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

GaussianBelief rts_step(const GaussianBelief& filtered, const GaussianBelief& smoothed_next,
                        const Eigen::MatrixXd& f, const Eigen::MatrixXd& q) {
    Eigen::MatrixXd p_pred = f * filtered.covariance * f.transpose() + q;
    Eigen::MatrixXd gain = filtered.covariance * f.transpose() * p_pred.inverse();
    GaussianBelief out;
    out.mean = filtered.mean + gain * (smoothed_next.mean - f * filtered.mean);
    out.covariance =
        filtered.covariance + gain * (smoothed_next.covariance - p_pred) * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

std::vector<GaussianBelief> urtss_smooth(const std::vector<GaussianBelief>& filtered,
                                         const CvModel& model) {
    if (filtered.empty()) throw std::invalid_argument("urtss_smooth: empty sequence");
    std::vector<GaussianBelief> smoothed(filtered.size());
    smoothed.back() = filtered.back();
    const Eigen::Matrix4d f = model.transition();
    const Eigen::Matrix4d q = model.process_noise();
    for (int k = static_cast<int>(filtered.size()) - 2; k >= 0; --k)
        smoothed[k] = rts_step(filtered[k], smoothed[k + 1], f, q);
    return smoothed;
}

InverseGammaBelief ig_update(const InverseGammaBelief& pred,
                             const std::vector<double>& strengths,
                             const std::vector<double>& assoc_row,
                             const SwerlingModel& model) {
    if (assoc_row.size() != strengths.size() + 1)
        throw std::invalid_argument("ig_update: association row size mismatch");
    const double detect = 1.0 - assoc_row[0];
    if (detect <= kMissFloor) return pred;
    const int n = model.order;
    const double d2 = model.threshold * model.threshold;
    double alpha = 0.0, beta = 0.0;
    for (std::size_t j = 0; j < strengths.size(); ++j) {
        const double w = assoc_row[j + 1];
        if (w <= 0.0) continue;
        alpha += w * (pred.shape + n);
        beta += w * (pred.scale + n * strengths[j] * strengths[j] - n * d2);
    }
    InverseGammaBelief out;
    out.shape = std::max(alpha / detect, kShapeFloor);
    out.scale = beta / detect;
    // The one-to-many clutter case compounds the shape multiplicatively
    // scan over scan; rescale far beyond any useful precision to keep the
    // parameters finite (alpha/beta and the mean are preserved).
    constexpr double kShapeCap = 1e9;
    if (out.shape > kShapeCap) {
        const double s = kShapeCap / out.shape;
        out.shape *= s;
        out.scale *= s;
    }
    return out;
}

InverseGammaBelief ig_product(const InverseGammaBelief& a, const InverseGammaBelief& b) {
    InverseGammaBelief out;
    out.shape = std::max(a.shape + b.shape + 1.0, kShapeFloor);
    out.scale = a.scale + b.scale;
    return out;
}

InverseGammaBelief ig_smooth_step(const InverseGammaBelief& filtered,
                                  const InverseGammaBelief& smoothed_next, double u) {
    return ig_product(filtered, ig_predict(smoothed_next, u));
}

GaussianWishartBelief gw_update(const GaussianWishartBelief& pred,
                                const std::vector<Eigen::Vector2d>& positions,
                                const std::vector<double>& assoc_row) {
    if (assoc_row.size() != positions.size() + 1)
        throw std::invalid_argument("gw_update: association row size mismatch");
    double count = 0.0;
    for (std::size_t j = 0; j < positions.size(); ++j) count += assoc_row[j + 1];
    if (count < 1e-9) return pred;

    // Weighted statistics, azimuths taken in the branch nearest the prior
    // location.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> local(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) {
        local[j] = positions[j];
        local[j](1) = pred.location(1) + wrap_degrees(positions[j](1) - pred.location(1));
        mean += assoc_row[j + 1] * local[j];
    }
    mean /= count;
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (std::size_t j = 0; j < positions.size(); ++j) {
        Eigen::Vector2d d = local[j] - mean;
        scatter += assoc_row[j + 1] * d * d.transpose();
    }
    scatter /= count;

    GaussianWishartBelief out;
    out.scale_factor = pred.scale_factor + count;
    out.dof = pred.dof + count;
    out.location = (pred.scale_factor * pred.location + count * mean) / out.scale_factor;
    Eigen::Vector2d dm = mean - pred.location;
    Eigen::Matrix2d w_inv = pred.wishart_w.inverse() + count * scatter +
                            (pred.scale_factor * count / out.scale_factor) * dm * dm.transpose();
    out.wishart_w = w_inv.inverse();
    out.location(1) = wrap_degrees(out.location(1));
    return out;
}

GaussianWishartBelief gw_product(const GaussianWishartBelief& f,
                                 const GaussianWishartBelief& b) {
    constexpr int m = GaussianWishartBelief::kDim;
    GaussianWishartBelief out;
    out.scale_factor = f.scale_factor + b.scale_factor;
    Eigen::Vector2d loc_b = b.location;
    loc_b(1) = f.location(1) + wrap_degrees(b.location(1) - f.location(1));
    out.location =
        (f.scale_factor * f.location + b.scale_factor * loc_b) / out.scale_factor;
    out.location(1) = wrap_degrees(out.location(1));
    out.wishart_w = (f.wishart_w.inverse() + b.wishart_w.inverse()).inverse();
    out.dof = f.dof + b.dof - m - 1.0;
    if (out.dof <= m - 1.0) out.dof = m - 1.0 + 1e-6;
    return out;
}

GaussianWishartBelief gw_smooth_step(const GaussianWishartBelief& filtered,
                                     const GaussianWishartBelief& smoothed_next, double xi) {
    return gw_product(filtered, gw_predict(smoothed_next, xi));
}

DirichletBelief dirichlet_update(const DirichletBelief& pred,
                                 const std::vector<double>& component_counts) {
    if (component_counts.size() != pred.concentration.size())
        throw std::invalid_argument("dirichlet_update: count vector size mismatch");
    DirichletBelief out = pred;
    for (std::size_t t = 0; t < component_counts.size(); ++t)
        out.concentration[t] += component_counts[t];
    return out;
}

DirichletBelief dirichlet_product(const DirichletBelief& f, const DirichletBelief& b) {
    if (f.size() != b.size())
        throw std::invalid_argument("dirichlet_product: size mismatch");
    DirichletBelief out = f;
    for (int t = 0; t < f.size(); ++t) out.concentration[t] += b.concentration[t];
    return out;
}

DirichletBelief dirichlet_smooth_step(const DirichletBelief& filtered,
                                      const DirichletBelief& smoothed_next, double kappa,
                                      double m_next) {
    return dirichlet_product(filtered, dirichlet_predict(smoothed_next, kappa, m_next));
}

std::vector<double> hmm_forward_backward(const std::vector<VisibilityEvidence>& evidence,
                                         const VisibilityChain& chain, double initial,
                                         std::vector<double>* filtered) {
    const int n = static_cast<int>(evidence.size());
    if (n == 0) return {};

    auto emit = [&](int k, bool visible) {
        const VisibilityEvidence& e = evidence[k];
        if (e.visible <= 0.0 && e.invisible <= 0.0) return 1.0;
        return visible ? e.visible : e.invisible;
    };
    auto predict = [&](double fv, double fi) {
        return std::pair<double, double>{chain.survival * fv + chain.birth * fi,
                                         (1.0 - chain.survival) * fv + (1.0 - chain.birth) * fi};
    };

    std::vector<double> fwd_v(n), fwd_i(n);
    double pv = initial * emit(0, true);
    double pi = (1.0 - initial) * emit(0, false);
    double norm = pv + pi;
    fwd_v[0] = pv / norm;
    fwd_i[0] = pi / norm;
    for (int k = 1; k < n; ++k) {
        auto [qv, qi] = predict(fwd_v[k - 1], fwd_i[k - 1]);
        pv = qv * emit(k, true);
        pi = qi * emit(k, false);
        norm = pv + pi;
        fwd_v[k] = pv / norm;
        fwd_i[k] = pi / norm;
    }

    if (filtered) *filtered = fwd_v;

    std::vector<double> out(n);
    double bv = 1.0, bi = 1.0;
    out[n - 1] = fwd_v[n - 1];
    for (int k = n - 2; k >= 0; --k) {
        const double ev = emit(k + 1, true) * bv;
        const double ei = emit(k + 1, false) * bi;
        // T(s'|s) columns: from visible and from invisible.
        double nbv = chain.survival * ev + (1.0 - chain.survival) * ei;
        double nbi = chain.birth * ev + (1.0 - chain.birth) * ei;
        const double scale = nbv + nbi;
        bv = nbv / scale;
        bi = nbi / scale;
        const double sv = fwd_v[k] * bv;
        const double si = fwd_i[k] * bi;
        out[k] = sv / (sv + si);
    }
    return out;
}

}  // namespace mptrack
