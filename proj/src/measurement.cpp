#include "mptrack/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mptrack/unscented.hpp"

namespace mptrack {

namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

double wrap_degrees(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

Eigen::Vector2d observe(const Eigen::Vector4d& state) {
    const double x = state(0), y = state(2);
    const double r = std::hypot(x, y);
    if (!(r > 0.0)) throw std::domain_error("observe: position at sensor origin");
    return {r / 1000.0, wrap_degrees(std::atan2(y, x) * kDegPerRad)};
}

Eigen::Matrix<double, 2, 4> observe_jacobian(const Eigen::Vector4d& state) {
    const double x = state(0), y = state(2);
    const double r2 = x * x + y * y;
    const double r = std::sqrt(r2);
    if (!(r > 0.0)) throw std::domain_error("observe_jacobian: position at sensor origin");
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = x / r / 1000.0;
    h(0, 2) = y / r / 1000.0;
    h(1, 0) = -y / r2 * kDegPerRad;
    h(1, 2) = x / r2 * kDegPerRad;
    return h;
}

Eigen::Vector2d polar_to_cartesian_m(const Eigen::Vector2d& y_kmdeg) {
    const double r_m = y_kmdeg(0) * 1000.0;
    const double az = y_kmdeg(1) / kDegPerRad;
    return {r_m * std::cos(az), r_m * std::sin(az)};
}

Eigen::Matrix2d polar_to_cartesian_jacobian(const Eigen::Vector2d& y_kmdeg) {
    const double r_m = y_kmdeg(0) * 1000.0;
    const double az = y_kmdeg(1) / kDegPerRad;
    Eigen::Matrix2d j;
    j(0, 0) = 1000.0 * std::cos(az);
    j(0, 1) = -r_m * std::sin(az) / kDegPerRad;
    j(1, 0) = 1000.0 * std::sin(az);
    j(1, 1) = r_m * std::cos(az) / kDegPerRad;
    return j;
}

TargetSpatialLikelihood::TargetSpatialLikelihood(const GaussianBelief& b,
                                                 const SensorModel& sensor) {
    SigmaPoints sp = SigmaPoints::from(b.mean, b.covariance);
    const int count = static_cast<int>(sp.points.size());

    std::vector<Eigen::Vector2d> transformed(count);
    for (int i = 0; i < count; ++i) {
        Eigen::Vector4d x = sp.points[i];
        transformed[i] = observe(x);
    }
    // Circular mean for the azimuth component.
    double r_mean = 0.0, c = 0.0, s = 0.0;
    for (int i = 0; i < count; ++i) {
        r_mean += sp.mean_weights[i] * transformed[i](0);
        c += sp.mean_weights[i] * std::cos(transformed[i](1) / kDegPerRad);
        s += sp.mean_weights[i] * std::sin(transformed[i](1) / kDegPerRad);
    }
    y_hat_ = {r_mean, std::atan2(s, c) * kDegPerRad};

    Eigen::Matrix2d s_hh = Eigen::Matrix2d::Zero();
    for (int i = 0; i < count; ++i) {
        Eigen::Vector2d d = transformed[i] - y_hat_;
        d(1) = wrap_degrees(d(1));
        s_hh += sp.cov_weights[i] * d * d.transpose();
    }

    const Eigen::Matrix2d r_cov = sensor.noise_cov();
    r_inv_ = r_cov.inverse();
    base_ = -kLog2Pi - 0.5 * std::log(r_cov.determinant()) - 0.5 * (r_inv_ * s_hh).trace();
}

double TargetSpatialLikelihood::expected_log(const Eigen::Vector2d& y) const {
    Eigen::Vector2d resid = y - y_hat_;
    resid(1) = wrap_degrees(resid(1));
    return base_ - 0.5 * resid.dot(r_inv_ * resid);
}

double expected_log_target_spatial(const GaussianBelief& b, const Eigen::Vector2d& y,
                                   const SensorModel& sensor) {
    return TargetSpatialLikelihood(b, sensor).expected_log(y);
}

double expected_log_strength(const InverseGammaBelief& b, double m,
                             const SwerlingModel& model) {
    if (!(b.shape > 2.0)) throw std::domain_error("expected_log_strength: shape must exceed 2");
    if (!(m > model.threshold))
        throw std::domain_error("expected_log_strength: strength at or below threshold");
    const int n = model.order;
    return (2 * n - 1) * std::log(m) - n * m * m * b.shape / b.scale +
           n / (2.0 * (b.shape - 2.0));
}

ClutterSpatialLikelihood::ClutterSpatialLikelihood(const GaussianWishartBelief& b) : b_(b) {
    constexpr int m = GaussianWishartBelief::kDim;
    GaussianWishartExpectations e = gw_expectations(b, b.location);
    // e.quadratic at y = location is the pure m/beta spread term.
    base_ = -0.5 * m * kLog2Pi + 0.5 * e.log_det_precision - 0.5 * e.quadratic;
}

double ClutterSpatialLikelihood::expected_log(const Eigen::Vector2d& y) const {
    Eigen::Vector2d r = y - b_.location;
    r(1) = wrap_degrees(r(1));
    return base_ - 0.5 * b_.dof * r.dot(b_.wishart_w * r);
}

double expected_log_clutter_spatial(const GaussianWishartBelief& b,
                                    const Eigen::Vector2d& y) {
    return ClutterSpatialLikelihood(b).expected_log(y);
}

double log_uniform_spatial(const SensorModel& sensor) {
    return -std::log(sensor.volume());
}

GeneratedFrame generate_frame(const ScanTruth& truth, const SensorModel& sensor,
                              RandomStream& rng) {
    GeneratedFrame out;
    out.frame.scan = truth.scan;
    out.frame.time_s = truth.time_s;

    struct Raw {
        Measurement meas;
        int target = -1;
        int component = -1;
    };
    std::vector<Raw> raws;
    out.provenance.target_measurement.assign(truth.targets.size(), -1);

    const double sr_km = sensor.sigma_range_m / 1000.0;
    for (std::size_t t = 0; t < truth.targets.size(); ++t) {
        const TargetTruth& tg = truth.targets[t];
        if (!tg.visible) continue;
        const double pd = detection_probability(tg.snr, sensor.swerling);
        if (rng.uniform01() > pd) continue;
        Eigen::Vector2d y = observe(tg.state);
        Raw r;
        r.meas.range_km = y(0) + rng.normal(0.0, sr_km);
        r.meas.azimuth_deg = wrap_degrees(y(1) + rng.normal(0.0, sensor.sigma_az_deg));
        r.meas.strength = sample_strength(tg.snr, sensor.swerling, rng);
        r.target = static_cast<int>(t);
        raws.push_back(r);
    }

    for (const ClutterTruth& cc : truth.clutter) {
        const int count = rng.poisson(cc.rate);
        Eigen::Matrix2d chol = Eigen::Matrix2d::Zero();
        if (!cc.uniform) {
            Eigen::LLT<Eigen::Matrix2d> llt(cc.cov_kmdeg);
            if (llt.info() != Eigen::Success)
                throw std::invalid_argument("generate_frame: clutter covariance not SPD");
            chol = llt.matrixL();
        }
        for (int i = 0; i < count; ++i) {
            Raw r;
            if (cc.uniform) {
                r.meas.range_km = rng.uniform(sensor.region.r_min_km, sensor.region.r_max_km);
                r.meas.azimuth_deg = rng.uniform(sensor.region.az_min_deg, sensor.region.az_max_deg);
            } else {
                Eigen::Vector2d z(rng.normal(), rng.normal());
                Eigen::Vector2d y = cc.mean_kmdeg + chol * z;
                r.meas.range_km = y(0);
                r.meas.azimuth_deg = wrap_degrees(y(1));
            }
            r.meas.strength = sample_strength(cc.cnr, sensor.swerling, rng);
            r.component = cc.id;
            raws.push_back(r);
        }
    }

    std::shuffle(raws.begin(), raws.end(), rng.engine());

    for (std::size_t j = 0; j < raws.size(); ++j) {
        out.frame.measurements.push_back(raws[j].meas);
        out.provenance.origin_target.push_back(raws[j].target >= 0
                                                   ? truth.targets[raws[j].target].id
                                                   : -1);
        out.provenance.origin_component.push_back(raws[j].component);
        if (raws[j].target >= 0)
            out.provenance.target_measurement[raws[j].target] = static_cast<int>(j);
    }
    return out;
}

}  // namespace mptrack
