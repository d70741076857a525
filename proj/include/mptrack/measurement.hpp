#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mptrack/distributions.hpp"
#include "mptrack/random.hpp"

namespace mptrack {

/// Rectangular surveillance region in measurement space (km, deg).
struct SurveillanceRegion {
    double r_min_km = 5.0;
    double r_max_km = 50.0;
    double az_min_deg = 10.0;
    double az_max_deg = 60.0;

    double volume() const { return (r_max_km - r_min_km) * (az_max_deg - az_min_deg); }
};

/// Sensor model: polar position noise, surveillance volume, and the
/// Swerling strength model shared by targets and clutter.
struct SensorModel {
    double sigma_range_m = 20.0;
    double sigma_az_deg = 0.6;
    SurveillanceRegion region;
    SwerlingModel swerling;

    /// Measurement noise covariance in (km, deg)^2 units.
    Eigen::Matrix2d noise_cov() const {
        Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
        const double sr_km = sigma_range_m / 1000.0;
        r(0, 0) = sr_km * sr_km;
        r(1, 1) = sigma_az_deg * sigma_az_deg;
        return r;
    }
    double volume() const { return region.volume(); }
};

/// One detection: polar position (km, deg) and strength ratio.
struct Measurement {
    double range_km = 0.0;
    double azimuth_deg = 0.0;
    double strength = 0.0;
};

/// One scan's detections.
struct MeasurementFrame {
    int scan = 0;
    double time_s = 0.0;
    std::vector<Measurement> measurements;

    int size() const { return static_cast<int>(measurements.size()); }
    Eigen::Vector2d position(int j) const {
        return {measurements[j].range_km, measurements[j].azimuth_deg};
    }
};

/// Wrap an angle difference to (-180, 180] degrees.
double wrap_degrees(double deg);

/// Polar observation of a 4-state (x, vx, y, vy) in meters:
/// range in km, azimuth = atan2(y, x) in degrees.
Eigen::Vector2d observe(const Eigen::Vector4d& state);

/// Jacobian of observe with respect to the state (2x4).
Eigen::Matrix<double, 2, 4> observe_jacobian(const Eigen::Vector4d& state);

/// Cartesian position (meters) from a polar measurement, and the Jacobian
/// of that map with respect to (r_km, az_deg).
Eigen::Vector2d polar_to_cartesian_m(const Eigen::Vector2d& y_kmdeg);
Eigen::Matrix2d polar_to_cartesian_jacobian(const Eigen::Vector2d& y_kmdeg);

/// E[ln N(y; h(x), R)] over x ~ b, evaluated with the unscented transform
/// (statistical linearization of the polar observation). Includes the
/// Gaussian normalization constant so target and clutter evidence share a
/// common scale.
double expected_log_target_spatial(const GaussianBelief& b, const Eigen::Vector2d& y,
                                   const SensorModel& sensor);

/// Precomputed form of expected_log_target_spatial for scoring many
/// measurements against one belief.
class TargetSpatialLikelihood {
public:
    TargetSpatialLikelihood(const GaussianBelief& b, const SensorModel& sensor);
    double expected_log(const Eigen::Vector2d& y) const;
    const Eigen::Vector2d& predicted() const { return y_hat_; }

private:
    Eigen::Vector2d y_hat_;
    Eigen::Matrix2d r_inv_;
    double base_;  // constant plus belief-spread trace term
};

/// Precomputed form of expected_log_clutter_spatial.
class ClutterSpatialLikelihood {
public:
    explicit ClutterSpatialLikelihood(const GaussianWishartBelief& b);
    double expected_log(const Eigen::Vector2d& y) const;

private:
    GaussianWishartBelief b_;
    double base_;  // constant, E[ln|D|], and location-spread terms
};

/// E[ln R^d(m; sigma, n)] over sigma ~ b via the second-order closed form
/// (2n-1) ln m - n m^2 alpha/beta + n / (2 (alpha - 2)).
double expected_log_strength(const InverseGammaBelief& b, double m,
                             const SwerlingModel& model);

/// E[ln N(y; x, D^-1)] over (x, D) ~ b for a nonuniform clutter component.
double expected_log_clutter_spatial(const GaussianWishartBelief& b,
                                    const Eigen::Vector2d& y);

/// Spatial log-density of the uniform background component, ln(1/V_G).
double log_uniform_spatial(const SensorModel& sensor);

// ---- Truth-driven frame generation -----------------------------------------

struct TargetTruth {
    int id = 0;
    Eigen::Vector4d state = Eigen::Vector4d::Zero();  // meters, m/s
    double snr = 1.0;
    bool visible = true;
};

struct ClutterTruth {
    int id = 0;
    bool uniform = false;
    double rate = 0.0;                                 // mean detections per scan
    Eigen::Vector2d mean_kmdeg = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov_kmdeg = Eigen::Matrix2d::Identity();
    double cnr = 1.0;
};

struct ScanTruth {
    int scan = 1;
    double time_s = 0.0;
    std::vector<TargetTruth> targets;
    std::vector<ClutterTruth> clutter;
};

/// Per-measurement origin labels plus the measurement index generated by
/// each truth target (-1 when missed).
struct FrameProvenance {
    std::vector<int> origin_target;     // per measurement: target id or -1
    std::vector<int> origin_component;  // per measurement: component id or -1
    std::vector<int> target_measurement;  // per truth target: index into frame or -1
};

struct GeneratedFrame {
    MeasurementFrame frame;
    FrameProvenance provenance;
};

/// Simulate one scan: Bernoulli detection per visible target, Poisson
/// counts per clutter component, strengths above threshold, frame order
/// randomized.
GeneratedFrame generate_frame(const ScanTruth& truth, const SensorModel& sensor,
                              RandomStream& rng);

}  // namespace mptrack
