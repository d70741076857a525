#include "mptrack/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace mptrack {

CvModel::CvModel(double t, double q) : period(t), accel_var(q) {
    if (!(period > 0.0)) throw std::invalid_argument("CvModel: period must be positive");
    if (accel_var < 0.0) throw std::invalid_argument("CvModel: noise intensity must be non-negative");
}

Eigen::Matrix4d CvModel::transition() const {
    const double t = period;
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 1) = t;
    f(2, 3) = t;
    return f;
}

Eigen::Matrix4d CvModel::process_noise() const {
    const double t = period;
    Eigen::Matrix2d block;
    block << t * t * t * t / 4.0, t * t * t / 2.0,
             t * t * t / 2.0,     t * t;
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    q.block<2, 2>(0, 0) = accel_var * block;
    q.block<2, 2>(2, 2) = accel_var * block;
    return q;
}

void ForgettingFactors::validate() const {
    if (!(snr > 1.0) || !(cnr > 1.0))
        throw std::invalid_argument("ForgettingFactors: SNR/CNR factors must exceed 1");
    if (!(spatial > 0.0) || spatial > 1.0)
        throw std::invalid_argument("ForgettingFactors: spatial factor must lie in (0,1]");
    if (!(weight > 0.0))
        throw std::invalid_argument("ForgettingFactors: weight balance must be positive");
}

void VisibilityChain::validate() const {
    if (survival < 0.0 || survival > 1.0 || birth < 0.0 || birth > 1.0)
        throw std::invalid_argument("VisibilityChain: probabilities must lie in [0,1]");
}

GaussianBelief cv_predict(const GaussianBelief& b, const CvModel& model) {
    if (b.dim() != 4) throw std::invalid_argument("cv_predict: state dimension must be 4");
    Eigen::Matrix4d f = model.transition();
    GaussianBelief out;
    out.mean = f * b.mean;
    out.covariance = f * b.covariance * f.transpose() + model.process_noise();
    return out;
}

InverseGammaBelief ig_predict(const InverseGammaBelief& b, double u) {
    if (!(u > 1.0)) throw std::invalid_argument("ig_predict: forgetting factor must exceed 1");
    InverseGammaBelief out;
    out.shape = (b.shape + u - 1.0) / u;
    out.scale = b.scale / u;
    return out;
}

GaussianWishartBelief gw_predict(const GaussianWishartBelief& b, double xi) {
    if (!(xi > 0.0) || xi > 1.0)
        throw std::invalid_argument("gw_predict: forgetting factor must lie in (0,1]");
    constexpr int m = GaussianWishartBelief::kDim;
    GaussianWishartBelief out = b;
    out.wishart_w = xi * b.wishart_w;
    out.dof = xi * (b.dof - m - 1.0) + m + 1.0;
    if (out.dof <= m - 1.0) out.dof = m - 1.0 + 1e-6;
    return out;
}

DirichletBelief dirichlet_predict(const DirichletBelief& b, double kappa, double m_prev) {
    if (m_prev < 0.0) throw std::invalid_argument("dirichlet_predict: negative clutter count");
    DirichletBelief out = b;
    const double total = b.total();
    if (!(total > 0.0) || !(kappa * m_prev > 0.0)) {
        for (double& a : out.concentration) a = 1.0;
        return out;
    }
    const double scale = kappa * m_prev / total;
    for (double& a : out.concentration) a *= scale;
    return out;
}

double visibility_predict(double p, const VisibilityChain& chain) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("visibility_predict: probability out of range");
    return chain.survival * p + chain.birth * (1.0 - p);
}

}  // namespace mptrack
