#include "mptrack/distributions.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mptrack {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

GaussianBelief::GaussianBelief(Eigen::VectorXd m, Eigen::MatrixXd p)
    : mean(std::move(m)), covariance(std::move(p)) {
    validate();
}

void GaussianBelief::validate() const {
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw std::invalid_argument("GaussianBelief: covariance shape mismatch");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("GaussianBelief: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("GaussianBelief: covariance not positive definite");
}

InverseGammaBelief::InverseGammaBelief(double alpha, double beta)
    : shape(alpha), scale(beta) {
    validate();
}

void InverseGammaBelief::validate() const {
    if (!(shape > 2.0))
        throw std::invalid_argument("InverseGammaBelief: shape must exceed 2");
    if (!(scale > 0.0))
        throw std::invalid_argument("InverseGammaBelief: scale must be positive");
}

GaussianWishartBelief::GaussianWishartBelief(const Eigen::Vector2d& x, double beta,
                                             const Eigen::Matrix2d& w, double nu)
    : location(x), scale_factor(beta), wishart_w(w), dof(nu) {
    validate();
}

void GaussianWishartBelief::validate() const {
    if (!(scale_factor > 0.0))
        throw std::invalid_argument("GaussianWishartBelief: scale factor must be positive");
    if (!(dof > kDim - 1))
        throw std::invalid_argument("GaussianWishartBelief: dof must exceed dim-1");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(wishart_w);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("GaussianWishartBelief: W not positive definite");
}

DirichletBelief::DirichletBelief(std::vector<double> alpha)
    : concentration(std::move(alpha)) {
    validate();
}

double DirichletBelief::total() const {
    double s = 0.0;
    for (double a : concentration) s += a;
    return s;
}

void DirichletBelief::validate() const {
    if (concentration.empty())
        throw std::invalid_argument("DirichletBelief: empty concentration");
    for (double a : concentration)
        if (a < 0.0) throw std::invalid_argument("DirichletBelief: negative concentration");
    if (!(total() > 0.0))
        throw std::invalid_argument("DirichletBelief: all concentrations zero");
}

SwerlingModel::SwerlingModel(int n, double d) : order(n), threshold(d) {
    validate();
}

void SwerlingModel::validate() const {
    if (order != 1 && order != 2)
        throw std::invalid_argument("SwerlingModel: order must be 1 or 2");
    if (threshold < 0.0)
        throw std::invalid_argument("SwerlingModel: threshold must be non-negative");
}

// The unthresholded strength density is the generalized Rayleigh
//   p(m) = 2 n^n m^(2n-1) / (Gamma(n) (sigma+1)^n) exp(-n m^2/(sigma+1)),
// i.e. m^2 ~ Gamma(n, scale (sigma+1)/n). The thresholded density divides
// by the exact tail so it integrates to 1 over (d, inf).

double rayleigh_tail_probability(double sigma, const SwerlingModel& model) {
    if (!(sigma > 0.0)) throw std::domain_error("rayleigh_tail_probability: sigma must be positive");
    const double x = model.order * model.threshold * model.threshold / (sigma + 1.0);
    if (model.order == 1) return std::exp(-x);
    return (1.0 + x) * std::exp(-x);
}

double rayleigh_thresholded_log_pdf(double m, double sigma, const SwerlingModel& model) {
    if (!(sigma > 0.0)) throw std::domain_error("rayleigh_thresholded_pdf: sigma must be positive");
    if (!(m > model.threshold))
        throw std::domain_error("rayleigh_thresholded_pdf: strength at or below threshold");
    const int n = model.order;
    const double sp1 = sigma + 1.0;
    double log_norm = std::log(2.0) + n * std::log(static_cast<double>(n)) -
                      std::lgamma(static_cast<double>(n)) - n * std::log(sp1);
    double log_p = log_norm + (2 * n - 1) * std::log(m) - n * m * m / sp1;
    return log_p - std::log(rayleigh_tail_probability(sigma, model));
}

double rayleigh_thresholded_pdf(double m, double sigma, const SwerlingModel& model) {
    return std::exp(rayleigh_thresholded_log_pdf(m, sigma, model));
}

double detection_probability(double sigma, const SwerlingModel& model) {
    if (!(sigma > 0.0)) throw std::domain_error("detection_probability: sigma must be positive");
    return std::exp(-model.order * model.threshold * model.threshold / (sigma + 1.0));
}

double sample_strength(double sigma, const SwerlingModel& model, RandomStream& rng) {
    if (!(sigma > 0.0)) throw std::domain_error("sample_strength: sigma must be positive");
    const double d2 = model.threshold * model.threshold;
    const double sp1 = sigma + 1.0;
    if (model.order == 1) {
        // Truncated exponential in m^2: inversion.
        double u = rng.uniform01();
        return std::sqrt(d2 - sp1 * std::log(u));
    }
    // Swerling-III: m^2 ~ Gamma(2, (sigma+1)/2) truncated to (d^2, inf).
    // Gamma envelope acceptance-rejection with a bounded retry count.
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        double g = rng.gamma(2.0, sp1 / 2.0);
        if (g > d2) return std::sqrt(g);
    }
    throw std::runtime_error("sample_strength: acceptance-rejection exhausted retries");
}

InverseGammaMoments ig_moments(const InverseGammaBelief& b) {
    if (!(b.shape > 2.0))
        throw std::domain_error("ig_moments: moments undefined for shape <= 2");
    InverseGammaMoments m;
    m.inv_mean = b.shape / b.scale;
    m.mean = b.scale / (b.shape - 1.0);
    m.second = b.scale * b.scale / ((b.shape - 1.0) * (b.shape - 2.0));
    return m;
}

GaussianWishartExpectations gw_expectations(const GaussianWishartBelief& b,
                                            const Eigen::Vector2d& y) {
    constexpr int m = GaussianWishartBelief::kDim;
    GaussianWishartExpectations e;
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += boost::math::digamma((b.dof + 1.0 - j) / 2.0);
    e.log_det_precision = s + m * std::log(2.0) + std::log(b.wishart_w.determinant());
    Eigen::Vector2d r = y - b.location;
    e.quadratic = m / b.scale_factor + b.dof * r.dot(b.wishart_w * r);
    return e;
}

double dirichlet_log_expectation(const DirichletBelief& b, int tau) {
    if (tau < 0 || tau >= b.size())
        throw std::out_of_range("dirichlet_log_expectation: index out of range");
    if (b.concentration[tau] == 0.0) return -kInf;
    return boost::math::digamma(b.concentration[tau]) - boost::math::digamma(b.total());
}

}  // namespace mptrack
