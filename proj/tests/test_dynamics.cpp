#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <numbers>

#include "mptrack/dynamics.hpp"

using namespace mptrack;

namespace {

// Differential entropy of a Gaussian-Wishart density (Wishart entropy plus
// the expected conditional-Gaussian entropy), used to check that the
// spreading transition never loses entropy.
double gw_entropy(const GaussianWishartBelief& b) {
    constexpr int m = 2;
    const double nu = b.dof;
    const double logdet_w = std::log(b.wishart_w.determinant());
    double log_gamma_m = 0.5 * m * (m - 1) / 2.0 * std::log(std::numbers::pi);
    for (int j = 1; j <= m; ++j) log_gamma_m += std::lgamma((nu + 1.0 - j) / 2.0);
    double e_logdet = m * std::log(2.0) + logdet_w;
    for (int j = 1; j <= m; ++j) e_logdet += boost::math::digamma((nu + 1.0 - j) / 2.0);
    const double log_b = -0.5 * nu * logdet_w - 0.5 * nu * m * std::log(2.0) - log_gamma_m;
    const double wishart_entropy =
        -log_b - (nu - m - 1.0) / 2.0 * e_logdet + nu * m / 2.0;
    const double gaussian_entropy =
        0.5 * m * std::log(2.0 * std::numbers::pi * std::numbers::e) -
        0.5 * (m * std::log(b.scale_factor) + e_logdet);
    return wishart_entropy + gaussian_entropy;
}

}  // namespace

TEST_CASE("constant-velocity prediction") {
    SUBCASE("noiseless straight line") {
        GaussianBelief b(Eigen::Vector4d(0, 1, 0, 0), Eigen::Matrix4d::Identity());
        GaussianBelief out = cv_predict(b, CvModel(1.25, 0.0));
        CHECK(out.mean(0) == doctest::Approx(1.25));
        CHECK(out.mean(1) == doctest::Approx(1.0));
        CHECK(out.mean(2) == doctest::Approx(0.0));
    }

    SUBCASE("process noise block") {
        CvModel model(1.25, 0.01);
        Eigen::Matrix4d q = model.process_noise();
        CHECK(q(0, 0) == doctest::Approx(0.01 * 0.610351).epsilon(1e-4));
        CHECK(q(0, 1) == doctest::Approx(0.01 * 0.976562).epsilon(1e-4));
        CHECK(q(1, 1) == doctest::Approx(0.01 * 1.5625).epsilon(1e-6));
        CHECK(q(2, 2) == doctest::Approx(0.01 * 0.610351).epsilon(1e-4));
        CHECK(q(0, 2) == doctest::Approx(0.0));
    }

    SUBCASE("semigroup property at zero noise") {
        GaussianBelief b(Eigen::Vector4d(3, -2, 7, 5), Eigen::Matrix4d::Identity() * 2.0);
        GaussianBelief twice = cv_predict(cv_predict(b, CvModel(1.25, 0.0)), CvModel(1.25, 0.0));
        GaussianBelief once = cv_predict(b, CvModel(2.5, 0.0));
        CHECK((twice.mean - once.mean).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK((twice.covariance - once.covariance).norm() ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("inverse-gamma forgetting transition") {
    InverseGammaBelief b(3.0, 8.0);
    InverseGammaBelief out = ig_predict(b, 1.05);
    CHECK(out.shape == doctest::Approx(3.05 / 1.05).epsilon(1e-12));
    CHECK(out.scale == doctest::Approx(8.0 / 1.05).epsilon(1e-12));
    // The transition preserves the mean exactly and inflates the spread
    // (the shape parameter moves toward 1).
    CHECK(out.scale / (out.shape - 1.0) ==
          doctest::Approx(b.scale / (b.shape - 1.0)).epsilon(1e-12));
    CHECK(out.shape < b.shape);

    SUBCASE("near-identity limit") {
        InverseGammaBelief near = ig_predict(b, 1.0 + 1e-12);
        CHECK(near.shape == doctest::Approx(b.shape).epsilon(1e-9));
        CHECK(near.scale == doctest::Approx(b.scale).epsilon(1e-9));
    }
    SUBCASE("unit shape is a fixed point") {
        InverseGammaBelief one;
        one.shape = 1.0;
        one.scale = 2.0;
        CHECK(ig_predict(one, 1.3).shape == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(ig_predict(b, 0.9), std::invalid_argument);
}

TEST_CASE("Gaussian-Wishart spreading transition") {
    GaussianWishartBelief b(Eigen::Vector2d(1.0, 2.0), 3.0, Eigen::Matrix2d::Identity(), 7.0);

    SUBCASE("identity at xi = 1") {
        GaussianWishartBelief out = gw_predict(b, 1.0);
        CHECK(out.dof == doctest::Approx(7.0));
        CHECK((out.wishart_w - b.wishart_w).norm() == doctest::Approx(0.0));
    }
    SUBCASE("dof rule") {
        CHECK(gw_predict(b, 0.99).dof == doctest::Approx(0.99 * 4.0 + 3.0));
    }
    SUBCASE("spread inflates: mean precision shrinks and dof drops") {
        for (double xi : {0.999, 0.99, 0.9, 0.7}) {
            GaussianWishartBelief out = gw_predict(b, xi);
            // E[D] = dof * W shrinks in the Loewner order, so the expected
            // spatial extent grows; fewer dof mean wider relative spread.
            Eigen::Matrix2d diff = b.mean_precision() - out.mean_precision();
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(diff);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
            CHECK(out.dof < b.dof);
            // Note: the joint differential entropy is not monotone here.
            MESSAGE("gw entropy at xi=", xi, ": ", gw_entropy(out), " vs ", gw_entropy(b));
        }
    }
    SUBCASE("dof floor") {
        GaussianWishartBelief tiny = b;
        tiny.dof = 1.0 + 1e-9;
        GaussianWishartBelief out = gw_predict(tiny, 0.5);
        CHECK(out.dof > 1.0);
    }
}

TEST_CASE("Dirichlet weight transition") {
    DirichletBelief b({30.0, 20.0});
    DirichletBelief out = dirichlet_predict(b, 5.0, 50.0);
    CHECK(out.concentration[0] == doctest::Approx(150.0));
    CHECK(out.concentration[1] == doctest::Approx(100.0));

    SUBCASE("identity when kappa M equals the total") {
        DirichletBelief same = dirichlet_predict(b, 1.0, 50.0);
        CHECK(same.concentration[0] == doctest::Approx(30.0));
        CHECK(same.concentration[1] == doctest::Approx(20.0));
    }
    SUBCASE("proportions preserved") {
        DirichletBelief any = dirichlet_predict(b, 3.7, 11.2);
        CHECK(any.concentration[0] / any.total() == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("dead mixture resets to uniform") {
        DirichletBelief dead;
        dead.concentration = {0.0, 0.0};
        DirichletBelief reset = dirichlet_predict(dead, 5.0, 50.0);
        CHECK(reset.concentration[0] == doctest::Approx(1.0));
        CHECK(reset.concentration[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("visibility chain") {
    VisibilityChain chain;
    chain.survival = 0.8;
    chain.birth = 0.15;
    CHECK(visibility_predict(1.0, chain) == doctest::Approx(0.8));
    CHECK(visibility_predict(0.0, chain) == doctest::Approx(0.15));

    const double stationary = chain.stationary();
    CHECK(visibility_predict(stationary, chain) == doctest::Approx(stationary).epsilon(1e-12));
    CHECK(stationary == doctest::Approx(0.15 / 0.35));
}
