#include <doctest.h>

#include <cmath>

#include "mptrack/evaluation.hpp"
#include "mptrack/random.hpp"

using namespace mptrack;

TEST_CASE("hungarian assignment") {
    Eigen::MatrixXd cost(3, 3);
    cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    std::vector<int> m = hungarian(cost);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += cost(i, m[i]);
    CHECK(total == doctest::Approx(5.0));  // 1 + 2 + 2

    SUBCASE("rectangular") {
        Eigen::MatrixXd wide(2, 4);
        wide << 9, 1, 9, 9, 9, 9, 9, 2;
        std::vector<int> mm = hungarian(wide);
        CHECK(mm[0] == 1);
        CHECK(mm[1] == 3);
    }
}

TEST_CASE("OSPA distance") {
    std::vector<Eigen::Vector2d> a{{0, 0}, {1000, 0}};
    SUBCASE("identical sets give zero") { CHECK(ospa(a, a) == doctest::Approx(0.0)); }
    SUBCASE("pure cardinality penalty") {
        CHECK(ospa(a, {}) == doctest::Approx(631.0));
        CHECK(ospa({}, a) == doctest::Approx(631.0));
        CHECK(ospa({}, {}) == doctest::Approx(0.0));
    }
    SUBCASE("two-by-two optimal pairing") {
        std::vector<Eigen::Vector2d> est{{100, 0}, {1000, 200}};
        // Brute force over both pairings: identity pairing costs
        // (100^2 + 200^2)/2, the swap is cutoff-bound and worse.
        const double expected = std::sqrt((100.0 * 100 + 200.0 * 200) / 2.0);
        CHECK(ospa(a, est) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected == doctest::Approx(158.11).epsilon(1e-3));
    }
    SUBCASE("symmetry and bound") {
        RandomStream rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Eigen::Vector2d> x, y;
            const int nx = 1 + static_cast<int>(rng.uniform(0, 4));
            const int ny = 1 + static_cast<int>(rng.uniform(0, 4));
            for (int i = 0; i < nx; ++i)
                x.push_back({rng.uniform(-2000, 2000), rng.uniform(-2000, 2000)});
            for (int i = 0; i < ny; ++i)
                y.push_back({rng.uniform(-2000, 2000), rng.uniform(-2000, 2000)});
            const double d1 = ospa(x, y);
            const double d2 = ospa(y, x);
            CHECK(d1 == doctest::Approx(d2).epsilon(1e-9));
            CHECK(d1 <= 631.0 + 1e-9);
            CHECK(d1 >= 0.0);
        }
    }
}

TEST_CASE("Gaussian Wasserstein distance") {
    Eigen::Vector2d x(1.0, 2.0);
    Eigen::Matrix2d s = (Eigen::Vector2d(2.0, 0.5)).asDiagonal();

    SUBCASE("identity") { CHECK(wasserstein_gaussian_sq(x, s, x, s) == doctest::Approx(0.0)); }

    SUBCASE("commuting closed form") {
        const double a = 2.0, b = 0.5;
        Eigen::Matrix2d sa = Eigen::Matrix2d::Identity() * a;
        Eigen::Matrix2d sb = Eigen::Matrix2d::Identity() * b;
        const double expected = 2.0 * std::pow(std::sqrt(a) - std::sqrt(b), 2.0);
        CHECK(wasserstein_gaussian_sq(x, sa, x, sb) ==
              doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("mean displacement adds quadratically") {
        Eigen::Vector2d y(4.0, 6.0);
        CHECK(wasserstein_gaussian_sq(x, s, y, s) ==
              doctest::Approx((x - y).squaredNorm()).epsilon(1e-12));
    }

    SUBCASE("non-negative on random SPD pairs") {
        RandomStream rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::Matrix2d a, b;
            a << rng.uniform(0.5, 2.0), 0, rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2.0);
            b << rng.uniform(0.5, 2.0), 0, rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2.0);
            Eigen::Matrix2d sa = a * a.transpose();
            Eigen::Matrix2d sb = b * b.transpose();
            CHECK(wasserstein_gaussian_sq(x, sa, x, sb) >= -1e-12);
        }
    }
}

TEST_CASE("metrics report accumulators") {
    MetricsReport a;
    a.resize(3);
    a.runs = 1;
    a.seeds = {1};
    a.ospa_sum = {10.0, 20.0, 30.0};
    a.car_correct = {1, 1, 0};
    a.car_total = {1, 1, 1};
    a.run_mospa = {20.0};
    a.run_targets_tracked = {2};
    a.run_targets_total = {2};
    a.run_components_found = {0};
    a.run_components_total = {0};

    MetricsReport b = a;
    b.seeds = {2};
    b.ospa_sum = {30.0, 40.0, 50.0};

    MetricsReport merged = MetricsReport::merge(a, b);
    CHECK(merged.runs == 2);
    CHECK(merged.mospa() == doctest::Approx((60.0 + 120.0) / 6.0));
    CHECK(merged.car() == doctest::Approx(4.0 / 6.0));

    SUBCASE("merge is associative with the empty report") {
        MetricsReport empty;
        MetricsReport same = MetricsReport::merge(empty, a);
        CHECK(same.runs == 1);
        CHECK(same.mospa() == doctest::Approx(20.0));
    }

    SUBCASE("scan-range CAR selection") {
        CHECK(a.car_in(1, 2) == doctest::Approx(1.0));
        CHECK(a.car_in(3, 3) == doctest::Approx(0.0));
    }
}
