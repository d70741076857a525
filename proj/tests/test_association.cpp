#include <doctest.h>

#include <cmath>

#include "mptrack/association.hpp"
#include "mptrack/random.hpp"

using namespace mptrack;

namespace {

EvidenceMatrix make_evidence(const std::vector<std::vector<double>>& target_theta,
                             const std::vector<std::vector<double>>& clutter_theta) {
    EvidenceMatrix ev;
    for (const auto& row : target_theta) {
        std::vector<double> lg;
        for (double v : row) lg.push_back(std::log(v));
        ev.log_target.push_back(lg);
    }
    for (const auto& row : clutter_theta) {
        std::vector<double> lg;
        for (double v : row) lg.push_back(std::log(v));
        ev.log_clutter.push_back(lg);
    }
    return ev;
}

double row_total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
    return 0.5 * tv;
}

// Mean TV over all target rows and measurement columns.
double beliefs_tv(const AssociationBeliefs& x, const AssociationBeliefs& y) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < x.target.size(); ++i) {
        sum += row_total_variation(x.target[i], y.target[i]);
        ++count;
    }
    const int nm = x.target.empty()
                       ? (x.clutter.empty() ? 0 : static_cast<int>(x.clutter[0].size()) - 1)
                       : static_cast<int>(x.target[0].size()) - 1;
    for (int j = 1; j <= nm; ++j) {
        double tv = 0.0;
        for (std::size_t i = 0; i < x.target.size(); ++i)
            tv += std::abs(x.target[i][j] - y.target[i][j]);
        for (std::size_t t = 0; t < x.clutter.size(); ++t)
            tv += std::abs(x.clutter[t][j] - y.clutter[t][j]);
        sum += 0.5 * tv;
        ++count;
    }
    return count > 0 ? sum / count : 0.0;
}

void check_normalizations(const AssociationBeliefs& b, int nm) {
    for (const auto& row : b.target) {
        double s = 0.0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (int j = 1; j <= nm; ++j) {
        double s = 0.0;
        for (const auto& row : b.target) s += row[j];
        for (const auto& row : b.clutter) s += row[j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

EvidenceMatrix random_instance(RandomStream& rng, int nt, int nc, int nm) {
    std::vector<std::vector<double>> target(nt), clutter(nc + 1);
    for (int i = 0; i < nt; ++i) {
        target[i].push_back(std::exp(rng.uniform(-2.0, 1.0)));  // miss odds
        for (int j = 0; j < nm; ++j) target[i].push_back(std::exp(rng.uniform(-3.0, 3.0)));
    }
    for (int t = 0; t <= nc; ++t) {
        clutter[t].push_back(1.0);
        for (int j = 0; j < nm; ++j) clutter[t].push_back(std::exp(rng.uniform(-3.0, 3.0)));
    }
    return make_evidence(target, clutter);
}

}  // namespace

TEST_CASE("exact enumeration semantics") {
    SUBCASE("empty frame leaves only miss events") {
        EvidenceMatrix ev = make_evidence({{0.3}, {2.0}}, {{1.0}});
        AssociationBeliefs b = enumerate_exact(ev);
        CHECK(b.target[0][0] == doctest::Approx(1.0));
        CHECK(b.target[1][0] == doctest::Approx(1.0));
    }

    SUBCASE("single target, single measurement, uniform background") {
        const double t = 4.0, miss = 0.7, u = 1.5;
        EvidenceMatrix ev = make_evidence({{miss, t}}, {{1.0, u}});
        AssociationBeliefs b = enumerate_exact(ev);
        // Two joint events: target<->measurement (weight t) and
        // background<->measurement with the target missing (weight u*miss).
        CHECK(b.target[0][1] == doctest::Approx(t / (t + u * miss)));
        CHECK(b.target[0][0] == doctest::Approx(u * miss / (t + u * miss)));
        CHECK(b.clutter[0][1] == doctest::Approx(u * miss / (t + u * miss)));
    }

    SUBCASE("a silent nonuniform component sums both disappear states") {
        // One measurement, uniform + one nonuniform component, no targets.
        const double u = 1.0, c = 3.0;
        EvidenceMatrix ev = make_evidence({}, {{1.0, u}, {1.0, c}});
        AssociationBeliefs b = enumerate_exact(ev);
        // Events: uniform takes it (component silent, both a0 states: 2u),
        // component takes it (weight c).
        CHECK(b.clutter[1][1] == doctest::Approx(c / (c + 2.0 * u)));
        CHECK(b.clutter[0][1] == doctest::Approx(2.0 * u / (c + 2.0 * u)));
        // Disappear belief: silent mass splits evenly between a0 states.
        CHECK(b.clutter[1][0] == doctest::Approx(u / (c + 2.0 * u)));
    }

    SUBCASE("size guard") {
        RandomStream rng(1);
        EvidenceMatrix big = random_instance(rng, 5, 1, 3);
        CHECK_THROWS_AS(enumerate_exact(big), std::invalid_argument);
    }
}

TEST_CASE("belief propagation fixed point") {
    SUBCASE("tree instances are exact") {
        const double t = 9.0, u = 1.0, miss = 1.0;
        EvidenceMatrix ev = make_evidence({{miss, t}}, {{1.0, u}});
        auto [state, b] = run_bp(ev, 0.9, 1e-10, 2000);
        CHECK(state.converged);
        AssociationBeliefs exact = enumerate_exact(ev);
        CHECK(b.target[0][1] == doctest::Approx(exact.target[0][1]).epsilon(1e-6));
        CHECK(b.target[0][1] == doctest::Approx(0.9).epsilon(1e-6));
    }

    SUBCASE("permutation symmetry") {
        const double v = 2.7;
        EvidenceMatrix ev =
            make_evidence({{0.2, v, v}, {0.2, v, v}}, {{1.0, 0.4, 0.4}});
        auto [state, b] = run_bp(ev, 0.9, 1e-9, 2000);
        CHECK(state.converged);
        CHECK(b.target[0][1] == doctest::Approx(b.target[0][2]).epsilon(1e-9));
        CHECK(b.target[0][1] == doctest::Approx(b.target[1][1]).epsilon(1e-9));
        check_normalizations(b, 2);
    }

    SUBCASE("column rescaling leaves beliefs unchanged") {
        RandomStream rng(31);
        EvidenceMatrix ev = random_instance(rng, 2, 1, 3);
        auto [s1, b1] = run_bp(ev, 0.9, 1e-12, 5000);
        EvidenceMatrix scaled = ev;
        for (std::size_t i = 0; i < scaled.log_target.size(); ++i)
            scaled.log_target[i][2] += 7.3;
        for (std::size_t t = 0; t < scaled.log_clutter.size(); ++t)
            scaled.log_clutter[t][2] += 7.3;
        auto [s2, b2] = run_bp(scaled, 0.9, 1e-12, 5000);
        CHECK(beliefs_tv(b1, b2) < 1e-8);
    }

    SUBCASE("matched position evidence beats displaced evidence") {
        EvidenceMatrix near = make_evidence({{0.2, 5.0}}, {{1.0, 1.0}});
        EvidenceMatrix far = make_evidence({{0.2, 0.5}}, {{1.0, 1.0}});
        auto [sn, bn] = run_bp(near, 0.9, 1e-9, 2000);
        auto [sf, bf] = run_bp(far, 0.9, 1e-9, 2000);
        CHECK(bn.target[0][1] > bf.target[0][1]);
    }

    SUBCASE("random instances stay close to enumeration") {
        RandomStream rng(2024);
        double tv_sum = 0.0, tv_max = 0.0;
        int converged = 0;
        const int cases = 220;
        for (int c = 0; c < cases; ++c) {
            const int nt = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
            const int nc = static_cast<int>(rng.uniform(0.0, 3.0));
            const int nm = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
            EvidenceMatrix ev = random_instance(rng, nt, std::min(nc, 2), std::min(nm, 5));
            auto [state, b] = run_bp(ev, 0.9, 1e-8, 1000);
            if (state.converged) ++converged;
            AssociationBeliefs exact = enumerate_exact(ev);
            const double tv = beliefs_tv(b, exact);
            tv_sum += tv;
            tv_max = std::max(tv_max, tv);
            check_normalizations(b, ev.num_measurements());
        }
        MESSAGE("mean TV ", tv_sum / cases, " max TV ", tv_max, " converged ", converged,
                "/", cases);
        CHECK(tv_sum / cases <= 0.05);
        CHECK(tv_max <= 0.15);
        CHECK(converged >= static_cast<int>(0.99 * cases));
    }

    SUBCASE("non-convergence returns diagnostics instead of throwing") {
        RandomStream rng(5);
        EvidenceMatrix ev = random_instance(rng, 3, 2, 5);
        auto [state, b] = run_bp(ev, 0.9, 1e-16, 3);
        CHECK_FALSE(state.converged);
        CHECK(state.iterations == 3);
        CHECK(b.target.size() == 3);
    }

    SUBCASE("empty frame converges trivially") {
        EvidenceMatrix ev = make_evidence({{0.5}}, {{1.0}});
        auto [state, b] = run_bp(ev, 0.9, 1e-9, 100);
        CHECK(state.converged);
        CHECK(b.target[0][0] == doctest::Approx(1.0));
    }
}

TEST_CASE("evidence construction") {
    SensorModel sensor;
    sensor.swerling = SwerlingModel(1, 0.715);

    MeasurementFrame frame;
    frame.scan = 1;
    frame.measurements.push_back({20.0, 30.0, 2.0});
    frame.measurements.push_back({22.0, 32.0, 1.2});

    std::vector<ClutterEvidenceInput> clutter(1);
    clutter[0].uniform = true;
    clutter[0].cnr = InverseGammaBelief(3.0, 4.0);
    DirichletBelief weights({30.0});

    SUBCASE("uniform-only evidence separates spatial and strength terms") {
        EvidenceMatrix ev = build_evidence(frame, {}, clutter, weights, sensor);
        REQUIRE(ev.num_clutter() == 1);
        const double log_pi = dirichlet_log_expectation(weights, 0);
        for (int j = 0; j < 2; ++j) {
            const double expected =
                log_uniform_spatial(sensor) +
                expected_log_strength(clutter[0].cnr, frame.measurements[j].strength,
                                      sensor.swerling) +
                log_pi;
            CHECK(ev.log_clutter[0][j + 1] == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("miss odds follow the visibility-weighted detection ratio") {
        TargetEvidenceInput t;
        t.kinematic = GaussianBelief(Eigen::Vector4d(15000, 40, 10000, 0),
                                     Eigen::Vector4d(100, 4, 100, 4).asDiagonal());
        t.snr = InverseGammaBelief(3.0, 8.0);
        t.visibility = 0.9;
        EvidenceMatrix ev = build_evidence(frame, {t}, clutter, weights, sensor);
        const double pd = detection_probability(4.0, sensor.swerling);
        const double num = (1.0 - pd) * 0.9 + (1.0 - 0.01) * 0.1;
        const double den = pd * 0.9 + 0.01 * 0.1;
        CHECK(ev.log_target[0][0] == doctest::Approx(std::log(num / den)).epsilon(1e-12));
    }

    SUBCASE("inactive targets resolve to a sure miss") {
        TargetEvidenceInput t;
        t.active = false;
        EvidenceMatrix ev = build_evidence(frame, {t}, clutter, weights, sensor);
        auto [state, b] = run_bp(ev, 0.9, 1e-9, 500);
        CHECK(b.target[0][0] == doctest::Approx(1.0));
        check_normalizations(b, 2);
    }

    SUBCASE("kinematics-only mode drops the strength terms") {
        EvidenceOptions opt;
        opt.use_strength = false;
        EvidenceMatrix ev = build_evidence(frame, {}, clutter, weights, sensor, opt);
        const double log_pi = dirichlet_log_expectation(weights, 0);
        CHECK(ev.log_clutter[0][1] ==
              doctest::Approx(log_uniform_spatial(sensor) + log_pi).epsilon(1e-12));
    }
}
