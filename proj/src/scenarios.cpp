#include "mptrack/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mptrack {

namespace {

TargetSpec make_target(double x, double vx, double y, double vy, double snr) {
    TargetSpec t;
    t.initial_state << x, vx, y, vy;
    t.k_start = 1;
    t.k_end = 340;
    t.snr = snr;
    return t;
}

ClutterSpec uniform_background() {
    ClutterSpec c;
    c.uniform = true;
    c.rate = 30.0;
    c.k_start = 1;
    c.k_end = 340;
    c.cnr = 1.0;
    return c;
}

ClutterSpec gaussian_component(double rate, double r_km, double az_deg, int k_start,
                               int k_end, double cnr) {
    ClutterSpec c;
    c.uniform = false;
    c.rate = rate;
    c.mean_kmdeg << r_km, az_deg;
    c.cov_kmdeg = Eigen::Vector2d(1.0, 9.0).asDiagonal();  // diag(1 km, 3 deg)^2
    c.k_start = k_start;
    c.k_end = k_end;
    c.cnr = cnr;
    return c;
}

}  // namespace

ScenarioSpec paper_scenario(int id) {
    ScenarioSpec s;
    s.n_scans = 340;
    s.period_s = 1.25;

    const TargetSpec t1 = make_target(10000, 40, 13465, -40, 10.0 / 3.0);
    const TargetSpec t2 = make_target(10000, 40, 6570, 40, 50.0 / 3.0);
    const TargetSpec t3 = make_target(28000, 40, 20543, -12, 10.0 / 3.0);
    const TargetSpec t4 = make_target(28000, 40, 18000, 0, 50.0 / 3.0);
    const TargetSpec t5 = make_target(28000, 40, 15458, 12, 10.0 / 3.0);

    switch (id) {
        case 1:
            s.targets = {t1, t2};
            s.clutter = {uniform_background()};
            s.parallel_pair_first = 0;
            s.parallel_pair_second = 1;
            break;
        case 2:
        case 3:
            s.targets = {t1, t2, t3, t4, t5};
            s.clutter = {uniform_background(),
                         gaussian_component(20, 20.0, 30.0, 130, 170, 20.0 / 3.0),
                         gaussian_component(20, 27.0, 23.0, 227, 280, 10.0),
                         gaussian_component(30, 41.0, 27.0, 172, 225, 20.0 / 3.0)};
            s.parallel_pair_first = 0;
            s.parallel_pair_second = 1;
            if (id == 3)
                for (std::size_t i = 1; i < s.clutter.size(); ++i)
                    s.clutter[i].variation = ClutterVariation::sinusoidal;
            break;
        default:
            throw std::invalid_argument("paper_scenario: id must be 1, 2, or 3");
    }
    return s;
}

double clutter_rate_at(const ClutterSpec& spec, int k) {
    if (spec.variation == ClutterVariation::constant) return spec.rate;
    const double span = std::max(1, spec.k_end - spec.k_start);
    const double phase = std::numbers::pi * (k - spec.k_start) / span;
    return (1.0 + 0.5 * std::sin(phase)) * spec.rate;
}

Eigen::Matrix2d clutter_cov_at(const ClutterSpec& spec, int k) {
    if (spec.variation == ClutterVariation::constant) return spec.cov_kmdeg;
    const double span = std::max(1, spec.k_end - spec.k_start);
    const double factor = 1.0 / 3.0 + static_cast<double>(k - spec.k_start) / span;
    return factor * spec.cov_kmdeg;
}

std::vector<ScanTruth> truth_trajectories(const ScenarioSpec& spec) {
    for (const TargetSpec& t : spec.targets)
        if (t.k_start >= t.k_end) throw std::invalid_argument("truth_trajectories: bad lifetime");

    // Scan time at which the converging pair reaches the parallel gap.
    double t_parallel = -1.0;
    double y_hi = 0.0, y_lo = 0.0;
    if (spec.parallel_pair_first >= 0 && spec.parallel_pair_second >= 0) {
        const TargetSpec& a = spec.targets[spec.parallel_pair_first];
        const TargetSpec& b = spec.targets[spec.parallel_pair_second];
        const double gap0 = a.initial_state(2) - b.initial_state(2);
        const double rate = b.initial_state(3) - a.initial_state(3);
        const double sign = gap0 >= 0.0 ? 1.0 : -1.0;
        if (rate * sign > 0.0) {
            t_parallel = (std::abs(gap0) - spec.parallel_gap_m) / (rate * sign);
            const double mid =
                0.5 * (a.initial_state(2) + a.initial_state(3) * t_parallel +
                       b.initial_state(2) + b.initial_state(3) * t_parallel);
            y_hi = mid + sign * spec.parallel_gap_m / 2.0;
            y_lo = mid - sign * spec.parallel_gap_m / 2.0;
        }
    }

    std::vector<ScanTruth> out;
    out.reserve(spec.n_scans);
    for (int k = 1; k <= spec.n_scans; ++k) {
        ScanTruth scan;
        scan.scan = k;
        scan.time_s = (k - 1) * spec.period_s;
        for (std::size_t i = 0; i < spec.targets.size(); ++i) {
            const TargetSpec& ts = spec.targets[i];
            TargetTruth tt;
            tt.id = static_cast<int>(i) + 1;
            tt.snr = ts.snr;
            tt.visible = k >= ts.k_start && k <= ts.k_end;
            const double t = (k - ts.k_start) * spec.period_s;
            Eigen::Vector4d x = ts.initial_state;
            x(0) += x(1) * t;
            x(2) += x(3) * t;
            const bool in_pair = static_cast<int>(i) == spec.parallel_pair_first ||
                                 static_cast<int>(i) == spec.parallel_pair_second;
            if (in_pair && t_parallel > 0.0 && t >= t_parallel) {
                x(2) = static_cast<int>(i) == spec.parallel_pair_first ? y_hi : y_lo;
                x(3) = 0.0;
            }
            tt.state = x;
            scan.targets.push_back(tt);
        }
        for (std::size_t c = 0; c < spec.clutter.size(); ++c) {
            const ClutterSpec& cs = spec.clutter[c];
            if (k < cs.k_start || k > cs.k_end) continue;
            ClutterTruth ct;
            ct.id = static_cast<int>(c);
            ct.uniform = cs.uniform;
            ct.rate = clutter_rate_at(cs, k);
            ct.mean_kmdeg = cs.mean_kmdeg;
            ct.cov_kmdeg = clutter_cov_at(cs, k);
            ct.cnr = cs.cnr;
            scan.clutter.push_back(ct);
        }
        out.push_back(std::move(scan));
    }
    return out;
}

}  // namespace mptrack
