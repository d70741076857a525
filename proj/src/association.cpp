#include "mptrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mptrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double odds_to_prob(double r) {
    if (std::isinf(r)) return 1.0;
    return r / (1.0 + r);
}

}  // namespace

EvidenceMatrix build_evidence(const MeasurementFrame& frame,
                              const std::vector<TargetEvidenceInput>& targets,
                              const std::vector<ClutterEvidenceInput>& clutter,
                              const DirichletBelief& weights,
                              const SensorModel& sensor,
                              const EvidenceOptions& options) {
    const int nm = frame.size();
    const int nt = static_cast<int>(targets.size());
    const int nc = static_cast<int>(clutter.size());
    if (weights.size() != nc)
        throw std::invalid_argument("build_evidence: weight/component count mismatch");

    EvidenceMatrix ev;
    ev.log_target.assign(nt, std::vector<double>(nm + 1, -kInf));
    ev.log_clutter.assign(nc, std::vector<double>(nm + 1, 0.0));

    for (int i = 0; i < nt; ++i) {
        const TargetEvidenceInput& t = targets[i];
        if (!t.active) {
            ev.log_target[i][0] = 0.0;  // odds 1; the row resolves to a sure miss
            continue;
        }
        const double pd = detection_probability(ig_moments(t.snr).mean, sensor.swerling);
        const double v = t.visibility;
        const double miss_num = (1.0 - pd) * v + (1.0 - options.epsilon) * (1.0 - v);
        const double miss_den = pd * v + options.epsilon * (1.0 - v);
        ev.log_target[i][0] = std::log(miss_num) - std::log(miss_den);

        const TargetSpatialLikelihood spatial(t.kinematic, sensor);
        for (int j = 0; j < nm; ++j) {
            const Eigen::Vector2d y = frame.position(j);
            if (options.gate_sigma > 0.0) {
                // Cheap gate on the predicted measurement with noise floor R.
                Eigen::Vector2d d = y - spatial.predicted();
                d(1) = wrap_degrees(d(1));
                const Eigen::Matrix2d s = sensor.noise_cov();
                if (d.dot(s.inverse() * d) > options.gate_sigma * options.gate_sigma) continue;
            }
            double e = spatial.expected_log(y);
            if (options.use_strength)
                e += expected_log_strength(t.snr, frame.measurements[j].strength,
                                           sensor.swerling);
            ev.log_target[i][j + 1] = e;
        }
    }

    for (int tau = 0; tau < nc; ++tau) {
        const ClutterEvidenceInput& c = clutter[tau];
        const double log_pi = dirichlet_log_expectation(weights, tau);
        std::optional<ClutterSpatialLikelihood> spatial;
        if (!c.uniform) spatial.emplace(c.spatial);
        for (int j = 0; j < nm; ++j) {
            double e = c.uniform ? log_uniform_spatial(sensor)
                                 : spatial->expected_log(frame.position(j));
            if (options.use_strength)
                e += expected_log_strength(c.cnr, frame.measurements[j].strength,
                                           sensor.swerling);
            ev.log_clutter[tau][j + 1] = e + log_pi;
        }
    }
    return ev;
}

namespace {

/// Evidence rescaled so each measurement column peaks at 1 in linear
/// space. Beliefs are invariant to per-column rescaling, so this only
/// protects against underflow.
struct ScaledEvidence {
    std::vector<std::vector<double>> target;   // linear theta, [i][0..nm]
    std::vector<std::vector<double>> clutter;  // linear theta, [tau][0..nm]
    int nt, nc, nm;

    explicit ScaledEvidence(const EvidenceMatrix& ev) {
        nt = ev.num_targets();
        nc = ev.num_clutter();
        nm = ev.num_measurements();
        target.assign(nt, std::vector<double>(nm + 1, 0.0));
        clutter.assign(nc, std::vector<double>(nm + 1, 0.0));
        for (int j = 1; j <= nm; ++j) {
            double mx = -kInf;
            for (int i = 0; i < nt; ++i) mx = std::max(mx, ev.log_target[i][j]);
            for (int t = 0; t < nc; ++t) mx = std::max(mx, ev.log_clutter[t][j]);
            if (mx == -kInf) mx = 0.0;
            for (int i = 0; i < nt; ++i)
                target[i][j] = std::exp(ev.log_target[i][j] - mx);
            for (int t = 0; t < nc; ++t)
                clutter[t][j] = std::exp(ev.log_clutter[t][j] - mx);
        }
        for (int i = 0; i < nt; ++i) target[i][0] = std::exp(ev.log_target[i][0]);
        for (int t = 0; t < nc; ++t) clutter[t][0] = std::exp(ev.log_clutter[t][0]);
    }
};

void fit_normalizations(const ScaledEvidence& se, AssociationBeliefs& b) {
    constexpr int kMaxSweeps = 20;
    const int nt = se.nt, nc = se.nc, nm = se.nm;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double worst = 0.0;
        for (int j = 1; j <= nm; ++j) {
            double col = 0.0;
            for (int i = 0; i < nt; ++i) col += b.target[i][j];
            for (int t = 0; t < nc; ++t) col += b.clutter[t][j];
            if (col <= 0.0) continue;
            worst = std::max(worst, std::abs(col - 1.0));
            for (int i = 0; i < nt; ++i) b.target[i][j] /= col;
            for (int t = 0; t < nc; ++t) b.clutter[t][j] /= col;
        }
        for (int i = 0; i < nt; ++i) {
            double row = 0.0;
            for (int j = 0; j <= nm; ++j) row += b.target[i][j];
            if (row <= 0.0) {
                b.target[i][0] = 1.0;
                continue;
            }
            worst = std::max(worst, std::abs(row - 1.0));
            for (int j = 0; j <= nm; ++j) b.target[i][j] /= row;
        }
        if (worst < 1e-12) break;
    }
}

}  // namespace

std::pair<BpState, AssociationBeliefs> run_bp(const EvidenceMatrix& ev, double damping,
                                              double tolerance, int iter_max) {
    if (damping < 0.0 || damping >= 1.0)
        throw std::invalid_argument("run_bp: damping must lie in [0,1)");
    if (!(tolerance > 0.0)) throw std::invalid_argument("run_bp: tolerance must be positive");

    const ScaledEvidence se(ev);
    const int nt = se.nt, nc = se.nc, nm = se.nm;

    // Messages for j >= 1; the j = 0 entries are constants (miss odds for
    // targets, 1 for components). The uniform component (tau = 0)
    // participates bare, without an eta message.
    std::vector<std::vector<double>> beta_t(nt, std::vector<double>(nm + 1, 1.0));
    std::vector<std::vector<double>> beta_c(nc, std::vector<double>(nm + 1, 1.0));
    std::vector<std::vector<double>> eta_t(nt, std::vector<double>(nm + 1, 1.0));
    std::vector<std::vector<double>> eta_c(nc, std::vector<double>(nm + 1, 1.0));
    for (int j = 1; j <= nm; ++j) {
        for (int i = 0; i < nt; ++i)
            if (se.target[i][j] == 0.0) beta_t[i][j] = 0.0;
        for (int t = 0; t < nc; ++t)
            if (se.clutter[t][j] == 0.0) beta_c[t][j] = 0.0;
    }

    std::vector<bool> row_live(nt, false);
    for (int i = 0; i < nt; ++i)
        for (int j = 1; j <= nm; ++j)
            if (se.target[i][j] > 0.0) row_live[i] = true;

    BpState state;
    state.converged = false;
    for (int it = 0; it < iter_max; ++it) {
        double delta = 0.0;
        for (int j = 1; j <= nm; ++j) {
            // A vanishing leave-self-out denominator means the source is the
            // only explanation of measurement j; the message diverges toward
            // certainty, so floor the denominator instead of zeroing it.
            constexpr double kDenomFloor = 1e-12;
            double denom = nc > 0 ? se.clutter[0][j] : 0.0;
            for (int i = 0; i < nt; ++i) denom += se.target[i][j] * eta_t[i][j];
            for (int t = 1; t < nc; ++t) denom += se.clutter[t][j] * eta_c[t][j];
            for (int i = 0; i < nt; ++i) {
                if (se.target[i][j] == 0.0) continue;
                const double self = se.target[i][j] * eta_t[i][j];
                const double d = std::max(denom - self, kDenomFloor);
                const double fresh = se.target[i][j] / d;
                const double next = damping * beta_t[i][j] + (1.0 - damping) * fresh;
                delta = std::max(delta, std::abs(next - beta_t[i][j]));
                beta_t[i][j] = next;
            }
            for (int t = 0; t < nc; ++t) {
                if (se.clutter[t][j] == 0.0) continue;
                const double self = t == 0 ? se.clutter[0][j] : se.clutter[t][j] * eta_c[t][j];
                const double d = std::max(denom - self, kDenomFloor);
                const double fresh = se.clutter[t][j] / d;
                const double next = damping * beta_c[t][j] + (1.0 - damping) * fresh;
                delta = std::max(delta, std::abs(next - beta_c[t][j]));
                beta_c[t][j] = next;
            }
        }
        for (int i = 0; i < nt; ++i) {
            if (!row_live[i]) continue;
            double sum = se.target[i][0];
            for (int j = 1; j <= nm; ++j) sum += beta_t[i][j];
            for (int j = 0; j <= nm; ++j) {
                const double self = j == 0 ? se.target[i][0] : beta_t[i][j];
                const double d = sum - self;
                const double fresh = d > 1e-300 ? 1.0 / d : 1e300;
                const double next = damping * eta_t[i][j] + (1.0 - damping) * fresh;
                delta = std::max(delta, std::abs(next - eta_t[i][j]));
                eta_t[i][j] = next;
            }
        }
        for (int t = 1; t < nc; ++t) {
            double log_full = 0.0;
            for (int j = 1; j <= nm; ++j) log_full += std::log1p(beta_c[t][j]);
            for (int j = 0; j <= nm; ++j) {
                double fresh;
                if (j == 0) {
                    fresh = std::exp(-log_full);
                } else {
                    // eta = P / (beta0 + P) with P = prod_{j' != j} (1 + beta),
                    // beta0 = 1; evaluated in log space.
                    const double log_p = log_full - std::log1p(beta_c[t][j]);
                    fresh = 1.0 / (1.0 + std::exp(-log_p));
                }
                const double next = damping * eta_c[t][j] + (1.0 - damping) * fresh;
                delta = std::max(delta, std::abs(next - eta_c[t][j]));
                eta_c[t][j] = next;
            }
        }
        state.iterations = it + 1;
        state.max_delta = delta;
        if (delta < tolerance) {
            state.converged = true;
            break;
        }
    }
    if (nm == 0) state.converged = true;

    AssociationBeliefs b;
    b.target.assign(nt, std::vector<double>(nm + 1, 0.0));
    b.clutter.assign(nc, std::vector<double>(nm + 1, 0.0));
    for (int i = 0; i < nt; ++i) {
        if (!row_live[i]) {
            b.target[i][0] = 1.0;
            continue;
        }
        b.target[i][0] = odds_to_prob(se.target[i][0] * eta_t[i][0]);
        for (int j = 1; j <= nm; ++j)
            b.target[i][j] = odds_to_prob(beta_t[i][j] * eta_t[i][j]);
    }
    for (int t = 0; t < nc; ++t) {
        b.clutter[t][0] = t == 0 ? 0.0 : odds_to_prob(eta_c[t][0]);
        for (int j = 1; j <= nm; ++j) {
            const double eta = t == 0 ? 1.0 : eta_c[t][j];
            b.clutter[t][j] = odds_to_prob(beta_c[t][j] * eta);
        }
    }
    fit_normalizations(se, b);
    return {state, b};
}

AssociationBeliefs enumerate_exact(const EvidenceMatrix& ev) {
    const int nt = ev.num_targets();
    const int nc = ev.num_clutter();
    const int nm = ev.num_measurements();
    if (nt > 4 || nc - 1 > 2 || nm > 6)
        throw std::invalid_argument("enumerate_exact: instance too large");
    if (nc < 1) throw std::invalid_argument("enumerate_exact: need at least the uniform component");

    const ScaledEvidence se(ev);
    const int sources = nt + nc;  // 0..nt-1 targets, nt..nt+nc-1 components

    AssociationBeliefs b;
    b.target.assign(nt, std::vector<double>(nm + 1, 0.0));
    b.clutter.assign(nc, std::vector<double>(nm + 1, 0.0));
    double z = 0.0;
    std::vector<double> comp_empty_mass(nc, 0.0);

    std::vector<int> assign(nm, 0);
    long long total = 1;
    for (int j = 0; j < nm; ++j) total *= sources;

    for (long long code = 0; code < total; ++code) {
        long long c = code;
        bool feasible = true;
        double w = 1.0;
        std::vector<bool> target_used(nt, false);
        std::vector<bool> comp_used(nc, false);
        for (int j = 0; j < nm && feasible; ++j) {
            const int s = static_cast<int>(c % sources);
            c /= sources;
            assign[j] = s;
            if (s < nt) {
                if (target_used[s]) {
                    feasible = false;
                    break;
                }
                target_used[s] = true;
                w *= se.target[s][j + 1];
            } else {
                comp_used[s - nt] = true;
                w *= se.clutter[s - nt][j + 1];
            }
        }
        if (!feasible || w == 0.0) continue;
        for (int i = 0; i < nt; ++i)
            if (!target_used[i]) w *= se.target[i][0];
        // A silent nonuniform component sums over both disappear states;
        // the uniform background is always present.
        for (int t = 1; t < nc; ++t)
            if (!comp_used[t]) w *= 1.0 + se.clutter[t][0];
        if (w == 0.0) continue;

        z += w;
        for (int j = 0; j < nm; ++j) {
            if (assign[j] < nt)
                b.target[assign[j]][j + 1] += w;
            else
                b.clutter[assign[j] - nt][j + 1] += w;
        }
        for (int i = 0; i < nt; ++i)
            if (!target_used[i]) b.target[i][0] += w;
        for (int t = 1; t < nc; ++t)
            if (!comp_used[t])
                comp_empty_mass[t] += w * se.clutter[t][0] / (1.0 + se.clutter[t][0]);
    }
    if (z <= 0.0) throw std::runtime_error("enumerate_exact: no feasible association event");

    for (int i = 0; i < nt; ++i)
        for (int j = 0; j <= nm; ++j) b.target[i][j] /= z;
    for (int t = 0; t < nc; ++t) {
        b.clutter[t][0] = comp_empty_mass[t] / z;
        for (int j = 1; j <= nm; ++j) b.clutter[t][j] /= z;
    }
    return b;
}

void dump_association_csv(const EvidenceMatrix& ev, const AssociationBeliefs& beliefs,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_association_csv: cannot open " + path);
    out << "kind,row,column,log_evidence,belief\n";
    for (int i = 0; i < ev.num_targets(); ++i)
        for (int j = 0; j <= ev.num_measurements(); ++j)
            out << "target," << i << ',' << j << ',' << ev.log_target[i][j] << ','
                << beliefs.target[i][j] << '\n';
    for (int t = 0; t < ev.num_clutter(); ++t)
        for (int j = 0; j <= ev.num_measurements(); ++j)
            out << "clutter," << t << ',' << j << ',' << ev.log_clutter[t][j] << ','
                << beliefs.clutter[t][j] << '\n';
}

}  // namespace mptrack
