#include "mptrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mptrack {

namespace {

constexpr double kCompDeathCount = 1.0;

Eigen::Matrix2d cartesian_noise(const Eigen::Vector2d& y_kmdeg, const SensorModel& sensor) {
    Eigen::Matrix2d j = polar_to_cartesian_jacobian(y_kmdeg);
    return j * sensor.noise_cov() * j.transpose();
}

// The forgetting transition can push the shape toward 1 during miss
// streaks; the second-order strength expectation needs shape > 2 and
// diverges just above it. Mean-preserving floor for evidence inputs.
InverseGammaBelief evidence_snr(const InverseGammaBelief& b) {
    constexpr double kFloor = 2.5;
    if (b.shape >= kFloor) return b;
    InverseGammaBelief out;
    out.shape = kFloor;
    out.scale = b.shape > 1.05 ? b.scale * (kFloor - 1.0) / (b.shape - 1.0)
                               : b.scale * (kFloor - 1.0);
    return out;
}

}  // namespace

void WindowConfig::validate() const {
    if (length < 1 || step < 1 || step > length)
        throw std::invalid_argument("WindowConfig: need 1 <= step <= length");
    if (!(mp_tolerance > 0.0) || !(bp_tolerance > 0.0))
        throw std::invalid_argument("WindowConfig: tolerances must be positive");
    if (mp_max_iterations < 1 || bp_max_iterations < 1)
        throw std::invalid_argument("WindowConfig: iteration caps must be positive");
}

ClusterInit cluster_measurements(const std::vector<Eigen::Vector2d>& points, double volume,
                                 int max_components, std::uint64_t seed,
                                 double min_support) {
    ClusterInit out;
    const int n = static_cast<int>(points.size());
    out.point_cluster.assign(n, -1);
    if (n < 4 || max_components < 1) return out;

    RandomStream rng(seed);
    const double uniform_density = 1.0 / volume;
    const Eigen::Matrix2d cov_floor =
        Eigen::Vector2d(0.0004, 0.36).asDiagonal();  // measurement-noise scale

    // k-means++ seeding in coordinates standardized per axis.
    Eigen::Vector2d lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Eigen::Vector2d span = (hi - lo).cwiseMax(Eigen::Vector2d(1e-3, 1e-3));
    auto norm_dist2 = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        Eigen::Vector2d d = (a - b).cwiseQuotient(span);
        return d.squaredNorm();
    };

    const int k_init = std::min(max_components, std::max(1, n / 15));
    std::vector<Eigen::Vector2d> centers;
    centers.push_back(points[static_cast<int>(rng.uniform(0.0, 1.0) * n) % n]);
    while (static_cast<int>(centers.size()) < k_init) {
        std::vector<double> d2(n);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = norm_dist2(points[i], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c)
                best = std::min(best, norm_dist2(points[i], centers[c]));
            d2[i] = best;
            total += best;
        }
        double pick = rng.uniform(0.0, total);
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            pick -= d2[i];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(points[chosen]);
    }

    struct Comp {
        double weight;
        Eigen::Vector2d mean;
        Eigen::Matrix2d cov;
    };
    std::vector<Comp> comps;
    for (const auto& c : centers) {
        Comp g;
        g.weight = 0.5 / centers.size();
        g.mean = c;
        g.cov = Eigen::Vector2d(1.0, 9.0).asDiagonal();
        comps.push_back(g);
    }
    double w_uniform = 0.5;

    Eigen::MatrixXd resp;  // n x components
    auto e_step = [&]() {
        resp.resize(n, comps.size());
        for (int i = 0; i < n; ++i) {
            double total = w_uniform * uniform_density;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                const Eigen::Matrix2d& s = comps[c].cov;
                Eigen::Vector2d d = points[i] - comps[c].mean;
                const double det = s.determinant();
                const double q = d.dot(s.inverse() * d);
                const double dens =
                    std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
                resp(i, c) = comps[c].weight * dens;
                total += resp(i, c);
            }
            for (std::size_t c = 0; c < comps.size(); ++c) resp(i, c) /= total;
        }
    };

    const double prune_weight = 1.0 / (2.0 * n);
    for (int round = 0; round < 8; ++round) {
        for (int iter = 0; iter < 15; ++iter) {
            if (comps.empty()) break;
            e_step();
            double resp_total = 0.0;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                const double nk = resp.col(c).sum();
                resp_total += nk;
                if (nk < 1e-9) {
                    comps[c].weight = 0.0;
                    continue;
                }
                Eigen::Vector2d mean = Eigen::Vector2d::Zero();
                for (int i = 0; i < n; ++i) mean += resp(i, c) * points[i];
                mean /= nk;
                Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
                for (int i = 0; i < n; ++i) {
                    Eigen::Vector2d d = points[i] - mean;
                    cov += resp(i, c) * d * d.transpose();
                }
                cov = cov / nk + cov_floor;
                comps[c].weight = nk / n;
                comps[c].mean = mean;
                comps[c].cov = cov;
            }
            w_uniform = std::max(1.0 - resp_total / n, 1e-6);
        }
        const std::size_t before = comps.size();
        std::vector<Comp> kept;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            const double support = comps[c].weight * n;
            if (comps[c].weight < prune_weight || support < 2.0) continue;
            kept.push_back(comps[c]);
        }
        comps.swap(kept);
        if (comps.empty() || comps.size() == before) break;
    }
    if (comps.empty()) return out;

    // Merge overlapping clusters (a dense region split by the random
    // seeding) by moment matching.
    bool merged = true;
    while (merged && comps.size() > 1) {
        merged = false;
        for (std::size_t a = 0; a < comps.size() && !merged; ++a) {
            for (std::size_t b = a + 1; b < comps.size() && !merged; ++b) {
                Eigen::Matrix2d pooled = 0.5 * (comps[a].cov + comps[b].cov);
                Eigen::Vector2d d = comps[a].mean - comps[b].mean;
                if (d.dot(pooled.inverse() * d) >= 4.0) continue;
                const double w = comps[a].weight + comps[b].weight;
                Eigen::Vector2d mean =
                    (comps[a].weight * comps[a].mean + comps[b].weight * comps[b].mean) / w;
                Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
                for (std::size_t c : {a, b}) {
                    Eigen::Vector2d off = comps[c].mean - mean;
                    cov += comps[c].weight * (comps[c].cov + off * off.transpose());
                }
                comps[a].weight = w;
                comps[a].mean = mean;
                comps[a].cov = cov / w;
                comps.erase(comps.begin() + b);
                merged = true;
            }
        }
    }
    e_step();

    // Keep only clusters with enough support whose peak density clearly
    // beats the fitted background level.
    std::vector<int> kept_index(comps.size(), -1);
    for (std::size_t c = 0; c < comps.size(); ++c) {
        const double support = comps[c].weight * n;
        if (support < min_support) continue;
        const double peak =
            comps[c].weight / (2.0 * std::numbers::pi * std::sqrt(comps[c].cov.determinant()));
        const double floor = 10.0 * std::max(w_uniform, 0.05) * uniform_density;
        if (peak <= floor) continue;
        ClusterInit::Cluster cl;
        cl.mean = comps[c].mean;
        cl.cov = comps[c].cov;
        cl.support = support;
        kept_index[c] = static_cast<int>(out.clusters.size());
        out.clusters.push_back(cl);
    }
    for (int i = 0; i < n; ++i) {
        int best = -1;
        double best_r = 0.5;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (kept_index[c] < 0) continue;
            if (resp(i, c) > best_r) {
                best_r = resp(i, c);
                best = kept_index[c];
            }
        }
        out.point_cluster[i] = best;
    }
    return out;
}

std::vector<TrackCandidate> two_point_init(const std::vector<MeasurementFrame>& frames,
                                           const std::vector<std::vector<bool>>& candidate,
                                           const SensorModel& sensor,
                                           const TwoPointConfig& cfg) {
    if (frames.size() != candidate.size())
        throw std::invalid_argument("two_point_init: mask size mismatch");
    const int len = static_cast<int>(frames.size());

    std::vector<TrackCandidate> accepted;
    std::vector<std::vector<bool>> used = candidate;  // endpoints consumed by accepted pairs

    for (int k2 = 1; k2 < len; ++k2) {
        for (int delta = 1; delta <= cfg.l_max && k2 - delta >= 0; ++delta) {
            const int k1 = k2 - delta;
            const double dt = delta * cfg.period;
            for (int j2 = 0; j2 < frames[k2].size(); ++j2) {
                if (!used[k2][j2]) continue;
                const Eigen::Vector2d y2 = frames[k2].position(j2);
                const Eigen::Vector2d p2 = polar_to_cartesian_m(y2);
                for (int j1 = 0; j1 < frames[k1].size(); ++j1) {
                    if (!used[k1][j1]) continue;
                    const Eigen::Vector2d y1 = frames[k1].position(j1);
                    const Eigen::Vector2d p1 = polar_to_cartesian_m(y1);
                    const Eigen::Vector2d vel = (p2 - p1) / dt;
                    if (std::abs(vel(0)) > cfg.v_max || std::abs(vel(1)) > cfg.v_max) continue;

                    // Linear-Gaussian fusion of both detections with a
                    // zero-mean speed prior at the v_max scale. Without the
                    // prior, the cross-range noise over one scan implies
                    // velocity spreads far beyond any admissible speed.
                    const Eigen::Matrix2d r1 = cartesian_noise(y1, sensor);
                    const Eigen::Matrix2d r2 = cartesian_noise(y2, sensor);
                    const double vel_prior_var = cfg.v_max * cfg.v_max / 3.0;
                    Eigen::Matrix4d info = Eigen::Matrix4d::Zero();  // (px, py, vx, vy)
                    Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
                    const Eigen::Matrix2d w1 = r1.inverse();
                    const Eigen::Matrix2d w2 = r2.inverse();
                    info.block<2, 2>(0, 0) = w1 + w2;
                    info.block<2, 2>(0, 2) = -dt * w1;
                    info.block<2, 2>(2, 0) = -dt * w1;
                    info.block<2, 2>(2, 2) =
                        dt * dt * w1 + Eigen::Matrix2d::Identity() / vel_prior_var;
                    rhs.head<2>() = w2 * p2 + w1 * p1;
                    rhs.tail<2>() = -dt * w1 * p1;
                    const Eigen::Matrix4d cov_pv = info.inverse();
                    const Eigen::Vector4d mean_pv = cov_pv * rhs;

                    TrackCandidate tc;
                    tc.birth_scan = frames[k2].scan;
                    tc.state << mean_pv(0), mean_pv(2), mean_pv(1), mean_pv(3);
                    Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
                    const int order[4] = {0, 2, 1, 3};  // (px, vx, py, vy) from (px, py, vx, vy)
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            p(order[a], order[b]) = cov_pv(a, b);
                    tc.covariance = 0.5 * (p + p.transpose());
                    const double m1 = frames[k1].measurements[j1].strength;
                    const double m2 = frames[k2].measurements[j2].strength;
                    tc.strength_scale = m1 * m1 + m2 * m2;

                    bool duplicate = false;
                    for (const TrackCandidate& other : accepted) {
                        const double gap = (tc.birth_scan - other.birth_scan) * cfg.period;
                        Eigen::Vector4d pred = other.state;
                        pred(0) += pred(1) * gap;
                        pred(2) += pred(3) * gap;
                        if (std::abs(pred(0) - tc.state(0)) < 250.0 &&
                            std::abs(pred(2) - tc.state(2)) < 250.0 &&
                            std::abs(pred(1) - tc.state(1)) < 60.0 &&
                            std::abs(pred(3) - tc.state(3)) < 60.0) {
                            duplicate = true;
                            break;
                        }
                    }
                    if (duplicate) continue;
                    accepted.push_back(tc);
                    used[k1][j1] = false;
                    used[k2][j2] = false;
                    if (static_cast<int>(accepted.size()) >= cfg.max_candidates)
                        return accepted;
                    break;  // measurement j2 is consumed
                }
            }
        }
    }
    return accepted;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.window.validate();
    cfg_.forgetting.validate();
    cfg_.lifecycle.chain.validate();
    weights_.concentration = {1.0};
}

void Tracker::set_known_clutter(std::vector<ScanTruth> truth) {
    known_clutter_ = std::move(truth);
}

TrackerOutput Tracker::run(const std::vector<MeasurementFrame>& frames) {
    TrackerOutput out;
    if (frames.empty()) return out;
    for (std::size_t i = 1; i < frames.size(); ++i)
        if (frames[i].scan != frames[i - 1].scan + 1)
            throw std::invalid_argument("Tracker: frames must cover consecutive scans");
    if (cfg_.known_clutter && known_clutter_.empty())
        throw std::invalid_argument("Tracker: known-clutter mode requires truth");

    tracks_.clear();
    comps_.clear();
    claimed_.clear();
    weights_.concentration = {1.0};
    uniform_cnr_ = InverseGammaBelief(3.0, 4.0);
    m_prev_ = 0.0;
    state_started_ = false;
    next_track_id_ = 1;
    next_comp_id_ = 1;

    const int n = static_cast<int>(frames.size());
    int a = 0;
    while (true) {
        const int wlen = std::min(cfg_.window.length, n - a);
        const bool last = a + wlen >= n;
        const int finalize = last ? wlen : std::min(cfg_.window.step, wlen);
        process_window(frames, a, wlen, finalize, out);
        out.diagnostics.windows += 1;
        if (last) break;
        a += cfg_.window.step;
    }
    return out;
}

void Tracker::process_window(const std::vector<MeasurementFrame>& frames, int begin, int len,
                             int finalize, TrackerOutput& out) {
    const int ws = frames[begin].scan;
    auto frame_at = [&](int k) -> const MeasurementFrame& { return frames[begin + k]; };
    const bool kce = cfg_.known_clutter;
    const bool estimate_comps = cfg_.estimate_clutter && !kce;
    const double u_t = cfg_.forgetting.snr;
    const double u_c = cfg_.forgetting.cnr;
    const double xi = cfg_.forgetting.spatial;
    const double kappa = cfg_.forgetting.weight;
    const Eigen::Matrix2d r_cov = cfg_.sensor.noise_cov();

    // --- claimed-measurement masks from the previous window ---------------
    std::vector<std::vector<bool>> unclaimed(len);
    for (int k = 0; k < len; ++k) {
        unclaimed[k].assign(frame_at(k).size(), true);
        auto it = claimed_.find(ws + k);
        if (it == claimed_.end()) continue;
        for (int j = 0; j < frame_at(k).size() && j < static_cast<int>(it->second.size()); ++j)
            if (it->second[j]) unclaimed[k][j] = false;
    }

    // --- clutter component initialization ---------------------------------
    if (estimate_comps &&
        static_cast<int>(comps_.size()) < cfg_.lifecycle.max_components) {
        std::vector<Eigen::Vector2d> pts;
        std::vector<std::pair<int, int>> pts_src;
        std::vector<double> pts_strength;
        for (int k = 0; k < len; ++k)
            for (int j = 0; j < frame_at(k).size(); ++j)
                if (unclaimed[k][j]) {
                    pts.push_back(frame_at(k).position(j));
                    pts_src.push_back({k, j});
                    pts_strength.push_back(frame_at(k).measurements[j].strength);
                }
        const int budget = cfg_.lifecycle.max_components - static_cast<int>(comps_.size());
        // Require roughly two points per scan so single-target trails never
        // seed a component.
        ClusterInit ci = cluster_measurements(pts, cfg_.sensor.volume(), budget,
                                              0x5eedu + static_cast<std::uint64_t>(ws),
                                              1.5 * len);
        std::vector<double> cluster_m2(ci.clusters.size(), 0.0);
        std::vector<double> cluster_n(ci.clusters.size(), 0.0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const int c = ci.point_cluster[i];
            if (c >= 0) {
                cluster_m2[c] += pts_strength[i] * pts_strength[i];
                cluster_n[c] += 1.0;
                unclaimed[pts_src[i].first][pts_src[i].second] = false;
            }
        }
        for (std::size_t c = 0; c < ci.clusters.size(); ++c) {
            const ClusterInit::Cluster& cl = ci.clusters[c];
            PersistentComponent pc;
            pc.id = next_comp_id_++;
            pc.anchor_scan = ws - 1;
            const double dof = std::max(cl.support, 2.5);
            pc.spatial.location = cl.mean;
            pc.spatial.scale_factor = cl.support;
            pc.spatial.dof = dof;
            pc.spatial.wishart_w = (dof * cl.cov).inverse();
            const double mean_m2 = cluster_n[c] > 0.0 ? cluster_m2[c] / cluster_n[c] : 2.0;
            pc.cnr = InverseGammaBelief(3.0, 2.0 * mean_m2);
            comps_.push_back(pc);
            weights_.concentration.push_back(cl.support / len);
        }
        if (!state_started_) {
            double residual = 0.0, residual_m2 = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (ci.point_cluster[i] < 0) {
                    residual += 1.0;
                    residual_m2 += pts_strength[i] * pts_strength[i];
                }
            weights_.concentration[0] = std::max(residual / len, 0.5);
            if (residual > 0.0)
                uniform_cnr_ = InverseGammaBelief(3.0, 2.0 * residual_m2 / residual);
            m_prev_ = pts.size() / static_cast<double>(len);
        }
    }
    if (!state_started_ && !estimate_comps) {
        double count = 0.0, m2 = 0.0;
        for (int k = 0; k < len; ++k)
            for (const Measurement& m : frame_at(k).measurements) {
                count += 1.0;
                m2 += m.strength * m.strength;
            }
        weights_.concentration[0] = std::max(count / len, 0.5);
        if (count > 0.0) uniform_cnr_ = InverseGammaBelief(3.0, 2.0 * m2 / count);
        m_prev_ = count / len;
    }
    state_started_ = true;

    // --- two-point track initialization ------------------------------------
    {
        // Measurements inside a surviving track's predicted gate are not
        // available for re-initialization (the claim masks only cover the
        // scans the previous window saw).
        for (const PersistentTrack& pt : tracks_) {
            if (pt.status == TrackStatus::deleted) continue;
            GaussianBelief b = pt.kinematic;
            for (int g = 0; g < ws - pt.anchor_scan; ++g) b = cv_predict(b, cfg_.motion);
            for (int k = 0; k < len; ++k) {
                if (ws + k >= pt.birth_scan) {
                    Eigen::Vector2d pos(b.mean(0), b.mean(2));
                    Eigen::Matrix2d p_pos;
                    p_pos << b.covariance(0, 0), b.covariance(0, 2), b.covariance(2, 0),
                        b.covariance(2, 2);
                    for (int j = 0; j < frame_at(k).size(); ++j) {
                        if (!unclaimed[k][j]) continue;
                        const Eigen::Vector2d y = frame_at(k).position(j);
                        Eigen::Matrix2d s = p_pos + cartesian_noise(y, cfg_.sensor);
                        Eigen::Vector2d d = polar_to_cartesian_m(y) - pos;
                        if (d.dot(s.inverse() * d) <= 9.0) unclaimed[k][j] = false;
                    }
                }
                b = cv_predict(b, cfg_.motion);
            }
        }
        std::vector<MeasurementFrame> window_frames(frames.begin() + begin,
                                                    frames.begin() + begin + len);
        TwoPointConfig tp;
        tp.v_max = cfg_.lifecycle.v_max;
        tp.l_max = cfg_.lifecycle.l_max;
        tp.period = cfg_.motion.period;
        tp.max_candidates = cfg_.max_new_tracks_per_window;
        std::vector<TrackCandidate> cands =
            two_point_init(window_frames, unclaimed, cfg_.sensor, tp);
        for (const TrackCandidate& tc : cands) {
            bool duplicate = false;
            for (const PersistentTrack& pt : tracks_) {
                if (pt.status == TrackStatus::deleted) continue;
                const double gap = (tc.birth_scan - pt.anchor_scan) * cfg_.motion.period;
                Eigen::Vector4d pred = pt.kinematic.mean;
                pred(0) += pred(1) * gap;
                pred(2) += pred(3) * gap;
                if (std::abs(pred(0) - tc.state(0)) < 250.0 &&
                    std::abs(pred(2) - tc.state(2)) < 250.0 &&
                    std::abs(pred(1) - tc.state(1)) < 60.0 &&
                    std::abs(pred(3) - tc.state(3)) < 60.0) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            PersistentTrack pt;
            pt.id = next_track_id_++;
            pt.birth_scan = tc.birth_scan;
            pt.status = TrackStatus::tentative;
            pt.anchor_scan = tc.birth_scan;
            pt.kinematic = GaussianBelief(tc.state, tc.covariance);
            pt.snr = InverseGammaBelief(3.0, tc.strength_scale);
            pt.visibility = cfg_.lifecycle.initial_visibility;
            tracks_.push_back(pt);
        }
    }

    // --- window working sets ------------------------------------------------
    // Smoothed sequences feed the next closed-loop iteration and the
    // outputs; filtered sequences are what carries across windows, so no
    // measurement is counted twice by the sliding recursion.
    struct WTrack {
        int idx;    // index into tracks_
        int first;  // first active local scan
        bool newborn = false;  // two-point pair already consumed the birth scan
        std::vector<GaussianBelief> kin;
        std::vector<InverseGammaBelief> snr;
        std::vector<double> vis;
        std::vector<GaussianBelief> kin_filt;
        std::vector<InverseGammaBelief> snr_filt;
        std::vector<double> vis_filt;
        GaussianBelief prior_kin;
        InverseGammaBelief prior_snr;
        double prior_vis;
    };
    struct WComp {
        int idx;  // index into comps_
        std::vector<GaussianWishartBelief> gw;
        std::vector<InverseGammaBelief> cnr;
        std::vector<GaussianWishartBelief> gw_filt;
        std::vector<InverseGammaBelief> cnr_filt;
        GaussianWishartBelief prior_gw;
        InverseGammaBelief prior_cnr;
    };

    std::vector<WTrack> wtracks;
    for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
        PersistentTrack& pt = tracks_[ti];
        if (pt.status == TrackStatus::deleted) continue;
        WTrack wt;
        wt.idx = static_cast<int>(ti);
        wt.first = std::max(0, pt.birth_scan - ws);
        wt.newborn = pt.birth_scan == pt.anchor_scan && pt.birth_scan >= ws;
        if (wt.first >= len) continue;
        wt.kin.resize(len);
        wt.snr.resize(len);
        wt.vis.assign(len, 0.0);
        GaussianBelief kb = pt.kinematic;
        InverseGammaBelief sb = pt.snr;
        double vb = pt.visibility;
        for (int g = 0; g < ws + wt.first - pt.anchor_scan; ++g) {
            kb = cv_predict(kb, cfg_.motion);
            sb = ig_predict(sb, u_t);
            vb = visibility_predict(vb, cfg_.lifecycle.chain);
        }
        wt.prior_kin = kb;
        wt.prior_snr = sb;
        wt.prior_vis = vb;
        wt.kin[wt.first] = kb;
        wt.snr[wt.first] = sb;
        wt.vis[wt.first] = vb;
        for (int k = wt.first + 1; k < len; ++k) {
            wt.kin[k] = cv_predict(wt.kin[k - 1], cfg_.motion);
            wt.snr[k] = ig_predict(wt.snr[k - 1], u_t);
            wt.vis[k] = visibility_predict(wt.vis[k - 1], cfg_.lifecycle.chain);
        }
        wt.kin_filt = wt.kin;
        wt.snr_filt = wt.snr;
        wt.vis_filt = wt.vis;
        wtracks.push_back(std::move(wt));
    }

    std::vector<WComp> wcomps;
    if (!kce) {
        for (std::size_t ci = 0; ci < comps_.size(); ++ci) {
            WComp wc;
            wc.idx = static_cast<int>(ci);
            wc.gw.resize(len);
            wc.cnr.resize(len);
            GaussianWishartBelief gb = comps_[ci].spatial;
            InverseGammaBelief cb = comps_[ci].cnr;
            for (int g = 0; g < ws - comps_[ci].anchor_scan; ++g) {
                gb = gw_predict(gb, xi);
                cb = ig_predict(cb, u_c);
            }
            wc.prior_gw = gb;
            wc.prior_cnr = cb;
            wc.gw[0] = gb;
            wc.cnr[0] = cb;
            for (int k = 1; k < len; ++k) {
                wc.gw[k] = gw_predict(wc.gw[k - 1], xi);
                wc.cnr[k] = ig_predict(wc.cnr[k - 1], u_c);
            }
            wc.gw_filt = wc.gw;
            wc.cnr_filt = wc.cnr;
            wcomps.push_back(std::move(wc));
        }
    }

    std::vector<InverseGammaBelief> unif_cnr(len);
    InverseGammaBelief prior_unif = uniform_cnr_;
    unif_cnr[0] = ig_predict(prior_unif, u_c);
    for (int k = 1; k < len; ++k) unif_cnr[k] = ig_predict(unif_cnr[k - 1], u_c);

    std::vector<DirichletBelief> w_seq(len);
    w_seq[0] = dirichlet_predict(weights_, kappa, m_prev_);
    for (int k = 1; k < len; ++k) w_seq[k] = dirichlet_predict(w_seq[k - 1], kappa, m_prev_);

    // Known-clutter mode: evidence inputs pinned to the provided truth.
    std::vector<std::vector<ClutterEvidenceInput>> kce_inputs;
    std::vector<DirichletBelief> kce_weights;
    if (kce) {
        kce_inputs.resize(len);
        kce_weights.resize(len);
        for (int k = 0; k < len; ++k) {
            const int scan = ws + k;
            if (scan - 1 < 0 || scan - 1 >= static_cast<int>(known_clutter_.size()))
                throw std::invalid_argument("Tracker: known-clutter truth missing scan");
            const ScanTruth& st = known_clutter_[scan - 1];
            std::vector<double> alphas;
            for (const ClutterTruth& ct : st.clutter) {
                ClutterEvidenceInput in;
                in.uniform = ct.uniform;
                in.cnr = InverseGammaBelief(1e4, (1e4 - 1.0) * ct.cnr);
                if (!ct.uniform) {
                    in.spatial.location = ct.mean_kmdeg;
                    in.spatial.scale_factor = 1e4;
                    in.spatial.dof = 1e4;
                    in.spatial.wishart_w = (in.spatial.dof * ct.cov_kmdeg).inverse();
                }
                kce_inputs[k].push_back(in);
                alphas.push_back(std::max(ct.rate, 1e-3) * 100.0);
            }
            if (kce_inputs[k].empty()) {
                ClutterEvidenceInput in;
                in.uniform = true;
                in.cnr = InverseGammaBelief(1e4, 1e4 - 1.0);
                kce_inputs[k].push_back(in);
                alphas.push_back(1.0);
            }
            kce_weights[k] = DirichletBelief(alphas);
        }
    }

    // --- closed-loop message-passing iterations ----------------------------
    std::vector<AssociationBeliefs> assoc(len);
    std::vector<std::vector<double>> comp_count(1 + wcomps.size(),
                                                std::vector<double>(len, 0.0));
    std::vector<double> m_scan(len, m_prev_);
    std::vector<std::vector<Eigen::Vector2d>> prev_positions;
    std::vector<DirichletBelief> w_filt = w_seq;
    std::vector<InverseGammaBelief> unif_filt = unif_cnr;

    EvidenceOptions ev_opt;
    ev_opt.epsilon = cfg_.lifecycle.epsilon;
    ev_opt.use_strength = cfg_.use_strength;

    for (int mp = 0; mp < cfg_.window.mp_max_iterations; ++mp) {
        out.diagnostics.mp_iterations += 1;

        for (int k = 0; k < len; ++k) {
            std::vector<TargetEvidenceInput> tin(wtracks.size());
            for (std::size_t t = 0; t < wtracks.size(); ++t) {
                tin[t].active = k >= wtracks[t].first;
                if (tin[t].active) {
                    tin[t].kinematic = wtracks[t].kin[k];
                    tin[t].snr = evidence_snr(wtracks[t].snr[k]);
                    tin[t].visibility = wtracks[t].vis[k];
                }
            }
            std::vector<ClutterEvidenceInput> cin;
            const DirichletBelief* wk;
            if (kce) {
                cin = kce_inputs[k];
                wk = &kce_weights[k];
            } else {
                ClutterEvidenceInput uni;
                uni.uniform = true;
                uni.cnr = evidence_snr(unif_cnr[k]);
                cin.push_back(uni);
                for (const WComp& wc : wcomps) {
                    ClutterEvidenceInput in;
                    in.uniform = false;
                    in.spatial = wc.gw[k];
                    in.cnr = evidence_snr(wc.cnr[k]);
                    cin.push_back(in);
                }
                wk = &w_seq[k];
            }
            EvidenceMatrix ev =
                build_evidence(frame_at(k), tin, cin, *wk, cfg_.sensor, ev_opt);
            auto [bp, beliefs] =
                run_bp(ev, cfg_.window.damping, cfg_.window.bp_tolerance,
                       cfg_.window.bp_max_iterations);
            out.diagnostics.bp_runs += 1;
            if (bp.converged) out.diagnostics.bp_converged += 1;
            assoc[k] = std::move(beliefs);
#ifdef MPTRACK_ITER_DEBUG
            for (std::size_t t = 0; t < wtracks.size(); ++t) {
                if (k < wtracks[t].first) continue;
                std::printf("it%d scan %d trk#%zu logtheta:", mp, ws + k, t);
                for (int j = 0; j <= frame_at(k).size(); ++j)
                    std::printf(" %.1f", ev.log_target[t][j]);
                std::printf(" | a:");
                for (int j = 0; j <= frame_at(k).size(); ++j)
                    std::printf(" %.3f", assoc[k].target[t][j]);
                std::printf("\n");
            }
#endif
        }

        // Clutter mixing weights.
        if (!kce) {
            std::vector<std::vector<double>> counts(len);
            for (int k = 0; k < len; ++k) {
                counts[k].assign(1 + wcomps.size(), 0.0);
                for (std::size_t t = 0; t < 1 + wcomps.size(); ++t)
                    for (int j = 1; j <= frame_at(k).size(); ++j)
                        counts[k][t] += assoc[k].clutter[t][j];
                m_scan[k] = std::accumulate(counts[k].begin(), counts[k].end(), 0.0);
                const DirichletBelief& base = k == 0 ? weights_ : w_filt[k - 1];
                const double m_before = k == 0 ? m_prev_ : m_scan[k - 1];
                w_filt[k] = dirichlet_update(dirichlet_predict(base, kappa, m_before),
                                             counts[k]);
            }
            w_seq[len - 1] = w_filt[len - 1];
            for (int k = len - 2; k >= 0; --k)
                w_seq[k] = dirichlet_smooth_step(w_filt[k], w_seq[k + 1], kappa, m_scan[k + 1]);
            for (int k = 0; k < len; ++k) {
                const double total = w_seq[k].total();
                for (std::size_t t = 0; t < 1 + wcomps.size(); ++t)
                    comp_count[t][k] =
                        total > 0.0 ? m_scan[k] * w_seq[k].concentration[t] / total : 0.0;
            }
        }

        // Target visibility.
        for (std::size_t t = 0; t < wtracks.size(); ++t) {
            WTrack& wt = wtracks[t];
            std::vector<VisibilityEvidence> evs;
            for (int k = wt.first; k < len; ++k) {
                const double miss = assoc[k].target[t][0];
                const double pd =
                    detection_probability(ig_moments(evidence_snr(wt.snr[k])).mean,
                                          cfg_.sensor.swerling);
                VisibilityEvidence e;
                e.visible = (1.0 - pd) * miss + pd * (1.0 - miss);
                e.invisible = (1.0 - cfg_.lifecycle.epsilon) * miss +
                              cfg_.lifecycle.epsilon * (1.0 - miss);
                evs.push_back(e);
            }
            std::vector<double> fwd;
            std::vector<double> sm =
                hmm_forward_backward(evs, cfg_.lifecycle.chain, wt.prior_vis, &fwd);
            for (int k = wt.first; k < len; ++k) {
                wt.vis[k] = sm[k - wt.first];
                wt.vis_filt[k] = fwd[k - wt.first];
            }
        }

        // Clutter augmented state.
        if (!kce) {
            for (std::size_t c = 0; c < wcomps.size(); ++c) {
                WComp& wc = wcomps[c];
                for (int k = 0; k < len; ++k) {
                    std::vector<Eigen::Vector2d> pos(frame_at(k).size());
                    std::vector<double> strengths(frame_at(k).size());
                    for (int j = 0; j < frame_at(k).size(); ++j) {
                        pos[j] = frame_at(k).position(j);
                        strengths[j] = frame_at(k).measurements[j].strength;
                    }
                    const std::vector<double>& row = assoc[k].clutter[1 + c];
                    const GaussianWishartBelief gw_pred =
                        k == 0 ? wc.prior_gw : gw_predict(wc.gw_filt[k - 1], xi);
                    const InverseGammaBelief cnr_pred =
                        k == 0 ? wc.prior_cnr : ig_predict(wc.cnr_filt[k - 1], u_c);
                    wc.gw_filt[k] = gw_update(gw_pred, pos, row);
                    wc.cnr_filt[k] =
                        ig_update(cnr_pred, strengths, row, cfg_.sensor.swerling);
                }
                wc.gw[len - 1] = wc.gw_filt[len - 1];
                wc.cnr[len - 1] = wc.cnr_filt[len - 1];
                for (int k = len - 2; k >= 0; --k) {
                    wc.gw[k] = gw_smooth_step(wc.gw_filt[k], wc.gw[k + 1], xi);
                    wc.cnr[k] = ig_smooth_step(wc.cnr_filt[k], wc.cnr[k + 1], u_c);
                }
            }
            for (int k = 0; k < len; ++k) {
                std::vector<double> strengths(frame_at(k).size());
                for (int j = 0; j < frame_at(k).size(); ++j)
                    strengths[j] = frame_at(k).measurements[j].strength;
                const InverseGammaBelief pred =
                    k == 0 ? ig_predict(prior_unif, u_c) : ig_predict(unif_filt[k - 1], u_c);
                unif_filt[k] = ig_update(pred, strengths, assoc[k].clutter[0],
                                         cfg_.sensor.swerling);
            }
            unif_cnr[len - 1] = unif_filt[len - 1];
            for (int k = len - 2; k >= 0; --k)
                unif_cnr[k] = ig_smooth_step(unif_filt[k], unif_cnr[k + 1], u_c);
        }

        // Target augmented state.
        double delta_sq = 0.0;
        int delta_n = 0;
        for (std::size_t t = 0; t < wtracks.size(); ++t) {
            WTrack& wt = wtracks[t];
            std::vector<GaussianBelief> filt(len - wt.first);
            std::vector<InverseGammaBelief> snr_filt(len - wt.first);
            for (int k = wt.first; k < len; ++k) {
                const int local = k - wt.first;
                const GaussianBelief pred =
                    local == 0 ? wt.prior_kin : cv_predict(filt[local - 1], cfg_.motion);
                const InverseGammaBelief spred =
                    local == 0 ? wt.prior_snr : ig_predict(snr_filt[local - 1], u_t);
                if (local == 0 && wt.newborn) {
                    // The two-point pair already consumed the birth scan.
                    filt[local] = pred;
                    snr_filt[local] = spred;
                    continue;
                }
                auto synth = synthetic_measurement(frame_at(k), assoc[k].target[t], r_cov);
                filt[local] = synth ? ukf_update(pred, synth->value, synth->noise,
                                                 polar_measurement_function())
                                    : pred;
                std::vector<double> strengths(frame_at(k).size());
                for (int j = 0; j < frame_at(k).size(); ++j)
                    strengths[j] = frame_at(k).measurements[j].strength;
                snr_filt[local] =
                    ig_update(spred, strengths, assoc[k].target[t], cfg_.sensor.swerling);
            }
            std::vector<GaussianBelief> sm = urtss_smooth(filt, cfg_.motion);
            InverseGammaBelief snr_sm = snr_filt.back();
            wt.snr[len - 1] = snr_sm;
            for (int k = len - 2; k >= wt.first; --k) {
                snr_sm = ig_smooth_step(snr_filt[k - wt.first], wt.snr[k + 1], u_t);
                wt.snr[k] = snr_sm;
            }
            for (int k = wt.first; k < len; ++k) {
                if (mp > 0 && t < prev_positions.size()) {
                    const Eigen::Vector2d prev = prev_positions[t][k - wt.first];
                    delta_sq += (Eigen::Vector2d(sm[k - wt.first].mean(0),
                                                 sm[k - wt.first].mean(2)) -
                                 prev)
                                    .squaredNorm();
                    delta_n += 1;
                }
                wt.kin[k] = sm[k - wt.first];
                wt.kin_filt[k] = filt[k - wt.first];
                wt.snr_filt[k] = snr_filt[k - wt.first];
            }
        }
        prev_positions.assign(wtracks.size(), {});
        for (std::size_t t = 0; t < wtracks.size(); ++t)
            for (int k = wtracks[t].first; k < len; ++k)
                prev_positions[t].push_back(
                    {wtracks[t].kin[k].mean(0), wtracks[t].kin[k].mean(2)});

        if (mp > 0 && delta_n > 0 &&
            std::sqrt(delta_sq / delta_n) < cfg_.window.mp_tolerance)
            break;
    }

#ifdef MPTRACK_WINDOW_DEBUG
    std::printf("window ws=%d len=%d tracks=%zu comps=%zu\n", ws, len, wtracks.size(),
                wcomps.size());
    for (std::size_t t = 0; t < wtracks.size(); ++t) {
        const PersistentTrack& pt = tracks_[wtracks[t].idx];
        const int lastk = len - 1;
        std::printf(
            "  trk id=%d birth=%d st=%d first=%d pos=(%.0f,%.0f) vel=(%.1f,%.1f) vis=%.3f "
            "snr=%.1f\n",
            pt.id, pt.birth_scan, static_cast<int>(pt.status), wtracks[t].first,
            wtracks[t].kin[lastk].mean(0), wtracks[t].kin[lastk].mean(2),
            wtracks[t].kin[lastk].mean(1), wtracks[t].kin[lastk].mean(3),
            wtracks[t].vis[lastk], ig_moments(wtracks[t].snr[lastk]).mean);
        for (int k = wtracks[t].first; k < len; ++k) {
            double miss = assoc[k].target[t][0];
            int arg = 0;
            double best = miss;
            for (int j = 1; j <= frame_at(k).size(); ++j)
                if (assoc[k].target[t][j] > best) {
                    best = assoc[k].target[t][j];
                    arg = j;
                }
            std::printf("    scan %d pos=(%.0f,%.0f) Pdiag=(%.0f,%.0f,%.0f,%.0f) miss=%.3f argmax=%d(%.3f) vis=%.3f\n",
                        ws + k, wtracks[t].kin[k].mean(0), wtracks[t].kin[k].mean(2),
                        wtracks[t].kin[k].covariance(0, 0), wtracks[t].kin[k].covariance(1, 1),
                        wtracks[t].kin[k].covariance(2, 2), wtracks[t].kin[k].covariance(3, 3),
                        miss, arg, best, wtracks[t].vis[k]);
        }
    }
#endif

    // --- lifecycle -----------------------------------------------------------
    std::vector<bool> comp_dead(wcomps.size(), false);
    for (std::size_t t = 0; t < wtracks.size(); ++t) {
        PersistentTrack& pt = tracks_[wtracks[t].idx];
        double vmax = 0.0;
        for (int k = wtracks[t].first; k < len; ++k) vmax = std::max(vmax, wtracks[t].vis[k]);
        if (pt.status == TrackStatus::tentative && vmax >= cfg_.lifecycle.confirm_threshold)
            pt.status = TrackStatus::confirmed;
        if (wtracks[t].vis[len - 1] < cfg_.lifecycle.delete_threshold)
            pt.status = TrackStatus::deleted;
    }
    if (estimate_comps) {
        for (std::size_t c = 0; c < wcomps.size(); ++c) {
            double cmax = 0.0;
            for (int k = 0; k < len; ++k) cmax = std::max(cmax, comp_count[1 + c][k]);
            if (cmax < kCompDeathCount) comp_dead[c] = true;
        }
    }

    // --- claims for the scans shared with the next window -------------------
    for (int k = finalize; k < len; ++k) {
        std::vector<bool> claimed(frame_at(k).size(), false);
        for (int j = 0; j < frame_at(k).size(); ++j) {
            double best = 0.0;
            for (std::size_t t = 0; t < wtracks.size(); ++t) {
                if (tracks_[wtracks[t].idx].status == TrackStatus::deleted) continue;
                if (k < wtracks[t].first) continue;
                best = std::max(best, assoc[k].target[t][j + 1]);
            }
            for (std::size_t c = 0; c < wcomps.size(); ++c) {
                if (comp_dead[c]) continue;
                best = std::max(best, assoc[k].clutter[1 + c][j + 1]);
            }
            claimed[j] = best >= cfg_.claim_threshold;
        }
        claimed_[ws + k] = std::move(claimed);
    }

    // --- finalized outputs ---------------------------------------------------
    for (int k = 0; k < finalize; ++k) {
        for (std::size_t t = 0; t < wtracks.size(); ++t) {
            const PersistentTrack& pt = tracks_[wtracks[t].idx];
            if (pt.status != TrackStatus::confirmed) continue;
            if (k < wtracks[t].first) continue;
            TrackEstimateRow row;
            row.scan = ws + k;
            row.track_id = pt.id;
            row.state = wtracks[t].kin[k].mean;
            row.snr_mean = ig_moments(wtracks[t].snr[k]).mean;
            row.visibility = wtracks[t].vis[k];
            row.status = pt.status;
            int best_j = 0;
            double best = assoc[k].target[t][0];
            for (int j = 1; j <= frame_at(k).size(); ++j)
                if (assoc[k].target[t][j] > best) {
                    best = assoc[k].target[t][j];
                    best_j = j;
                }
            row.assoc_measurement = best_j - 1;
            out.tracks.push_back(row);
        }
        if (!kce) {
            for (std::size_t c = 0; c < wcomps.size(); ++c) {
                const WComp& wc = wcomps[c];
                ComponentEstimateRow row;
                row.scan = ws + k;
                row.comp_id = comps_[wc.idx].id;
                row.center_kmdeg = wc.gw[k].location;
                row.wishart_w = wc.gw[k].wishart_w;
                row.dof = wc.gw[k].dof;
                row.cnr_mean = ig_moments(wc.cnr[k]).mean;
                const double total = w_seq[k].total();
                row.weight = total > 0.0 ? w_seq[k].concentration[1 + c] / total : 0.0;
                row.count = comp_count[1 + c][k];
                out.components.push_back(row);
            }
        }
    }

    // --- carry state forward -------------------------------------------------
    const bool last = finalize == len;
    if (!last) {
        const int anchor = finalize - 1;
        for (std::size_t t = 0; t < wtracks.size(); ++t) {
            PersistentTrack& pt = tracks_[wtracks[t].idx];
            if (pt.status == TrackStatus::deleted) continue;
            const int at = std::max(anchor, wtracks[t].first);
            pt.anchor_scan = ws + at;
            pt.kinematic = wtracks[t].kin_filt[at];
            pt.snr = wtracks[t].snr_filt[at];
            pt.visibility = wtracks[t].vis_filt[at];
        }
        if (!kce) {
            for (std::size_t c = 0; c < wcomps.size(); ++c) {
                PersistentComponent& pc = comps_[wcomps[c].idx];
                pc.anchor_scan = ws + anchor;
                pc.spatial = wcomps[c].gw_filt[anchor];
                pc.cnr = wcomps[c].cnr_filt[anchor];
            }
            uniform_cnr_ = unif_filt[anchor];
            DirichletBelief carried = w_filt[anchor];
            double carried_m = m_scan[anchor];

            // Drop dead components (weights entry 1+c tracks comps_ order).
            std::vector<PersistentComponent> kept;
            std::vector<double> kept_alpha{carried.concentration[0]};
            for (std::size_t c = 0; c < wcomps.size(); ++c) {
                if (comp_dead[c]) continue;
                kept.push_back(comps_[wcomps[c].idx]);
                kept_alpha.push_back(carried.concentration[1 + c]);
            }
            comps_ = std::move(kept);
            weights_.concentration = std::move(kept_alpha);
            m_prev_ = carried_m;
        }
    }
    std::erase_if(tracks_, [](const PersistentTrack& t) {
        return t.status == TrackStatus::deleted;
    });
}

}  // namespace mptrack
