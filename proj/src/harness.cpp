#include "mptrack/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace mptrack {

namespace {
constexpr double kBig = 1e18;
}

RunOutputs simulate_and_track(const ScenarioSpec& scenario, const TrackerConfig& cfg,
                              std::uint64_t seed) {
    RunOutputs out;
    out.truth = truth_trajectories(scenario);
    RandomStream rng(seed);
    std::vector<MeasurementFrame> frames;
    frames.reserve(out.truth.size());
    for (const ScanTruth& st : out.truth) {
        out.frames.push_back(generate_frame(st, cfg.sensor, rng));
        frames.push_back(out.frames.back().frame);
    }
    Tracker tracker(cfg);
    if (cfg.known_clutter) tracker.set_known_clutter(out.truth);
    out.output = tracker.run(frames);
    return out;
}

void accumulate_run(MetricsReport& report, const std::vector<ScanTruth>& truth,
                    const std::vector<FrameProvenance>& provenance,
                    const TrackerOutput& output, std::uint64_t seed, double gate_m,
                    double component_gate) {
    const int n = static_cast<int>(truth.size());
    if (report.runs == 0 && report.n_scans == 0) report.resize(n);
    if (report.n_scans != n)
        throw std::invalid_argument("accumulate_run: scan count mismatch");
    report.runs += 1;
    report.seeds.push_back(seed);

    // Index estimates by scan.
    std::map<int, std::vector<const TrackEstimateRow*>> tracks_by_scan;
    for (const TrackEstimateRow& r : output.tracks) tracks_by_scan[r.scan].push_back(&r);
    std::map<int, std::vector<const ComponentEstimateRow*>> comps_by_scan;
    for (const ComponentEstimateRow& r : output.components)
        comps_by_scan[r.scan].push_back(&r);

    std::map<int, int> unmatched_streak;  // per track id
    const int n_targets = truth.empty() ? 0 : static_cast<int>(truth[0].targets.size());
    std::vector<int> target_alive(n_targets, 0), target_covered(n_targets, 0);

    // True nonuniform components keyed by id.
    std::map<int, std::pair<int, int>> comp_cover;  // id -> (alive scans, covered scans)

    double run_ospa = 0.0;
    for (int k = 0; k < n; ++k) {
        const ScanTruth& st = truth[k];
        const auto& rows = tracks_by_scan.count(st.scan)
                               ? tracks_by_scan[st.scan]
                               : std::vector<const TrackEstimateRow*>{};

        std::vector<Eigen::Vector2d> truth_pos;
        std::vector<int> truth_index;
        for (std::size_t i = 0; i < st.targets.size(); ++i)
            if (st.targets[i].visible) {
                truth_pos.push_back({st.targets[i].state(0), st.targets[i].state(2)});
                truth_index.push_back(static_cast<int>(i));
            }
        std::vector<Eigen::Vector2d> est_pos;
        for (const TrackEstimateRow* r : rows)
            est_pos.push_back({r->state(0), r->state(2)});

        const double d = ospa(truth_pos, est_pos);
        report.ospa_sum[k] += d;
        run_ospa += d;

        // Gated track-to-truth assignment.
        std::vector<int> truth_match(truth_pos.size(), -1);
        std::vector<bool> track_matched(est_pos.size(), false);
        if (!truth_pos.empty() && !est_pos.empty()) {
            Eigen::MatrixXd cost(truth_pos.size(), est_pos.size());
            for (std::size_t i = 0; i < truth_pos.size(); ++i)
                for (std::size_t j = 0; j < est_pos.size(); ++j) {
                    const double dist = (truth_pos[i] - est_pos[j]).norm();
                    cost(i, j) = dist <= gate_m ? dist : kBig;
                }
            std::vector<int> match = hungarian(cost);
            for (std::size_t i = 0; i < truth_pos.size(); ++i)
                if (match[i] >= 0 && cost(i, match[i]) < kBig) {
                    truth_match[i] = match[i];
                    track_matched[match[i]] = true;
                }
        }

        for (std::size_t i = 0; i < truth_pos.size(); ++i) {
            const TargetTruth& tg = st.targets[truth_index[i]];
            target_alive[truth_index[i]] += 1;
            report.car_total[k] += 1.0;
            const int truth_meas =
                k < static_cast<int>(provenance.size())
                    ? provenance[k].target_measurement[truth_index[i]]
                    : -1;
            if (truth_match[i] >= 0) {
                target_covered[truth_index[i]] += 1;
                const TrackEstimateRow* r = rows[truth_match[i]];
                if (r->assoc_measurement == truth_meas) report.car_correct[k] += 1.0;
                report.rse_sum[k] += std::abs(r->snr_mean - tg.snr) / tg.snr;
                report.rse_count[k] += 1.0;
            }
        }

        // False tracks: confirmed, unmatched for three consecutive scans.
        std::map<int, int> next_streak;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            int streak = track_matched[j] ? 0 : 1;
            if (!track_matched[j]) {
                auto it = unmatched_streak.find(rows[j]->track_id);
                if (it != unmatched_streak.end()) streak = it->second + 1;
            }
            next_streak[rows[j]->track_id] = streak;
            if (streak >= 3) report.nft_sum[k] += 1.0;
        }
        unmatched_streak = std::move(next_streak);

        // Clutter component scores.
        const auto& crows = comps_by_scan.count(st.scan)
                                ? comps_by_scan[st.scan]
                                : std::vector<const ComponentEstimateRow*>{};
        double est_count = 0.0;
        for (const ComponentEstimateRow* r : crows) est_count += r->count;
        report.tnnc_est_sum[k] += est_count;
        for (const ClutterTruth& ct : st.clutter) {
            if (ct.uniform) continue;
            report.tnnc_true_sum[k] += ct.rate;
            auto& cover = comp_cover[ct.id];
            cover.first += 1;
            double best = kBig;
            const ComponentEstimateRow* best_row = nullptr;
            for (const ComponentEstimateRow* r : crows) {
                const double dist = (r->center_kmdeg - ct.mean_kmdeg).norm();
                if (dist < best) {
                    best = dist;
                    best_row = r;
                }
            }
            if (best_row && best <= component_gate) {
                cover.second += 1;
                report.comp_err_sq_sum[k] += best * best;
                report.comp_matched[k] += 1.0;
                const Eigen::Matrix2d est_cov =
                    (best_row->dof * best_row->wishart_w).inverse();
                report.wd_sum[k] +=
                    wasserstein_gaussian_sq(ct.mean_kmdeg, ct.cov_kmdeg,
                                            best_row->center_kmdeg, est_cov);
                report.wd_count[k] += 1.0;
            }
        }
    }

    report.run_mospa.push_back(n > 0 ? run_ospa / n : 0.0);
    int tracked = 0;
    for (int i = 0; i < n_targets; ++i)
        if (target_alive[i] > 0 && target_covered[i] >= (target_alive[i] + 1) / 2) ++tracked;
    report.run_targets_tracked.push_back(tracked);
    report.run_targets_total.push_back(n_targets);
    int found = 0;
    for (const auto& [id, cover] : comp_cover)
        if (cover.first > 0 && cover.second >= (cover.first + 1) / 2) ++found;
    report.run_components_found.push_back(found);
    report.run_components_total.push_back(static_cast<int>(comp_cover.size()));
}

MetricsReport run_monte_carlo(const ScenarioSpec& scenario, const TrackerConfig& cfg,
                              int runs, std::uint64_t base_seed, int threads) {
    if (runs < 1) throw std::invalid_argument("run_monte_carlo: need at least one run");
    threads = std::max(1, std::min(threads, runs));

    std::vector<MetricsReport> partial(runs);
    auto worker = [&](int begin, int stride) {
        for (int r = begin; r < runs; r += stride) {
            const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
            RunOutputs run = simulate_and_track(scenario, cfg, seed);
            std::vector<FrameProvenance> prov;
            prov.reserve(run.frames.size());
            for (const GeneratedFrame& f : run.frames) prov.push_back(f.provenance);
            accumulate_run(partial[r], run.truth, prov, run.output, seed);
        }
    };
    if (threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (std::thread& t : pool) t.join();
    }
    MetricsReport total;
    for (const MetricsReport& p : partial) total = MetricsReport::merge(total, p);
    return total;
}

}  // namespace mptrack
