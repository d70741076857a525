#include "mptrack/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mptrack {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
}

Eigen::Matrix2d parse_matrix2(const json& j) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2)
        throw std::invalid_argument("config: expected a 2x2 matrix");
    Eigen::Matrix2d m;
    m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
        j[1][1].get<double>();
    return m;
}

json matrix2_to_json(const Eigen::Matrix2d& m) {
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

TargetSpec parse_target(const json& j) {
    reject_unknown_keys(j, {"initial_state", "lifetime", "snr"}, "scenario.targets[]");
    TargetSpec t;
    const auto& s = j.at("initial_state");
    if (s.size() != 4) throw std::invalid_argument("config: initial_state needs 4 entries");
    for (int i = 0; i < 4; ++i) t.initial_state(i) = s[i].get<double>();
    t.k_start = j.at("lifetime")[0].get<int>();
    t.k_end = j.at("lifetime")[1].get<int>();
    t.snr = j.at("snr").get<double>();
    return t;
}

ClutterSpec parse_clutter(const json& j) {
    reject_unknown_keys(j, {"type", "count", "mean", "cov", "lifetime", "cnr", "variation"},
                        "scenario.clutter[]");
    ClutterSpec c;
    const std::string type = j.at("type").get<std::string>();
    if (type == "uniform") {
        c.uniform = true;
    } else if (type == "gaussian") {
        c.uniform = false;
        const auto& m = j.at("mean");
        c.mean_kmdeg << m[0].get<double>(), m[1].get<double>();
        c.cov_kmdeg = parse_matrix2(j.at("cov"));
    } else {
        throw std::invalid_argument("config: clutter type must be uniform or gaussian");
    }
    c.rate = j.at("count").get<double>();
    c.k_start = j.at("lifetime")[0].get<int>();
    c.k_end = j.at("lifetime")[1].get<int>();
    c.cnr = j.at("cnr").get<double>();
    if (j.contains("variation")) {
        const std::string v = j.at("variation").get<std::string>();
        if (v == "constant")
            c.variation = ClutterVariation::constant;
        else if (v == "eq82" || v == "sinusoidal")
            c.variation = ClutterVariation::sinusoidal;
        else
            throw std::invalid_argument("config: unknown clutter variation");
    }
    return c;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text);
    reject_unknown_keys(j,
                        {"schema_version", "scenario", "sensor", "window", "forgetting",
                         "lifecycle", "dynamics", "monte_carlo", "output"},
                        "root");
    if (j.at("schema_version").get<int>() != 1)
        throw std::invalid_argument("config: unsupported schema_version");

    RunConfig cfg;

    const json& sc = j.at("scenario");
    reject_unknown_keys(sc, {"id", "snr_override", "targets", "clutter", "n_scans", "period_s"},
                        "scenario");
    if (sc.contains("id")) {
        cfg.scenario_id = sc.at("id").get<int>();
        cfg.scenario = paper_scenario(cfg.scenario_id);
        if (sc.contains("snr_override")) {
            const auto& ov = sc.at("snr_override");
            if (ov.size() > cfg.scenario.targets.size())
                throw std::invalid_argument("config: snr_override longer than target list");
            for (std::size_t i = 0; i < ov.size(); ++i)
                cfg.scenario.targets[i].snr = ov[i].get<double>();
        }
    } else {
        cfg.scenario_id = 0;
        cfg.scenario.targets.clear();
        cfg.scenario.clutter.clear();
        for (const json& t : sc.at("targets")) cfg.scenario.targets.push_back(parse_target(t));
        for (const json& c : sc.at("clutter")) cfg.scenario.clutter.push_back(parse_clutter(c));
        cfg.scenario.n_scans = sc.at("n_scans").get<int>();
        if (sc.contains("period_s")) cfg.scenario.period_s = sc.at("period_s").get<double>();
    }

    if (j.contains("sensor")) {
        const json& s = j.at("sensor");
        reject_unknown_keys(s,
                            {"sigma_range_m", "sigma_az_deg", "detection_threshold",
                             "swerling_order", "region"},
                            "sensor");
        SensorModel& m = cfg.tracker.sensor;
        if (s.contains("sigma_range_m")) m.sigma_range_m = s.at("sigma_range_m").get<double>();
        if (s.contains("sigma_az_deg")) m.sigma_az_deg = s.at("sigma_az_deg").get<double>();
        if (s.contains("detection_threshold"))
            m.swerling.threshold = s.at("detection_threshold").get<double>();
        if (s.contains("swerling_order")) m.swerling.order = s.at("swerling_order").get<int>();
        m.swerling.validate();
        if (s.contains("region")) {
            const json& r = s.at("region");
            reject_unknown_keys(r, {"r_min_km", "r_max_km", "az_min_deg", "az_max_deg"},
                                "sensor.region");
            m.region.r_min_km = r.at("r_min_km").get<double>();
            m.region.r_max_km = r.at("r_max_km").get<double>();
            m.region.az_min_deg = r.at("az_min_deg").get<double>();
            m.region.az_max_deg = r.at("az_max_deg").get<double>();
        }
    }

    if (j.contains("window")) {
        const json& w = j.at("window");
        reject_unknown_keys(w,
                            {"length", "step", "mp_tolerance", "mp_max_iterations",
                             "bp_tolerance", "bp_max_iterations", "damping"},
                            "window");
        WindowConfig& c = cfg.tracker.window;
        if (w.contains("length")) c.length = w.at("length").get<int>();
        if (w.contains("step")) c.step = w.at("step").get<int>();
        if (w.contains("mp_tolerance")) c.mp_tolerance = w.at("mp_tolerance").get<double>();
        if (w.contains("mp_max_iterations"))
            c.mp_max_iterations = w.at("mp_max_iterations").get<int>();
        if (w.contains("bp_tolerance")) c.bp_tolerance = w.at("bp_tolerance").get<double>();
        if (w.contains("bp_max_iterations"))
            c.bp_max_iterations = w.at("bp_max_iterations").get<int>();
        if (w.contains("damping")) c.damping = w.at("damping").get<double>();
        c.validate();
    }

    if (j.contains("forgetting")) {
        const json& f = j.at("forgetting");
        reject_unknown_keys(f, {"u_t", "u_c", "xi", "kappa"}, "forgetting");
        if (f.contains("u_t")) cfg.tracker.forgetting.snr = f.at("u_t").get<double>();
        if (f.contains("u_c")) cfg.tracker.forgetting.cnr = f.at("u_c").get<double>();
        if (f.contains("xi")) cfg.tracker.forgetting.spatial = f.at("xi").get<double>();
        if (f.contains("kappa")) cfg.tracker.forgetting.weight = f.at("kappa").get<double>();
        cfg.tracker.forgetting.validate();
    }

    if (j.contains("lifecycle")) {
        const json& l = j.at("lifecycle");
        reject_unknown_keys(l,
                            {"confirm", "delete", "f_s", "p_s", "p_b", "epsilon", "v_max_mps",
                             "l_max", "max_components"},
                            "lifecycle");
        LifecycleConfig& c = cfg.tracker.lifecycle;
        if (l.contains("confirm")) c.confirm_threshold = l.at("confirm").get<double>();
        if (l.contains("delete")) c.delete_threshold = l.at("delete").get<double>();
        if (l.contains("f_s")) c.initial_visibility = l.at("f_s").get<double>();
        if (l.contains("p_s")) c.chain.survival = l.at("p_s").get<double>();
        if (l.contains("p_b")) c.chain.birth = l.at("p_b").get<double>();
        if (l.contains("epsilon")) c.epsilon = l.at("epsilon").get<double>();
        if (l.contains("v_max_mps")) c.v_max = l.at("v_max_mps").get<double>();
        if (l.contains("l_max")) c.l_max = l.at("l_max").get<int>();
        if (l.contains("max_components")) c.max_components = l.at("max_components").get<int>();
        c.chain.validate();
    }

    if (j.contains("dynamics")) {
        const json& d = j.at("dynamics");
        reject_unknown_keys(d, {"period_s", "accel_var"}, "dynamics");
        double period = cfg.tracker.motion.period;
        double accel = cfg.tracker.motion.accel_var;
        if (d.contains("period_s")) period = d.at("period_s").get<double>();
        if (d.contains("accel_var")) accel = d.at("accel_var").get<double>();
        cfg.tracker.motion = CvModel(period, accel);
    }

    if (j.contains("monte_carlo")) {
        const json& m = j.at("monte_carlo");
        reject_unknown_keys(m, {"runs", "base_seed", "threads"}, "monte_carlo");
        if (m.contains("runs")) cfg.runs = m.at("runs").get<int>();
        if (m.contains("base_seed")) cfg.base_seed = m.at("base_seed").get<std::uint64_t>();
        if (m.contains("threads")) cfg.threads = m.at("threads").get<int>();
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown_keys(o, {"dir"}, "output");
        if (o.contains("dir")) cfg.output_dir = o.at("dir").get<std::string>();
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// ---- JSON-lines -------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::vector<json> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<json> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        lines.push_back(json::parse(line));
    }
    return lines;
}

}  // namespace

void write_frames_jsonl(const std::vector<MeasurementFrame>& frames,
                        const std::string& path) {
    std::ofstream out = open_out(path);
    for (const MeasurementFrame& f : frames) {
        json meas = json::array();
        for (const Measurement& m : f.measurements)
            meas.push_back(
                {{"r_km", m.range_km}, {"az_deg", m.azimuth_deg}, {"strength", m.strength}});
        json line = {{"scan", f.scan}, {"time_s", f.time_s}, {"measurements", meas}};
        out << line.dump() << '\n';
    }
}

std::vector<MeasurementFrame> read_frames_jsonl(const std::string& path) {
    std::vector<MeasurementFrame> frames;
    for (const json& line : read_lines(path)) {
        MeasurementFrame f;
        f.scan = line.at("scan").get<int>();
        f.time_s = line.value("time_s", 0.0);
        for (const json& m : line.at("measurements")) {
            Measurement meas;
            meas.range_km = m.at("r_km").get<double>();
            meas.azimuth_deg = m.at("az_deg").get<double>();
            meas.strength = m.at("strength").get<double>();
            f.measurements.push_back(meas);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_truth_jsonl(const std::vector<ScanTruth>& truth,
                       const std::vector<FrameProvenance>& provenance,
                       const std::string& path) {
    if (truth.size() != provenance.size())
        throw std::invalid_argument("write_truth_jsonl: provenance size mismatch");
    std::ofstream out = open_out(path);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const ScanTruth& st = truth[k];
        json targets = json::array();
        for (std::size_t i = 0; i < st.targets.size(); ++i) {
            const TargetTruth& t = st.targets[i];
            targets.push_back({{"id", t.id},
                               {"x_m", t.state(0)},
                               {"vx_mps", t.state(1)},
                               {"y_m", t.state(2)},
                               {"vy_mps", t.state(3)},
                               {"snr", t.snr},
                               {"visible", t.visible},
                               {"measurement", provenance[k].target_measurement[i]}});
        }
        json clutter = json::array();
        for (const ClutterTruth& c : st.clutter) {
            json e = {{"comp_id", c.id},
                      {"uniform", c.uniform},
                      {"count", c.rate},
                      {"cnr", c.cnr}};
            if (!c.uniform) {
                e["r_km"] = c.mean_kmdeg(0);
                e["az_deg"] = c.mean_kmdeg(1);
                e["cov"] = matrix2_to_json(c.cov_kmdeg);
            }
            clutter.push_back(e);
        }
        json line = {{"scan", st.scan},
                     {"time_s", st.time_s},
                     {"targets", targets},
                     {"clutter", clutter}};
        out << line.dump() << '\n';
    }
}

TruthFile read_truth_jsonl(const std::string& path) {
    TruthFile out;
    for (const json& line : read_lines(path)) {
        ScanTruth st;
        FrameProvenance prov;
        st.scan = line.at("scan").get<int>();
        st.time_s = line.value("time_s", 0.0);
        for (const json& t : line.at("targets")) {
            TargetTruth tt;
            tt.id = t.at("id").get<int>();
            tt.state << t.at("x_m").get<double>(), t.at("vx_mps").get<double>(),
                t.at("y_m").get<double>(), t.at("vy_mps").get<double>();
            tt.snr = t.at("snr").get<double>();
            tt.visible = t.at("visible").get<bool>();
            st.targets.push_back(tt);
            prov.target_measurement.push_back(t.at("measurement").get<int>());
        }
        for (const json& c : line.at("clutter")) {
            ClutterTruth ct;
            ct.id = c.at("comp_id").get<int>();
            ct.uniform = c.at("uniform").get<bool>();
            ct.rate = c.at("count").get<double>();
            ct.cnr = c.at("cnr").get<double>();
            if (!ct.uniform) {
                ct.mean_kmdeg << c.at("r_km").get<double>(), c.at("az_deg").get<double>();
                ct.cov_kmdeg = parse_matrix2(c.at("cov"));
            }
            st.clutter.push_back(ct);
        }
        out.truth.push_back(std::move(st));
        out.provenance.push_back(std::move(prov));
    }
    return out;
}

namespace {
std::string status_name(TrackStatus s) {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::confirmed: return "confirmed";
        case TrackStatus::deleted: return "deleted";
    }
    return "unknown";
}
TrackStatus status_from(const std::string& s) {
    if (s == "tentative") return TrackStatus::tentative;
    if (s == "confirmed") return TrackStatus::confirmed;
    if (s == "deleted") return TrackStatus::deleted;
    throw std::invalid_argument("unknown track status: " + s);
}
}  // namespace

void write_tracks_jsonl(const std::vector<TrackEstimateRow>& rows, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const TrackEstimateRow& r : rows) {
        json line = {{"scan", r.scan},
                     {"track_id", r.track_id},
                     {"x_m", r.state(0)},
                     {"vx_mps", r.state(1)},
                     {"y_m", r.state(2)},
                     {"vy_mps", r.state(3)},
                     {"snr_mean", r.snr_mean},
                     {"visibility", r.visibility},
                     {"status", status_name(r.status)},
                     {"assoc", r.assoc_measurement}};
        out << line.dump() << '\n';
    }
}

std::vector<TrackEstimateRow> read_tracks_jsonl(const std::string& path) {
    std::vector<TrackEstimateRow> rows;
    for (const json& line : read_lines(path)) {
        TrackEstimateRow r;
        r.scan = line.at("scan").get<int>();
        r.track_id = line.at("track_id").get<int>();
        r.state << line.at("x_m").get<double>(), line.at("vx_mps").get<double>(),
            line.at("y_m").get<double>(), line.at("vy_mps").get<double>();
        r.snr_mean = line.at("snr_mean").get<double>();
        r.visibility = line.at("visibility").get<double>();
        r.status = status_from(line.at("status").get<std::string>());
        r.assoc_measurement = line.value("assoc", -1);
        rows.push_back(r);
    }
    return rows;
}

void write_components_jsonl(const std::vector<ComponentEstimateRow>& rows,
                            const std::string& path) {
    std::ofstream out = open_out(path);
    for (const ComponentEstimateRow& r : rows) {
        json line = {{"scan", r.scan},
                     {"comp_id", r.comp_id},
                     {"r_km", r.center_kmdeg(0)},
                     {"az_deg", r.center_kmdeg(1)},
                     {"W", matrix2_to_json(r.wishart_w)},
                     {"dof", r.dof},
                     {"cnr_mean", r.cnr_mean},
                     {"weight", r.weight},
                     {"count", r.count}};
        out << line.dump() << '\n';
    }
}

std::vector<ComponentEstimateRow> read_components_jsonl(const std::string& path) {
    std::vector<ComponentEstimateRow> rows;
    for (const json& line : read_lines(path)) {
        ComponentEstimateRow r;
        r.scan = line.at("scan").get<int>();
        r.comp_id = line.at("comp_id").get<int>();
        r.center_kmdeg << line.at("r_km").get<double>(), line.at("az_deg").get<double>();
        r.wishart_w = parse_matrix2(line.at("W"));
        r.dof = line.at("dof").get<double>();
        r.cnr_mean = line.at("cnr_mean").get<double>();
        r.weight = line.at("weight").get<double>();
        r.count = line.at("count").get<double>();
        rows.push_back(r);
    }
    return rows;
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "scan,ospa,car,nft,rse,tnnc_est,tnnc_true,comp_rmse,wd\n";
    for (int k = 0; k < report.n_scans; ++k) {
        const double runs = std::max(1, report.runs);
        const double car =
            report.car_total[k] > 0.0 ? report.car_correct[k] / report.car_total[k] : 0.0;
        const double rse =
            report.rse_count[k] > 0.0 ? report.rse_sum[k] / report.rse_count[k] : 0.0;
        const double rmse = report.comp_matched[k] > 0.0
                                ? std::sqrt(report.comp_err_sq_sum[k] / report.comp_matched[k])
                                : 0.0;
        const double wd = report.wd_count[k] > 0.0 ? report.wd_sum[k] / report.wd_count[k] : 0.0;
        out << (k + 1) << ',' << report.ospa_sum[k] / runs << ',' << car << ','
            << report.nft_sum[k] / runs << ',' << rse << ',' << report.tnnc_est_sum[k] / runs
            << ',' << report.tnnc_true_sum[k] / runs << ',' << rmse << ',' << wd << '\n';
    }
}

void write_metrics_summary(const MetricsReport& report, const std::string& path) {
    json j = {{"runs", report.runs},
              {"seeds", report.seeds},
              {"mospa_m", report.mospa()},
              {"car", report.car()},
              {"nft_per_scan", report.nft_per_scan()},
              {"rse", report.mean_rse()},
              {"tnnc_mean_est",
               [&] {
                   double s = 0.0;
                   for (double v : report.tnnc_est_sum) s += v;
                   return report.runs && report.n_scans ? s / (report.runs * report.n_scans)
                                                        : 0.0;
               }()},
              {"component_rmse", report.component_rmse()},
              {"wd", report.mean_wd()}};
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace mptrack
