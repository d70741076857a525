#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "mptrack/harness.hpp"
#include "mptrack/io.hpp"

namespace fs = std::filesystem;
using namespace mptrack;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int runs = 0;
    int threads = 0;
    bool first_iteration = false;
    bool no_clutter_estimation = false;
    bool known_clutter = false;
    bool kinematics_only = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_ablations) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", args.out_dir, "output directory (defaults to config output.dir)");
    cmd->add_option("--seed", args.seed, "override the base RNG seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--runs", args.runs, "override the Monte Carlo run count");
    cmd->add_option("--threads", args.threads, "worker thread cap");
    if (with_ablations) {
        cmd->add_flag("--first-iteration", args.first_iteration,
                      "single message-passing iteration per window");
        cmd->add_flag("--no-clutter-estimation", args.no_clutter_estimation,
                      "uniform-background-only clutter model");
        cmd->add_flag("--known-clutter", args.known_clutter,
                      "pin clutter evidence to the simulation truth");
        cmd->add_flag("--kinematics-only", args.kinematics_only,
                      "drop strength terms from the association evidence");
    }
}

RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (args.seed_set) cfg.base_seed = args.seed;
    if (args.runs > 0) cfg.runs = args.runs;
    if (args.threads > 0) cfg.threads = args.threads;
    if (args.first_iteration) cfg.tracker.window.mp_max_iterations = 1;
    if (args.no_clutter_estimation) cfg.tracker.estimate_clutter = false;
    if (args.known_clutter) cfg.tracker.known_clutter = true;
    if (args.kinematics_only) cfg.tracker.use_strength = false;
    fs::create_directories(cfg.output_dir);
    return cfg;
}

int cmd_simulate(const CommonArgs& args) {
    RunConfig cfg = resolve(args);
    std::vector<ScanTruth> truth = truth_trajectories(cfg.scenario);
    RandomStream rng(cfg.base_seed);
    std::vector<MeasurementFrame> frames;
    std::vector<FrameProvenance> prov;
    for (const ScanTruth& st : truth) {
        GeneratedFrame g = generate_frame(st, cfg.tracker.sensor, rng);
        frames.push_back(std::move(g.frame));
        prov.push_back(std::move(g.provenance));
    }
    const fs::path dir(cfg.output_dir);
    write_frames_jsonl(frames, (dir / "frames.jsonl").string());
    write_truth_jsonl(truth, prov, (dir / "truth.jsonl").string());
    std::cout << "seed " << cfg.base_seed << "\nframes " << (dir / "frames.jsonl").string()
              << "\ntruth " << (dir / "truth.jsonl").string() << "\n";
    return 0;
}

int cmd_track(const CommonArgs& args, const std::string& frames_path,
              const std::string& truth_path) {
    RunConfig cfg = resolve(args);
    std::vector<MeasurementFrame> frames = read_frames_jsonl(frames_path);
    Tracker tracker(cfg.tracker);
    if (cfg.tracker.known_clutter) {
        if (truth_path.empty())
            throw std::invalid_argument("--known-clutter requires --truth");
        tracker.set_known_clutter(read_truth_jsonl(truth_path).truth);
    }
    TrackerOutput out = tracker.run(frames);
    const fs::path dir(cfg.output_dir);
    write_tracks_jsonl(out.tracks, (dir / "tracks.jsonl").string());
    write_components_jsonl(out.components, (dir / "clutter.jsonl").string());
    std::cout << "windows " << out.diagnostics.windows << "\nmp_iterations "
              << out.diagnostics.mp_iterations << "\nbp_convergence_rate "
              << (out.diagnostics.bp_runs
                      ? static_cast<double>(out.diagnostics.bp_converged) /
                            out.diagnostics.bp_runs
                      : 1.0)
              << "\ntracks " << (dir / "tracks.jsonl").string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& truth_path,
                 const std::string& tracks_path, const std::string& components_path) {
    RunConfig cfg = resolve(args);
    TruthFile tf = read_truth_jsonl(truth_path);
    TrackerOutput out;
    out.tracks = read_tracks_jsonl(tracks_path);
    if (!components_path.empty()) out.components = read_components_jsonl(components_path);

    const int first = tf.truth.empty() ? 0 : tf.truth.front().scan;
    const int last = tf.truth.empty() ? -1 : tf.truth.back().scan;
    for (const TrackEstimateRow& r : out.tracks)
        if (r.scan < first || r.scan > last)
            throw std::invalid_argument("evaluate: estimate scan outside the truth range");

    MetricsReport report;
    accumulate_run(report, tf.truth, tf.provenance, out, cfg.base_seed);
    const fs::path dir(cfg.output_dir);
    write_metrics_csv(report, (dir / "metrics.csv").string());
    write_metrics_summary(report, (dir / "summary.json").string());
    std::cout << "mospa_m " << report.mospa() << "\ncar " << report.car() << "\nnft_per_scan "
              << report.nft_per_scan() << "\nsummary " << (dir / "summary.json").string()
              << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    RunConfig cfg = resolve(args);
    MetricsReport report = run_monte_carlo(cfg.scenario, cfg.tracker, cfg.runs,
                                           cfg.base_seed, cfg.threads);
    const fs::path dir(cfg.output_dir);
    write_metrics_csv(report, (dir / "metrics.csv").string());
    write_metrics_summary(report, (dir / "summary.json").string());
    std::cout << "runs " << report.runs << "\nmospa_m " << report.mospa() << "\ncar "
              << report.car() << "\nnft_per_scan " << report.nft_per_scan()
              << "\ncomponent_rmse " << report.component_rmse() << "\nsummary "
              << (dir / "summary.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Message-passing multitarget tracker with clutter estimation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string frames_path, truth_path, tracks_path, components_path;

    CLI::App* simulate = app.add_subcommand("simulate", "generate measurement/truth files");
    add_common(simulate, args, false);

    CLI::App* track = app.add_subcommand("track", "run the tracker over recorded frames");
    add_common(track, args, true);
    track->add_option("--frames", frames_path, "frames JSON-lines file")->required();
    track->add_option("--truth", truth_path, "truth file (known-clutter mode)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score estimates against truth");
    add_common(evaluate, args, false);
    evaluate->add_option("--truth", truth_path, "truth JSON-lines file")->required();
    evaluate->add_option("--tracks", tracks_path, "track estimates file")->required();
    evaluate->add_option("--components", components_path, "clutter estimates file");

    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo simulate+track+evaluate");
    add_common(sweep, args, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (track->parsed()) return cmd_track(args, frames_path, truth_path);
        if (evaluate->parsed())
            return cmd_evaluate(args, truth_path, tracks_path, components_path);
        if (sweep->parsed()) return cmd_sweep(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
