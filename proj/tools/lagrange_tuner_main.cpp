// lagrange-tuner: per-clip Lagrangian multiplier tuning.
//
// Subcommands cover the full workflow: build or ingest a clip manifest, run
// the estimation systems over a corpus into a resumable results store, train
// the regression forest from stored ground truth, predict from features, and
// render corpus reports. `cache gc` prunes the shared encode cache.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lagrange/corpus_runner.hpp"
#include "lagrange/encode_cache.hpp"
#include "lagrange/external_codec.hpp"
#include "lagrange/features.hpp"
#include "lagrange/forest.hpp"
#include "lagrange/k_multiplier.hpp"
#include "lagrange/manifest.hpp"
#include "lagrange/reports.hpp"
#include "lagrange/results_store.hpp"
#include "lagrange/synth_codec.hpp"
#include "lagrange/systems.hpp"

namespace {

using namespace lagrange;

struct BackendChoice {
    std::shared_ptr<EncoderBackend> backend;
    SynthBackend* synth = nullptr;  // set when the backend is the simulator
};

// Selects the backend. "auto" picks the simulator when every manifest path
// uses the synth:// scheme and the external toolchain otherwise; mixing the
// two in one manifest is rejected.
BackendChoice make_backend(const std::string& kind, const Manifest& manifest,
                           const SynthConfig& synth_config,
                           const ToolchainConfig& toolchain) {
    std::string resolved = kind;
    if (resolved == "auto") {
        std::size_t synth_paths = 0;
        for (const ManifestEntry& e : manifest.entries)
            if (e.path.rfind("synth://", 0) == 0) ++synth_paths;
        if (synth_paths == manifest.entries.size()) {
            resolved = "synth";
        } else if (synth_paths == 0) {
            resolved = "external";
        } else {
            throw std::runtime_error(
                "manifest mixes synth:// and file paths; pass --backend");
        }
    }
    BackendChoice choice;
    if (resolved == "synth") {
        auto synth = std::make_shared<SynthBackend>(synth_config);
        choice.synth = synth.get();
        choice.backend = std::move(synth);
    } else if (resolved == "external") {
        choice.backend = std::make_shared<ExternalBackend>(toolchain);
    } else {
        throw std::runtime_error("unknown backend '" + resolved + "'");
    }
    return choice;
}

std::vector<SystemId> parse_systems(const std::vector<std::string>& names) {
    std::vector<SystemId> out;
    out.reserve(names.size());
    for (const std::string& n : names) out.push_back(system_from_string(n));
    return out;
}

std::vector<SystemId> all_systems() {
    return {SystemId::S0,  SystemId::S1,  SystemId::S2, SystemId::S3,
            SystemId::ML0, SystemId::ML1, SystemId::ML2};
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// Planted optima per proxy flavour, only meaningful for the simulator.
void write_ground_truth(const Manifest& manifest, SynthBackend& synth,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "clip_id,kstar,kstar_144p,kstar_fast,kstar_h264\n";
    for (const ManifestEntry& e : manifest.entries) {
        EncodeJob base;
        base.clip = to_clip(e);
        base.codec = Codec::SYNTH;
        EncodeJob p144 = base;
        p144.clip = synth.downscale(base.clip, 144);
        EncodeJob fast = base;
        fast.preset = Preset::Fast;
        EncodeJob h264 = base;
        h264.codec = Codec::H264;
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f\n",
                      e.id.c_str(), synth.effective_kstar(base),
                      synth.effective_kstar(p144), synth.effective_kstar(fast),
                      synth.effective_kstar(h264));
        out << line;
    }
}

int cmd_ingest(const std::string& manifest_path, const std::string& out_path) {
    Manifest m = ingest_manifest(manifest_path);
    print_warnings(m.warnings);
    std::printf("entries: %zu\n", m.entries.size());
    std::printf("runnable: %zu\n", m.runnable().size());
    if (!m.notes.empty()) std::printf("notes: %s\n", m.notes.c_str());
    if (!out_path.empty()) {
        write_manifest(m, out_path);
        std::printf("wrote: %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_simulate(int count, std::uint64_t seed, const std::string& out_path) {
    Manifest m = make_synth_manifest(count, seed);
    write_manifest(m, out_path);
    std::printf("wrote %zu synthetic clips to %s\n", m.entries.size(),
                out_path.c_str());
    return 0;
}

struct RunArgs {
    std::string manifest_path;
    std::string results_path;
    std::vector<std::string> system_names;
    std::string backend_kind = "auto";
    std::string codec_name;  // empty = synth/hevc by backend
    std::string cache_dir;
    std::string model_path;
    std::string ground_truth_path;
    SynthConfig synth;
    ToolchainConfig toolchain;
    OptimizeConfig opt;
    int proxy_height = 144;
    int feature_crf = kFeatureSourceCrf;
    int workers = 4;
    bool force = false;
    bool no_traces = false;
};

int cmd_run(const RunArgs& args) {
    Manifest manifest = ingest_manifest(args.manifest_path);
    print_warnings(manifest.warnings);

    BackendChoice choice = make_backend(args.backend_kind, manifest, args.synth,
                                        args.toolchain);
    CachingBackend cache(choice.backend, args.cache_dir);

    RunConfig config;
    config.systems = parse_systems(args.system_names);
    config.workers = args.workers;
    config.force = args.force;
    config.record_traces = !args.no_traces;
    config.system_config.opt = args.opt;
    config.system_config.opt.codec =
        args.codec_name.empty()
            ? (choice.synth != nullptr ? Codec::SYNTH : Codec::HEVC)
            : codec_from_string(args.codec_name);
    config.system_config.proxy_height = args.proxy_height;
    config.system_config.feature_crf = args.feature_crf;

    ForestModel model;
    if (!args.model_path.empty()) {
        model = ForestModel::load(args.model_path);
        config.system_config.model = &model;
    }

    if (!args.ground_truth_path.empty()) {
        if (choice.synth == nullptr)
            throw std::runtime_error("--ground-truth needs the synth backend");
        write_ground_truth(manifest, *choice.synth, args.ground_truth_path);
        std::printf("ground truth: %s\n", args.ground_truth_path.c_str());
    }

    ResultsStore store(args.results_path);
    print_warnings(store.warnings());
    RunSummary summary = run_corpus(manifest, cache, store, config);

    const CacheStats stats = cache.stats();
    std::printf("results: %s\n", store.path().c_str());
    std::printf("executed: %d  resumed: %d  skipped: %d  failed: %d\n",
                summary.executed, summary.resumed, summary.skipped,
                summary.failed);
    std::printf("encoder runs: %zu  cache hits: %zu\n", stats.encoder_runs,
                stats.hits);
    for (const std::string& f : summary.failures)
        std::fprintf(stderr, "failed: %s\n", f.c_str());
    return summary.exit_code();
}

struct ReportArgs {
    std::string results_path;
    std::string out_dir = "reports";
    std::vector<std::string> kinds = {"cdf", "summary", "speedup"};
    std::vector<std::string> system_names;
    bool allow_cached_timing = false;
};

int cmd_report(const ReportArgs& args) {
    ResultsStore store(args.results_path);
    print_warnings(store.warnings());
    const std::vector<SystemId> systems =
        args.system_names.empty() ? all_systems()
                                  : parse_systems(args.system_names);

    std::vector<std::string> kinds = args.kinds;
    for (const std::string& k : kinds)
        if (k == "all") {
            kinds = {"cdf", "summary", "speedup"};
            break;
        }

    for (const std::string& kind : kinds) {
        ReportResult r;
        if (kind == "cdf") {
            r = report_cdf(store.outcomes(), systems, args.out_dir);
        } else if (kind == "summary") {
            r = report_summary(store.outcomes(), systems, args.out_dir);
        } else if (kind == "speedup") {
            r = report_speedup(store.outcomes(), args.out_dir,
                               args.allow_cached_timing);
        } else {
            throw std::runtime_error("unknown report kind '" + kind + "'");
        }
        for (const std::string& f : r.files_written)
            std::printf("wrote: %s\n", f.c_str());
        for (const std::string& s : r.missing_systems)
            std::fprintf(stderr, "warning: no %s outcomes for %s\n",
                         kind.c_str(), s.c_str());
    }
    return 0;
}

struct TrainArgs {
    std::string manifest_path;
    std::string results_path;
    std::string out_path;
    std::string backend_kind = "auto";
    std::string codec_name;
    std::string cache_dir;
    SynthConfig synth;
    ToolchainConfig toolchain;
    int feature_crf = kFeatureSourceCrf;
    int frames = 150;
    int trees = 100;
    double holdout = 0.1;
    std::uint64_t train_seed = 1;
};

// Ground truth labels are the stored S0 estimates; features come from one
// cached encode per clip at the feature operating point.
int cmd_train(const TrainArgs& args) {
    Manifest manifest = ingest_manifest(args.manifest_path);
    print_warnings(manifest.warnings);
    ResultsStore store(args.results_path);
    print_warnings(store.warnings());

    BackendChoice choice = make_backend(args.backend_kind, manifest, args.synth,
                                        args.toolchain);
    CachingBackend cache(choice.backend, args.cache_dir);
    const Codec codec =
        args.codec_name.empty()
            ? (choice.synth != nullptr ? Codec::SYNTH : Codec::HEVC)
            : codec_from_string(args.codec_name);

    std::map<std::string, double> labels;
    for (const SystemOutcome& o : store.outcomes())
        if (o.system == SystemId::S0 && o.codec == codec &&
            o.status == OutcomeStatus::Ok)
            labels[o.clip_id] = o.k_estimated;
    if (labels.empty())
        throw std::runtime_error(
            "no S0 outcomes for codec " + to_string(codec) + " in " +
            store.path() + "; run --systems S0 first");

    std::vector<TrainRow> rows;
    int feature_failures = 0;
    for (const ManifestEntry& e : manifest.runnable()) {
        auto it = labels.find(e.id);
        if (it == labels.end()) continue;
        EncodeJob job;
        job.clip = to_clip(e);
        job.codec = codec;
        job.crf = args.feature_crf;
        job.k = 1.0;
        job.frames = args.frames;
        try {
            TrainRow row;
            row.features = extract_features(cache.encode(job));
            row.label = it->second;
            row.clip_id = e.id;
            row.codec = codec;
            rows.push_back(std::move(row));
        } catch (const std::exception& ex) {
            ++feature_failures;
            std::fprintf(stderr, "warning: features for %s failed: %s\n",
                         e.id.c_str(), ex.what());
        }
    }
    if (feature_failures > 0)
        std::fprintf(stderr, "warning: skipped %d clip(s)\n", feature_failures);

    TrainSet data = TrainSet::split(std::move(rows), args.holdout,
                                    args.train_seed);
    ForestConfig config;
    config.trees = args.trees;
    config.seed = args.train_seed;
    ForestModel model = train_forest(data, config);
    model.save(args.out_path);

    std::printf("rows: %zu  train: %zu  holdout: %zu\n", data.rows.size(),
                data.train_idx.size(), data.holdout_idx.size());
    std::printf("cv r2: %.4f\n", model.cv_score);
    if (!data.holdout_idx.empty())
        std::printf("holdout r2: %.4f\n", model.holdout_r2);
    std::printf("features: %s\n", model.feature_version.c_str());
    std::printf("wrote: %s\n", args.out_path.c_str());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& features_path) {
    const ForestModel model = ForestModel::load(model_path);
    const nlohmann::json j = load_json_file(features_path);
    FeatureVector features;
    if (j.contains("values")) {
        features = j.get<FeatureVector>();
    } else {
        // Treat the file as a stored encode result and derive features.
        features = extract_features(j.get<EncodeResult>());
    }
    std::printf("%.3f\n", round_k(model.predict(features)));
    return 0;
}

int cmd_cache_gc(const std::string& cache_dir, double older_than_days) {
    CachingBackend cache(std::make_shared<SynthBackend>(), cache_dir);
    const CachingBackend::GcReport r = cache.gc(older_than_days);
    std::printf("scanned: %zu  removed: %zu  freed: %ju bytes\n", r.scanned,
                r.removed, static_cast<std::uintmax_t>(r.bytes_freed));
    return 0;
}

void add_toolchain_options(CLI::App* cmd, ToolchainConfig& tc) {
    cmd->add_option("--x265-bin", tc.x265_bin, "x265 binary");
    cmd->add_option("--vpx-bin", tc.vpx_bin, "vpxenc binary");
    cmd->add_option("--x264-bin", tc.x264_bin, "x264 binary");
    cmd->add_option("--ffmpeg-bin", tc.ffmpeg_bin, "ffmpeg binary (downscale)");
    cmd->add_option("--work-dir", tc.work_dir, "encoder output directory");
    cmd->add_option("--scale-dir", tc.scale_dir, "downscaled rendition cache");
    cmd->add_flag("--keep-outputs", tc.keep_outputs, "keep encoded bitstreams");
    cmd->add_flag("--assume-k-support", tc.assume_k_support,
                  "skip the --lambda-scale help probe");
}

void add_synth_options(CLI::App* cmd, SynthConfig& sc) {
    cmd->add_option("--seed", sc.seed, "synthetic corpus seed");
    cmd->add_option("--corr-144p", sc.corr_144p, "proxy correlation, 144p");
    cmd->add_option("--corr-fast", sc.corr_fast, "proxy correlation, fast");
    cmd->add_option("--corr-h264", sc.corr_h264, "proxy correlation, h264");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-clip Lagrangian multiplier tuning"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Validate a clip manifest");
    std::string ingest_manifest_path, ingest_out;
    ingest->add_option("--manifest", ingest_manifest_path, "manifest JSON")
        ->required();
    ingest->add_option("--out", ingest_out, "write the normalized manifest");

    auto* simulate =
        app.add_subcommand("simulate-corpus", "Write a synthetic manifest");
    int sim_count = 20;
    std::uint64_t sim_seed = 20260818;
    std::string sim_out;
    simulate->add_option("--count", sim_count, "number of clips")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_seed, "corpus seed");
    simulate->add_option("--out", sim_out, "manifest path")->required();

    auto* run = app.add_subcommand("run", "Run systems over a corpus");
    RunArgs run_args;
    run->add_option("--manifest", run_args.manifest_path, "manifest JSON")
        ->required();
    run->add_option("--results", run_args.results_path, "results store (JSONL)")
        ->required();
    run->add_option("--systems", run_args.system_names,
                    "systems to run (S0 S1 S2 S3 ML0 ML1 ML2)")
        ->required()
        ->delimiter(',');
    run->add_option("--backend", run_args.backend_kind,
                    "auto | synth | external");
    run->add_option("--codec", run_args.codec_name,
                    "target codec (hevc, vp9, h264, synth)");
    run->add_option("--cache-dir", run_args.cache_dir,
                    "persistent encode cache");
    run->add_option("--model", run_args.model_path,
                    "forest model for ML systems");
    run->add_option("--ground-truth", run_args.ground_truth_path,
                    "write planted k* CSV (synth backend only)");
    run->add_option("--workers", run_args.workers, "worker threads")
        ->check(CLI::PositiveNumber);
    run->add_option("--crfs", run_args.opt.crfs, "operating points")
        ->delimiter(',');
    run->add_option("--frames", run_args.opt.frames, "frames per encode")
        ->check(CLI::PositiveNumber);
    run->add_option("--proxy-height", run_args.proxy_height,
                    "downscale target for S1/ML1")
        ->check(CLI::PositiveNumber);
    run->add_option("--feature-crf", run_args.feature_crf,
                    "operating point for ML features");
    run->add_flag("--force", run_args.force, "redo pairs already in the store");
    run->add_flag("--no-traces", run_args.no_traces,
                  "skip storing optimization traces");
    add_synth_options(run, run_args.synth);
    add_toolchain_options(run, run_args.toolchain);

    auto* report = app.add_subcommand("report", "Render corpus reports");
    ReportArgs report_args;
    report->add_option("--results", report_args.results_path, "results store")
        ->required();
    report->add_option("--out-dir", report_args.out_dir, "report directory");
    report->add_option("--kind", report_args.kinds,
                       "cdf | summary | speedup | all")
        ->delimiter(',');
    report->add_option("--systems", report_args.system_names,
                       "systems to include")
        ->delimiter(',');
    report->add_flag("--allow-cached-timing", report_args.allow_cached_timing,
                     "accept speedups from cache-hit timings");

    auto* train = app.add_subcommand("train", "Train the regression forest");
    TrainArgs train_args;
    train->add_option("--manifest", train_args.manifest_path, "manifest JSON")
        ->required();
    train->add_option("--results", train_args.results_path,
                      "results store with S0 outcomes")
        ->required();
    train->add_option("--out", train_args.out_path, "model output path")
        ->required();
    train->add_option("--backend", train_args.backend_kind,
                      "auto | synth | external");
    train->add_option("--codec", train_args.codec_name, "label codec");
    train->add_option("--cache-dir", train_args.cache_dir,
                      "persistent encode cache");
    train->add_option("--feature-crf", train_args.feature_crf,
                      "operating point for features");
    train->add_option("--frames", train_args.frames, "frames per encode")
        ->check(CLI::PositiveNumber);
    train->add_option("--trees", train_args.trees, "forest size")
        ->check(CLI::PositiveNumber);
    train->add_option("--holdout", train_args.holdout,
                      "holdout fraction, never trained on")
        ->check(CLI::Range(0.0, 0.5));
    train->add_option("--train-seed", train_args.train_seed,
                      "split and forest seed");
    add_synth_options(train, train_args.synth);
    add_toolchain_options(train, train_args.toolchain);

    auto* predict = app.add_subcommand("predict", "Predict k from features");
    std::string predict_model, predict_features;
    predict->add_option("--model", predict_model, "forest model")->required();
    predict->add_option("--features", predict_features,
                        "feature vector or encode result JSON")
        ->required();

    auto* cache = app.add_subcommand("cache", "Encode cache maintenance");
    cache->require_subcommand(1);
    auto* gc = cache->add_subcommand("gc", "Remove old cache records");
    std::string gc_dir;
    double gc_days = 30.0;
    gc->add_option("--cache-dir", gc_dir, "cache directory")->required();
    gc->add_option("--older-than-days", gc_days,
                   "age threshold (0 removes everything)")
        ->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_manifest_path, ingest_out);
        if (simulate->parsed()) return cmd_simulate(sim_count, sim_seed, sim_out);
        if (run->parsed()) return cmd_run(run_args);
        if (report->parsed()) return cmd_report(report_args);
        if (train->parsed()) return cmd_train(train_args);
        if (predict->parsed()) return cmd_predict(predict_model, predict_features);
        if (cache->parsed() && gc->parsed()) return cmd_cache_gc(gc_dir, gc_days);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
