#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagrange/encode.hpp"
#include "lagrange/subprocess.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using namespace lagrange;

namespace {

std::string tuner_bin() {
    const char* env = std::getenv("LAGRANGE_TUNER_BIN");
    REQUIRE_MESSAGE(env != nullptr,
                    "LAGRANGE_TUNER_BIN must point at the built binary");
    return env;
}

RunResult tuner(std::vector<std::string> args) {
    args.insert(args.begin(), tuner_bin());
    return run_command(args);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("simulate-corpus and ingest round-trip on disk") {
    testutil::TempDir tmp("cli-sim");
    const auto mpath = tmp.sub("m.json").string();

    auto sim = tuner({"simulate-corpus", "--count", "8", "--seed", "42",
                      "--out", mpath});
    CHECK(sim.exit_code == 0);
    CHECK(sim.output.find("wrote 8 synthetic clips") != std::string::npos);

    const auto normalized = tmp.sub("normalized.json").string();
    auto ing = tuner({"ingest", "--manifest", mpath, "--out", normalized});
    CHECK(ing.exit_code == 0);
    CHECK(ing.output.find("entries: 8") != std::string::npos);
    CHECK(ing.output.find("runnable: 8") != std::string::npos);

    auto again = tuner({"ingest", "--manifest", normalized});
    CHECK(again.exit_code == 0);

    auto missing = tuner({"ingest", "--manifest", tmp.sub("nope.json").string()});
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("error:") != std::string::npos);
}

TEST_CASE("the documented workflow runs end to end") {
    testutil::TempDir tmp("cli-flow");
    const auto mpath = tmp.sub("m.json").string();
    const auto rpath = tmp.sub("r.jsonl").string();
    const auto model_path = tmp.sub("k.model").string();
    const auto gt_path = tmp.sub("gt.csv").string();

    REQUIRE(tuner({"simulate-corpus", "--count", "60", "--seed", "9", "--out",
                   mpath})
                .exit_code == 0);

    auto run = tuner({"run", "--manifest", mpath, "--results", rpath,
                      "--systems", "S0", "--workers", "4", "--ground-truth",
                      gt_path});
    CHECK(run.exit_code == 0);
    CHECK(run.output.find("executed: 60") != std::string::npos);
    CHECK(run.output.find("failed: 0") != std::string::npos);

    const auto gt = slurp(gt_path);
    CHECK(gt.rfind("clip_id,kstar,kstar_144p,kstar_fast,kstar_h264\n", 0) == 0);
    CHECK(std::count(gt.begin(), gt.end(), '\n') == 61);  // header + 60 rows

    auto resume = tuner({"run", "--manifest", mpath, "--results", rpath,
                         "--systems", "S0"});
    CHECK(resume.exit_code == 0);
    CHECK(resume.output.find("resumed: 60") != std::string::npos);
    CHECK(resume.output.find("executed: 0") != std::string::npos);

    const auto report_dir = tmp.sub("reports").string();
    auto rep = tuner({"report", "--results", rpath, "--out-dir", report_dir,
                      "--kind", "all", "--systems", "S0,S1"});
    CHECK(rep.exit_code == 0);
    CHECK(fs::exists(fs::path(report_dir) / "cdf_S0.csv"));
    CHECK(fs::exists(fs::path(report_dir) / "summary.csv"));
    CHECK(fs::exists(fs::path(report_dir) / "summary.txt"));
    CHECK(fs::exists(fs::path(report_dir) / "speedup.csv"));
    CHECK(rep.output.find("no cdf outcomes for S1") != std::string::npos);

    auto train = tuner({"train", "--manifest", mpath, "--results", rpath,
                        "--out", model_path, "--trees", "20", "--train-seed",
                        "3"});
    CHECK(train.exit_code == 0);
    CHECK(train.output.find("rows: 60") != std::string::npos);
    CHECK(train.output.find("wrote: " + model_path) != std::string::npos);
    CHECK(slurp(model_path).rfind("LAGRANGE-FOREST/1\n", 0) == 0);

    auto ml = tuner({"run", "--manifest", mpath, "--results", rpath,
                     "--systems", "ML0", "--model", model_path});
    CHECK(ml.exit_code == 0);
    CHECK(ml.output.find("executed: 60") != std::string::npos);

    // predict accepts a stored encode result and derives the features.
    EncodeResult sample;
    sample.bitrate_kbps = 2400.0;
    sample.psnr_overall = 41.0;
    sample.psnr_y = 40.7;
    sample.psnr_u = 44.0;
    sample.psnr_v = 44.3;
    sample.per_frame_type["I"] = {7000.0, 42.5, 45.0, 45.2, 5};
    sample.per_frame_type["P"] = {2300.0, 40.9, 44.1, 44.4, 73};
    sample.per_frame_type["B"] = {1100.0, 40.2, 43.8, 44.0, 72};
    sample.width = 1280;
    sample.height = 720;
    const auto fpath = tmp.sub("encode.json").string();
    {
        std::ofstream out(fpath);
        out << nlohmann::json(sample).dump();
    }
    auto pred = tuner({"predict", "--model", model_path, "--features", fpath});
    CHECK(pred.exit_code == 0);
    const double k = std::stod(pred.output);
    CHECK(k > 0.0);
    CHECK(k < 6.0);
}

TEST_CASE("run reports skips through the exit code") {
    testutil::TempDir tmp("cli-skip");
    const auto mpath = tmp.sub("m.json").string();
    const auto rpath = tmp.sub("r.jsonl").string();
    REQUIRE(tuner({"simulate-corpus", "--count", "3", "--seed", "2", "--out",
                   mpath})
                .exit_code == 0);

    // ML0 without a model: every pair lands as Skipped.
    auto run = tuner({"run", "--manifest", mpath, "--results", rpath,
                      "--systems", "ML0"});
    CHECK(run.exit_code == 3);
    CHECK(run.output.find("skipped: 3") != std::string::npos);
}

TEST_CASE("the persistent cache serves a second process") {
    testutil::TempDir tmp("cli-cache");
    const auto mpath = tmp.sub("m.json").string();
    const auto rpath = tmp.sub("r.jsonl").string();
    const auto cache_dir = tmp.sub("cache").string();
    REQUIRE(tuner({"simulate-corpus", "--count", "3", "--seed", "11", "--out",
                   mpath})
                .exit_code == 0);

    auto cold = tuner({"run", "--manifest", mpath, "--results", rpath,
                       "--systems", "S0", "--cache-dir", cache_dir});
    CHECK(cold.exit_code == 0);
    CHECK(cold.output.find("encoder runs: 0") == std::string::npos);

    // A forced rerun in a fresh process finds every encode on disk.
    auto warm = tuner({"run", "--manifest", mpath, "--results", rpath,
                       "--systems", "S0", "--cache-dir", cache_dir, "--force"});
    CHECK(warm.exit_code == 0);
    CHECK(warm.output.find("encoder runs: 0") != std::string::npos);

    auto gc = tuner({"cache", "gc", "--cache-dir", cache_dir,
                     "--older-than-days", "0"});
    CHECK(gc.exit_code == 0);
    CHECK(gc.output.find("removed: ") != std::string::npos);
    bool any_json = false;
    for (const auto& e : fs::recursive_directory_iterator(cache_dir))
        any_json |= e.path().extension() == ".json";
    CHECK_FALSE(any_json);
}

TEST_CASE("bad invocations fail with a clear error") {
    testutil::TempDir tmp("cli-bad");
    const auto mpath = tmp.sub("m.json").string();
    REQUIRE(tuner({"simulate-corpus", "--count", "2", "--seed", "1", "--out",
                   mpath})
                .exit_code == 0);

    CHECK(tuner({"no-such-command"}).exit_code != 0);
    CHECK(tuner({"simulate-corpus", "--count", "5"}).exit_code != 0);

    auto bad_system = tuner({"run", "--manifest", mpath, "--results",
                             tmp.sub("r.jsonl").string(), "--systems", "S9"});
    CHECK(bad_system.exit_code == 1);
    CHECK(bad_system.output.find("unknown system") != std::string::npos);

    auto bad_kind = tuner({"report", "--results", tmp.sub("r.jsonl").string(),
                           "--kind", "pie"});
    CHECK(bad_kind.exit_code == 1);
    CHECK(bad_kind.output.find("unknown report kind") != std::string::npos);

    auto no_model = tuner({"predict", "--model", tmp.sub("nope.model").string(),
                           "--features", mpath});
    CHECK(no_model.exit_code == 1);
    CHECK(no_model.output.find("error:") != std::string::npos);
}

TEST_CASE("auto backend refuses mixed manifests") {
    testutil::TempDir tmp("cli-mixed");
    const auto mpath = tmp.sub("m.json").string();
    {
        std::ofstream out(mpath);
        out << R"({"schema":"lagrange-manifest/1","entries":[)"
            << R"({"id":"a","path":"synth://a","width":640,"height":360},)"
            << R"({"id":"b","path":")" << tmp.sub("b.y4m").string()
            << R"(","width":640,"height":360}]})";
    }
    auto run = tuner({"run", "--manifest", mpath, "--results",
                      tmp.sub("r.jsonl").string(), "--systems", "S0"});
    CHECK(run.exit_code == 1);
    CHECK(run.output.find("manifest mixes") != std::string::npos);
}
