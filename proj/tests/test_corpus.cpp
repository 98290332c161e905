#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagrange/corpus_runner.hpp"
#include "lagrange/manifest.hpp"
#include "lagrange/reports.hpp"
#include "lagrange/results_store.hpp"
#include "lagrange/synth_codec.hpp"
#include "support/temp_dir.hpp"

using namespace lagrange;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    REQUIRE(out);
}

SystemOutcome ok_outcome(const std::string& clip, SystemId system, double gain,
                         double estimate_s = 1.0) {
    SystemOutcome o;
    o.clip_id = clip;
    o.system = system;
    o.codec = Codec::SYNTH;
    o.status = OutcomeStatus::Ok;
    o.k_estimated = 1.5;
    o.realized_gain_percent = gain;
    o.harmful = gain < 0.0;
    o.estimate_time_s = estimate_s;
    return o;
}

struct FailClipBackend : EncoderBackend {
    SynthBackend inner{SynthConfig{}};
    std::string bad_id;
    explicit FailClipBackend(std::string id) : bad_id(std::move(id)) {}
    EncodeResult encode(const EncodeJob& job) override {
        if (job.clip.id == bad_id) throw EncodeFailure("simulated encoder crash");
        return inner.encode(job);
    }
    ClipRef downscale(const ClipRef& c, int h) override {
        return inner.downscale(c, h);
    }
    std::string fingerprint() const override { return inner.fingerprint(); }
};

}  // namespace

TEST_CASE("synthetic manifests are seeded and well-formed") {
    const auto m = make_synth_manifest(20, 7);
    REQUIRE(m.entries.size() == 20);
    CHECK(m.entries.front().id == "synth-0001");
    CHECK(m.entries.back().id == "synth-0020");
    for (const auto& e : m.entries) {
        CHECK(e.path == "synth://" + e.id);
        CHECK(e.frames == 150);
        CHECK(e.fps == 30.0);
        CHECK(e.runnable);
        CHECK((e.category == "1080p" || e.category == "720p" ||
               e.category == "540p" || e.category == "360p"));
    }
    CHECK(m.runnable().size() == 20);

    const auto again = make_synth_manifest(20, 7);
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(again.entries[i].width == m.entries[i].width);
        CHECK(again.entries[i].height == m.entries[i].height);
    }
    const auto other = make_synth_manifest(20, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < m.entries.size(); ++i)
        any_diff |= other.entries[i].width != m.entries[i].width;
    CHECK(any_diff);

    CHECK_THROWS_AS(make_synth_manifest(0, 1), ManifestError);
}

TEST_CASE("manifests survive a write/ingest round trip") {
    testutil::TempDir tmp("manifest-rt");
    auto m = make_synth_manifest(5, 3);
    m.notes = "round trip corpus";
    const auto path = tmp.sub("corpus.json").string();
    write_manifest(m, path);

    const auto back = ingest_manifest(path);
    CHECK(back.notes == "round trip corpus");
    CHECK(back.warnings.empty());
    REQUIRE(back.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(back.entries[i].id == m.entries[i].id);
        CHECK(back.entries[i].path == m.entries[i].path);
        CHECK(back.entries[i].width == m.entries[i].width);
        CHECK(back.entries[i].height == m.entries[i].height);
        CHECK(back.entries[i].frames == m.entries[i].frames);
        CHECK(back.entries[i].fps == m.entries[i].fps);
        CHECK(back.entries[i].category == m.entries[i].category);
        CHECK(back.entries[i].runnable);
    }

    const auto clip = to_clip(back.entries[0]);
    CHECK(clip.id == back.entries[0].id);
    CHECK(clip.width == back.entries[0].width);
    CHECK(clip.variant.empty());
}

TEST_CASE("manifest ingestion rejects malformed input") {
    testutil::TempDir tmp("manifest-bad");
    auto path_for = [&](const char* name, const std::string& body) {
        const auto p = tmp.sub(name).string();
        spit(p, body);
        return p;
    };
    const std::string entry =
        R"({"id":"a","path":"synth://a","width":640,"height":360})";

    CHECK_THROWS_AS(ingest_manifest(tmp.sub("absent.json").string()),
                    ManifestError);
    CHECK_THROWS_AS(ingest_manifest(path_for("junk.json", "{nope")),
                    ManifestError);
    CHECK_THROWS_AS(ingest_manifest(path_for(
                        "schema.json",
                        R"({"schema":"lagrange-manifest/9","entries":[)" + entry +
                            "]}")),
                    ManifestError);
    CHECK_THROWS_AS(ingest_manifest(path_for(
                        "empty.json",
                        R"({"schema":"lagrange-manifest/1","entries":[]})")),
                    ManifestError);
    CHECK_THROWS_AS(ingest_manifest(path_for(
                        "dupe.json",
                        R"({"schema":"lagrange-manifest/1","entries":[)" + entry +
                            "," + entry + "]}")),
                    ManifestError);
    CHECK_THROWS_AS(
        ingest_manifest(path_for(
            "noid.json",
            R"({"schema":"lagrange-manifest/1","entries":[{"id":"","path":"synth://a","width":640,"height":360}]})")),
        ManifestError);
    CHECK_THROWS_AS(
        ingest_manifest(path_for(
            "dims.json",
            R"({"schema":"lagrange-manifest/1","entries":[{"id":"a","path":"synth://a","width":0,"height":360}]})")),
        ManifestError);
    CHECK_THROWS_AS(
        ingest_manifest(path_for(
            "missingkey.json",
            R"({"schema":"lagrange-manifest/1","entries":[{"id":"a","path":"synth://a","height":360}]})")),
        ManifestError);
}

TEST_CASE("missing clip files are flagged unrunnable, not fatal") {
    testutil::TempDir tmp("manifest-missing");
    const auto real = tmp.sub("real.y4m").string();
    spit(real, "YUV4MPEG2 W640 H360 F30:1 Ip A1:1 C420jpeg\n");

    nlohmann::json j{
        {"schema", "lagrange-manifest/1"},
        {"entries",
         {{{"id", "present"}, {"path", real}, {"width", 640}, {"height", 360}},
          {{"id", "gone"},
           {"path", tmp.sub("gone.y4m").string()},
           {"width", 640},
           {"height", 360}},
          {{"id", "virtual"},
           {"path", "synth://virtual"},
           {"width", 1280},
           {"height", 720}}}}};
    const auto path = tmp.sub("mixed.json").string();
    spit(path, j.dump());

    const auto m = ingest_manifest(path);
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].runnable);
    CHECK_FALSE(m.entries[1].runnable);
    CHECK(m.entries[2].runnable);  // synth:// needs no file
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].find("gone") != std::string::npos);
    CHECK(m.runnable().size() == 2);
}

TEST_CASE("the results store persists outcomes and traces") {
    testutil::TempDir tmp("store-rt");
    const auto path = (tmp.sub("runs") / "results.jsonl").string();

    {
        ResultsStore store(path);  // creates the parent directory
        CHECK(store.size() == 0);
        store.append(ok_outcome("clip-a", SystemId::S0, 1.25));
        store.append(ok_outcome("clip-a", SystemId::S1, 0.75));
        OptimizationResult trace;
        trace.clip_id = "clip-a";
        trace.k_opt = 1.5;
        trace.evaluations.push_back({1.0, 0.0, 5});
        store.append(trace);

        CHECK(store.has_outcome("clip-a", SystemId::S0, Codec::SYNTH));
        CHECK(store.has_outcome("clip-a", SystemId::S1, Codec::SYNTH));
        CHECK_FALSE(store.has_outcome("clip-a", SystemId::S2, Codec::SYNTH));
        CHECK_FALSE(store.has_outcome("clip-a", SystemId::S0, Codec::HEVC));
        CHECK_FALSE(store.has_outcome("clip-b", SystemId::S0, Codec::SYNTH));
        CHECK(store.size() == 3);
    }

    ResultsStore reloaded(path);
    CHECK(reloaded.warnings().empty());
    REQUIRE(reloaded.outcomes().size() == 2);
    REQUIRE(reloaded.optimizations().size() == 1);
    CHECK(reloaded.outcomes()[0].clip_id == "clip-a");
    CHECK(reloaded.outcomes()[0].realized_gain_percent == 1.25);
    CHECK(reloaded.optimizations()[0].k_opt == 1.5);
    REQUIRE(reloaded.optimizations()[0].evaluations.size() == 1);
    CHECK(reloaded.optimizations()[0].evaluations[0].encode_count == 5);
    CHECK(reloaded.has_outcome("clip-a", SystemId::S1, Codec::SYNTH));
}

TEST_CASE("a torn final line is dropped silently, interior damage warns") {
    testutil::TempDir tmp("store-torn");
    const auto path = tmp.sub("results.jsonl").string();

    {
        ResultsStore store(path);
        store.append(ok_outcome("clip-a", SystemId::S0, 1.0));
        store.append(ok_outcome("clip-b", SystemId::S0, 2.0));
    }

    SUBCASE("torn final line") {
        // Simulate a crash mid-append: truncated JSON, no trailing newline.
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << R"({"type":"outcome","record":{"clip_id":"clip-c")";
        out.close();

        ResultsStore store(path);
        CHECK(store.outcomes().size() == 2);
        CHECK(store.warnings().empty());
        CHECK_FALSE(store.has_outcome("clip-c", SystemId::S0, Codec::SYNTH));

        // The next append lands on its own line and the store heals.
        store.append(ok_outcome("clip-d", SystemId::S0, 0.5));
        ResultsStore healed(path);
        CHECK(healed.outcomes().size() == 3);
    }

    SUBCASE("interior garbage earns a warning and is skipped") {
        {
            std::ofstream out(path, std::ios::binary | std::ios::app);
            out << "not json at all\n";
        }
        {
            ResultsStore store(path);
            store.append(ok_outcome("clip-e", SystemId::S0, 0.1));
        }
        ResultsStore store(path);
        CHECK(store.outcomes().size() == 3);
        REQUIRE(store.warnings().size() == 1);
        CHECK(store.warnings()[0].find("line 3") != std::string::npos);
    }

    SUBCASE("unknown record types warn without aborting the load") {
        {
            std::ofstream out(path, std::ios::binary | std::ios::app);
            out << R"({"type":"telemetry","record":{}})" << "\n";
        }
        ResultsStore store(path);
        CHECK(store.outcomes().size() == 2);
        REQUIRE(store.warnings().size() == 1);
        CHECK(store.warnings()[0].find("telemetry") != std::string::npos);
    }
}

TEST_CASE("gain buckets follow the documented semantics") {
    std::vector<SystemOutcome> outcomes{
        ok_outcome("a", SystemId::S0, -0.2), ok_outcome("b", SystemId::S0, 0.05),
        ok_outcome("c", SystemId::S0, 0.5), ok_outcome("d", SystemId::S0, 2.0)};
    auto failed = ok_outcome("e", SystemId::S0, 9.0);
    failed.status = OutcomeStatus::Failed;
    outcomes.push_back(failed);  // never counted

    const auto s = summarize_gains(SystemId::S0, outcomes);
    CHECK(s.clips == 4);
    CHECK(s.pct_no_improvement == 25.0);
    CHECK(s.pct_over_0_1 == 50.0);  // 0.5 and 2.0
    CHECK(s.pct_over_1 == 25.0);    // 2.0 only
    CHECK(s.best_gain == 2.0);
    CHECK(s.mean_gain == doctest::Approx(0.5875).epsilon(1e-12));

    const auto empty = summarize_gains(SystemId::S3, outcomes);
    CHECK(empty.clips == 0);
}

TEST_CASE("reports are exact and byte-stable") {
    std::vector<SystemOutcome> outcomes{
        ok_outcome("a", SystemId::S0, 2.0, 10.0),
        ok_outcome("b", SystemId::S0, 0.5, 14.0),
        ok_outcome("c", SystemId::S0, -0.2, 0.0),
        ok_outcome("a", SystemId::S1, 1.0, 1.0),
        ok_outcome("b", SystemId::S1, 0.4, 2.0),
        ok_outcome("c", SystemId::S1, 0.1, 1.0)};

    testutil::TempDir tmp("reports");

    SUBCASE("cdf files carry ascending gains and exact fractions") {
        const auto res = report_cdf(outcomes, {SystemId::S0, SystemId::S2},
                                    tmp.sub("r1").string());
        REQUIRE(res.files_written.size() == 1);
        CHECK(res.missing_systems == std::vector<std::string>{"S2"});
        CHECK(slurp(res.files_written[0]) ==
              "gain_percent,cumulative_fraction\n"
              "-0.200000,0.333333\n"
              "0.500000,0.666667\n"
              "2.000000,1.000000\n");

        const auto rerun = report_cdf(outcomes, {SystemId::S0, SystemId::S2},
                                      tmp.sub("r2").string());
        CHECK(slurp(rerun.files_written[0]) == slurp(res.files_written[0]));
    }

    SUBCASE("summary tables") {
        const auto res = report_summary(outcomes, {SystemId::S0},
                                        tmp.sub("r3").string());
        REQUIRE(res.files_written.size() == 2);
        CHECK(slurp(res.files_written[0]) ==
              "system,clips,pct_no_improvement,pct_over_0_1,pct_over_1,"
              "best_gain,mean_gain\n"
              "S0,3,33.3333,66.6667,33.3333,2.0000,0.7667\n");
        const auto txt = slurp(res.files_written[1]);
        CHECK(txt.find("S0") != std::string::npos);
        CHECK(txt.find("clips") != std::string::npos);
    }

    SUBCASE("speedup table") {
        // S0 total 24s over 2 rows; S1 is 4s over 3, so 6x. The -0.2 S0 row
        // contributes 0s of estimate time but still counts as a clip.
        const auto res =
            report_speedup(outcomes, tmp.sub("r4").string());
        REQUIRE(res.files_written.size() == 1);
        CHECK(slurp(res.files_written[0]) ==
              "system,clips,total_estimate_s,mean_estimate_s,speedup_vs_s0\n"
              "S0,3,24.000000,8.000000,1.0000\n"
              "S1,3,4.000000,1.333333,6.0000\n");
    }

    SUBCASE("empty stores cannot be reported") {
        CHECK_THROWS_AS(report_cdf({}, {SystemId::S0}, tmp.sub("r5").string()),
                        std::runtime_error);
        CHECK_THROWS_AS(
            report_summary({}, {SystemId::S0}, tmp.sub("r6").string()),
            std::runtime_error);
        CHECK_THROWS_AS(report_speedup({}, tmp.sub("r7").string()),
                        std::runtime_error);
    }
}

TEST_CASE("run_corpus executes, records traces, and resumes") {
    testutil::TempDir tmp("runner");
    const auto manifest = make_synth_manifest(6, 5);
    SynthBackend backend{SynthConfig{}};

    RunConfig config;
    config.systems = {SystemId::S0};
    config.workers = 3;

    ResultsStore store(tmp.sub("results.jsonl").string());
    const auto first = run_corpus(manifest, backend, store, config);
    CHECK(first.executed == 6);
    CHECK(first.resumed == 0);
    CHECK(first.failed == 0);
    CHECK(first.skipped == 0);
    CHECK(first.exit_code() == 0);
    CHECK(store.outcomes().size() == 6);
    // record_traces defaults on: every direct-system run stores its trace.
    CHECK(store.optimizations().size() == 6);

    std::set<std::string> traced;
    for (const auto& t : store.optimizations()) {
        traced.insert(t.clip_id);
        CHECK_FALSE(t.evaluations.empty());
    }
    CHECK(traced.size() == 6);

    SUBCASE("a second run resumes without re-encoding") {
        const auto second = run_corpus(manifest, backend, store, config);
        CHECK(second.executed == 0);
        CHECK(second.resumed == 6);
        CHECK(second.exit_code() == 0);
        CHECK(store.outcomes().size() == 6);
        CHECK(store.optimizations().size() == 6);
    }

    SUBCASE("force redoes stored pairs") {
        RunConfig forced = config;
        forced.force = true;
        const auto second = run_corpus(manifest, backend, store, forced);
        CHECK(second.executed == 6);
        CHECK(store.outcomes().size() == 12);
    }

    SUBCASE("traces can be turned off") {
        RunConfig quiet = config;
        quiet.force = true;
        quiet.record_traces = false;
        (void)run_corpus(manifest, backend, store, quiet);
        CHECK(store.optimizations().size() == 6);  // unchanged
    }

    SUBCASE("ML systems without a model are stored as skipped") {
        RunConfig ml = config;
        ml.systems = {SystemId::ML0};
        const auto summary = run_corpus(manifest, backend, store, ml);
        CHECK(summary.skipped == 6);
        CHECK(summary.exit_code() == 3);
        CHECK(store.optimizations().size() == 6);  // ML never traces
    }
}

TEST_CASE("unrunnable entries are stored as skipped outcomes") {
    testutil::TempDir tmp("runner-missing");
    nlohmann::json j{
        {"schema", "lagrange-manifest/1"},
        {"entries",
         {{{"id", "ok"}, {"path", "synth://ok"}, {"width", 1280}, {"height", 720}},
          {{"id", "gone"},
           {"path", tmp.sub("gone.y4m").string()},
           {"width", 640},
           {"height", 360}}}}};
    const auto mpath = tmp.sub("m.json").string();
    spit(mpath, j.dump());
    const auto manifest = ingest_manifest(mpath);

    SynthBackend backend{SynthConfig{}};
    ResultsStore store(tmp.sub("results.jsonl").string());
    RunConfig config;
    config.systems = {SystemId::S0};

    const auto summary = run_corpus(manifest, backend, store, config);
    CHECK(summary.executed == 1);
    CHECK(summary.skipped == 1);
    CHECK(summary.exit_code() == 3);

    bool found = false;
    for (const auto& o : store.outcomes())
        if (o.clip_id == "gone") {
            found = true;
            CHECK(o.status == OutcomeStatus::Skipped);
            CHECK(o.detail.find("clip file missing") != std::string::npos);
        }
    CHECK(found);
}

TEST_CASE("per-clip failures are isolated and reported") {
    testutil::TempDir tmp("runner-fail");
    const auto manifest = make_synth_manifest(3, 9);
    FailClipBackend backend("synth-0002");
    ResultsStore store(tmp.sub("results.jsonl").string());

    RunConfig config;
    config.systems = {SystemId::S0};
    config.workers = 2;

    const auto summary = run_corpus(manifest, backend, store, config);
    CHECK(summary.executed == 2);
    CHECK(summary.failed == 1);
    CHECK(summary.exit_code() == 2);
    REQUIRE(summary.failures.size() == 1);
    CHECK(summary.failures[0].find("synth-0002/S0") != std::string::npos);

    bool found = false;
    for (const auto& o : store.outcomes())
        if (o.clip_id == "synth-0002") {
            found = true;
            CHECK(o.status == OutcomeStatus::Failed);
        }
    CHECK(found);
}

TEST_CASE("cancellation stops scheduling and the rerun completes the set") {
    testutil::TempDir tmp("runner-cancel");
    const auto manifest = make_synth_manifest(10, 4);
    SynthBackend backend{SynthConfig{}};
    ResultsStore store(tmp.sub("results.jsonl").string());

    RunConfig config;
    config.systems = {SystemId::S0};
    config.workers = 2;
    std::atomic<int> polls{0};
    config.cancelled = [&polls] { return ++polls > 4; };

    const auto partial = run_corpus(manifest, backend, store, config);
    CHECK(partial.executed > 0);
    CHECK(partial.executed < 10);
    CHECK(store.outcomes().size() == static_cast<std::size_t>(partial.executed));

    RunConfig rest = config;
    rest.cancelled = nullptr;
    const auto finish = run_corpus(manifest, backend, store, rest);
    CHECK(finish.resumed == partial.executed);
    CHECK(finish.executed == 10 - partial.executed);
    CHECK(store.outcomes().size() == 10);

    std::set<std::string> ids;
    for (const auto& o : store.outcomes()) ids.insert(o.clip_id);
    CHECK(ids.size() == 10);
}

TEST_CASE("run_corpus refuses an empty system list") {
    const auto manifest = make_synth_manifest(1, 1);
    SynthBackend backend{SynthConfig{}};
    testutil::TempDir tmp("runner-empty");
    ResultsStore store(tmp.sub("r.jsonl").string());
    CHECK_THROWS_AS(run_corpus(manifest, backend, store, RunConfig{}),
                    std::invalid_argument);
}
