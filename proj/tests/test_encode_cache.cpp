#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lagrange/encode_cache.hpp"
#include "lagrange/synth_codec.hpp"
#include "support/temp_dir.hpp"

using namespace lagrange;
namespace fs = std::filesystem;

namespace {

EncodeJob make_job(int crf = 32, double k = 1.0,
                   const std::string& id = "clip-001") {
    EncodeJob j;
    j.clip.id = id;
    j.clip.path = "synth://" + id;
    j.clip.width = 1280;
    j.clip.height = 720;
    j.crf = crf;
    j.k = k;
    return j;
}

// Counts inner encodes and can be made slow or faulty, to expose the
// single-flight window and the error path.
class ProbeBackend : public EncoderBackend {
public:
    std::atomic<int> calls{0};
    std::atomic<int> failures_left{0};
    int sleep_ms = 0;
    std::string log_text;

    EncodeResult encode(const EncodeJob& job) override {
        calls.fetch_add(1);
        if (sleep_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        if (failures_left.fetch_sub(1) > 0)
            throw EncodeFailure("injected failure");
        failures_left.store(0);
        EncodeResult r = inner_.encode(job);
        r.log_text = log_text;
        return r;
    }
    ClipRef downscale(const ClipRef& clip, int h) override {
        return inner_.downscale(clip, h);
    }
    std::string fingerprint() const override { return "probe-v1"; }

private:
    SynthBackend inner_;
};

}  // namespace

TEST_CASE("memory cache: first encode runs, the second is a hit") {
    CachingBackend cache(std::make_shared<SynthBackend>());
    const EncodeJob job = make_job();

    const EncodeResult first = cache.encode(job);
    CHECK_FALSE(first.from_cache);
    CHECK(cache.stats().misses == 1);
    CHECK(cache.stats().encoder_runs == 1);
    CHECK(cache.stats().hits == 0);

    const EncodeResult second = cache.encode(job);
    CHECK(second.from_cache);
    CHECK(second.bitrate_kbps == first.bitrate_kbps);
    CHECK(second.wall_time_s == first.wall_time_s);
    CHECK(cache.stats().hits == 1);
    CHECK(cache.stats().encoder_runs == 1);

    // A different operating point is new work.
    cache.encode(make_job(37));
    CHECK(cache.stats().encoder_runs == 2);
}

TEST_CASE("k values on the same 1e-3 grid point share an entry") {
    CachingBackend cache(std::make_shared<SynthBackend>());
    CHECK(cache.cache_key(make_job(32, 1.234)) ==
          cache.cache_key(make_job(32, 1.2340004)));
    CHECK(cache.cache_key(make_job(32, 1.234)) !=
          cache.cache_key(make_job(32, 1.235)));
}

TEST_CASE("keys separate backends by fingerprint") {
    SynthConfig other;
    other.seed = 99;
    CachingBackend a(std::make_shared<SynthBackend>());
    CachingBackend b(std::make_shared<SynthBackend>(other));
    CHECK(a.cache_key(make_job()) != b.cache_key(make_job()));
    CHECK(a.fingerprint() == "synth-v1:seed=20260818");
}

TEST_CASE("concurrent identical jobs collapse to one encoder run") {
    auto probe = std::make_shared<ProbeBackend>();
    probe->sleep_ms = 40;
    CachingBackend cache(probe);
    const EncodeJob job = make_job();

    constexpr int kThreads = 8;
    std::vector<EncodeResult> results(kThreads);
    std::vector<std::thread> threads;
    threads.reserve(kThreads);
    for (int i = 0; i < kThreads; ++i)
        threads.emplace_back([&, i] { results[i] = cache.encode(job); });
    for (auto& t : threads) t.join();

    CHECK(probe->calls.load() == 1);
    CHECK(cache.stats().encoder_runs == 1);
    CHECK(cache.stats().misses == 1);
    CHECK(cache.stats().hits == kThreads - 1);
    int fresh = 0;
    for (const auto& r : results) {
        CHECK(r.bitrate_kbps == results[0].bitrate_kbps);
        if (!r.from_cache) ++fresh;
    }
    CHECK(fresh == 1);  // only the flight owner saw a non-cached result
}

TEST_CASE("a failed flight propagates to every waiter, then retries") {
    auto probe = std::make_shared<ProbeBackend>();
    probe->sleep_ms = 40;
    // Enough injected failures that a straggler starting its own flight after
    // the first one collapsed still fails; the test must not depend on every
    // thread joining the same flight.
    constexpr int kThreads = 4;
    probe->failures_left = kThreads;
    CachingBackend cache(probe);
    const EncodeJob job = make_job();

    std::atomic<int> caught{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < kThreads; ++i)
        threads.emplace_back([&] {
            try {
                cache.encode(job);
            } catch (const EncodeFailure&) {
                caught.fetch_add(1);
            }
        });
    for (auto& t : threads) t.join();

    CHECK(caught.load() == kThreads);
    CHECK(probe->calls.load() >= 1);
    CHECK(probe->calls.load() < kThreads + 1);

    // The failure was not cached: the next request encodes again and works.
    probe->failures_left.store(0);
    const int calls_before = probe->calls.load();
    const EncodeResult r = cache.encode(job);
    CHECK_FALSE(r.from_cache);
    CHECK(probe->calls.load() == calls_before + 1);
}

TEST_CASE("disk round-trip survives a memory drop and a new process-alike") {
    testutil::TempDir dir("cache");
    auto inner = std::make_shared<SynthBackend>();
    CachingBackend cache(inner, dir.str());
    const EncodeJob job = make_job();

    const EncodeResult fresh = cache.encode(job);
    const std::string key = cache.cache_key(job);
    const fs::path record =
        dir.path() / key.substr(0, 2) / (key + ".json");
    REQUIRE(fs::exists(record));

    // Record carries schema, identity, and the full result.
    {
        std::ifstream in(record);
        const nlohmann::json j = nlohmann::json::parse(in);
        CHECK(j.at("schema") == "encode-cache/1");
        CHECK(j.at("key") == key);
        CHECK(j.at("backend") == inner->fingerprint());
        CHECK(j.at("job").at("crf") == 32);
        CHECK(j.at("result").at("bitrate_kbps").get<double>() ==
              doctest::Approx(fresh.bitrate_kbps));
    }

    cache.drop_memory();
    cache.reset_stats();
    const EncodeResult from_disk = cache.encode(job);
    CHECK(from_disk.from_cache);
    CHECK(from_disk.bitrate_kbps == fresh.bitrate_kbps);
    CHECK(from_disk.per_frame_type.at("I").frame_count ==
          fresh.per_frame_type.at("I").frame_count);
    CHECK(cache.stats().hits == 1);
    CHECK(cache.stats().encoder_runs == 0);

    // A second cache over the same root sees the record too.
    CachingBackend other(std::make_shared<SynthBackend>(), dir.str());
    CHECK(other.encode(job).from_cache);
    CHECK(other.stats().encoder_runs == 0);
}

TEST_CASE("encoder logs are stored as a sibling file, not inside the json") {
    testutil::TempDir dir("cache-log");
    auto probe = std::make_shared<ProbeBackend>();
    probe->log_text = "encoded 150 frames\nkb/s: 4432.1\n";
    CachingBackend cache(probe, dir.str());
    const EncodeJob job = make_job();
    cache.encode(job);

    const std::string key = cache.cache_key(job);
    fs::path record = dir.path() / key.substr(0, 2) / (key + ".json");
    fs::path log = record;
    log.replace_extension(".log");
    REQUIRE(fs::exists(log));
    std::ifstream in(log);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    CHECK(text == probe->log_text);
    std::ifstream rec(record);
    const nlohmann::json j = nlohmann::json::parse(rec);
    CHECK_FALSE(j.at("result").contains("log_text"));
}

TEST_CASE("corrupt disk records read as misses and are rewritten") {
    testutil::TempDir dir("cache-corrupt");
    CachingBackend cache(std::make_shared<SynthBackend>(), dir.str());
    const EncodeJob job = make_job();
    cache.encode(job);

    const std::string key = cache.cache_key(job);
    const fs::path record = dir.path() / key.substr(0, 2) / (key + ".json");
    {
        std::ofstream out(record, std::ios::trunc);
        out << "{ not json";
    }
    cache.drop_memory();
    cache.reset_stats();
    const EncodeResult r = cache.encode(job);
    CHECK_FALSE(r.from_cache);
    CHECK(cache.stats().encoder_runs == 1);
    std::ifstream in(record);
    nlohmann::json rewritten;
    CHECK_NOTHROW(rewritten = nlohmann::json::parse(in));  // valid again
    CHECK(rewritten.is_object());
}

TEST_CASE("gc removes by age and clears memory") {
    testutil::TempDir dir("cache-gc");
    auto probe = std::make_shared<ProbeBackend>();
    probe->log_text = "x\n";
    CachingBackend cache(probe, dir.str());
    for (int crf : {28, 32, 36}) cache.encode(make_job(crf));

    CachingBackend::GcReport keep = cache.gc(30.0);
    CHECK(keep.scanned == 3);
    CHECK(keep.removed == 0);
    CHECK(keep.bytes_freed == 0);

    // Memory was cleared even though disk stayed, so the next lookup falls
    // through to disk instead of memory.
    cache.reset_stats();
    CHECK(cache.encode(make_job(28)).from_cache);
    CHECK(cache.stats().encoder_runs == 0);

    CachingBackend::GcReport wipe = cache.gc(0.0);
    CHECK(wipe.scanned == 3);
    CHECK(wipe.removed == 3);
    CHECK(wipe.bytes_freed > 0);
    std::size_t json_left = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir.path()))
        if (e.is_regular_file()) ++json_left;
    CHECK(json_left == 0);  // .log siblings were collected too

    cache.reset_stats();
    cache.encode(make_job(28));
    CHECK(cache.stats().encoder_runs == 1);
}

TEST_CASE("invalid inner results are rejected, not cached") {
    class BrokenBackend : public EncoderBackend {
    public:
        int calls = 0;
        EncodeResult encode(const EncodeJob&) override {
            ++calls;
            return EncodeResult{};  // bitrate 0: invalid
        }
        ClipRef downscale(const ClipRef& c, int) override { return c; }
        std::string fingerprint() const override { return "broken"; }
    };
    auto broken = std::make_shared<BrokenBackend>();
    CachingBackend cache(broken);
    CHECK_THROWS_AS(cache.encode(make_job()), BadEncodeResult);
    CHECK_THROWS_AS(cache.encode(make_job()), BadEncodeResult);
    CHECK(broken->calls == 2);  // nothing was cached
}

TEST_CASE("stats arithmetic stays consistent") {
    CachingBackend cache(std::make_shared<SynthBackend>());
    int total_calls = 0;
    for (int round = 0; round < 3; ++round)
        for (int crf : {28, 30, 32, 34}) {
            cache.encode(make_job(crf));
            ++total_calls;
        }
    const CacheStats s = cache.stats();
    CHECK(s.hits + s.misses == static_cast<std::size_t>(total_calls));
    CHECK(s.misses == 4);
    CHECK(s.encoder_runs == s.misses);
    CHECK(s.hits == 8);
    cache.reset_stats();
    CHECK(cache.stats().hits == 0);
    CHECK(cache.stats().misses == 0);
}
