#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "lagrange/encode.hpp"

namespace lagrange {

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t encoder_runs = 0;  // actual inner encodes performed
};

// Content-addressed cache around any backend. Key = SHA-256 of the job's
// canonical identity string plus the inner backend fingerprint, so the same
// job through different encoder versions never collides. Lookup order:
// memory, then disk (when a root is configured), then a real encode.
// Concurrent identical jobs are single-flight: one inner encode, everyone
// else waits for it. Results returned from any cache layer (or from waiting
// on another thread's flight) carry from_cache = true.
class CachingBackend : public EncoderBackend {
public:
    // disk_root empty = memory-only cache.
    explicit CachingBackend(std::shared_ptr<EncoderBackend> inner,
                            std::string disk_root = {});

    EncodeResult encode(const EncodeJob& job) override;
    ClipRef downscale(const ClipRef& clip, int target_height) override;
    std::string fingerprint() const override;

    std::string cache_key(const EncodeJob& job) const;

    CacheStats stats() const;
    void reset_stats();
    void drop_memory();  // forget in-memory entries, keep disk

    struct GcReport {
        std::size_t scanned = 0;
        std::size_t removed = 0;
        std::uintmax_t bytes_freed = 0;
    };
    // Removes disk records older than max_age_days (0 = remove everything).
    GcReport gc(double max_age_days);

private:
    struct Flight {
        std::mutex m;
        std::condition_variable cv;
        bool done = false;
        EncodeResult result;
        std::exception_ptr error;
    };

    bool disk_load(const std::string& key, EncodeResult& out) const;
    void disk_store(const std::string& key, const EncodeJob& job,
                    const EncodeResult& result) const;
    std::string record_path(const std::string& key) const;

    std::shared_ptr<EncoderBackend> inner_;
    std::string disk_root_;

    mutable std::mutex mu_;
    std::unordered_map<std::string, EncodeResult> memory_;
    std::unordered_map<std::string, std::shared_ptr<Flight>> inflight_;
    CacheStats stats_;
};

}  // namespace lagrange
