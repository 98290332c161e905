#include "lagrange/encode_cache.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "lagrange/sha256.hpp"

namespace fs = std::filesystem;

namespace lagrange {
namespace {

long long now_unix() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Write-then-rename so readers never observe a torn record.
void atomic_write(const fs::path& target, const std::string& content) {
    fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw std::runtime_error("cache write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace

CachingBackend::CachingBackend(std::shared_ptr<EncoderBackend> inner,
                               std::string disk_root)
    : inner_(std::move(inner)), disk_root_(std::move(disk_root)) {
    if (!disk_root_.empty()) fs::create_directories(disk_root_);
}

std::string CachingBackend::cache_key(const EncodeJob& job) const {
    return sha256_hex(job.key() + "|backend=" + inner_->fingerprint());
}

std::string CachingBackend::record_path(const std::string& key) const {
    return (fs::path(disk_root_) / key.substr(0, 2) / (key + ".json")).string();
}

bool CachingBackend::disk_load(const std::string& key, EncodeResult& out) const {
    if (disk_root_.empty()) return false;
    std::ifstream in(record_path(key), std::ios::binary);
    if (!in) return false;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        out = j.at("result").get<EncodeResult>();
        out.validate();
        return true;
    } catch (const std::exception&) {
        return false;  // corrupt record = miss; it will be rewritten
    }
}

void CachingBackend::disk_store(const std::string& key, const EncodeJob& job,
                                const EncodeResult& result) const {
    if (disk_root_.empty()) return;
    nlohmann::json j{{"schema", "encode-cache/1"},
                     {"key", key},
                     {"backend", inner_->fingerprint()},
                     {"created_unix", now_unix()},
                     {"job", job},
                     {"result", result}};
    const fs::path rec(record_path(key));
    atomic_write(rec, j.dump(2) + "\n");
    if (!result.log_text.empty()) {
        fs::path log = rec;
        log.replace_extension(".log");
        atomic_write(log, result.log_text);
    }
}

EncodeResult CachingBackend::encode(const EncodeJob& job) {
    const std::string key = cache_key(job);

    std::shared_ptr<Flight> flight;
    bool owner = false;
    {
        std::unique_lock lock(mu_);
        if (auto it = memory_.find(key); it != memory_.end()) {
            ++stats_.hits;
            EncodeResult r = it->second;
            r.from_cache = true;
            return r;
        }
        EncodeResult from_disk;
        if (disk_load(key, from_disk)) {
            ++stats_.hits;
            memory_[key] = from_disk;
            from_disk.from_cache = true;
            return from_disk;
        }
        if (auto it = inflight_.find(key); it != inflight_.end()) {
            flight = it->second;  // someone else is encoding this job
        } else {
            flight = std::make_shared<Flight>();
            inflight_[key] = flight;
            owner = true;
            ++stats_.misses;
            ++stats_.encoder_runs;
        }
    }

    if (!owner) {
        std::unique_lock fl(flight->m);
        flight->cv.wait(fl, [&] { return flight->done; });
        if (flight->error) std::rethrow_exception(flight->error);
        {
            std::unique_lock lock(mu_);
            ++stats_.hits;
        }
        EncodeResult r = flight->result;
        r.from_cache = true;
        return r;
    }

    EncodeResult result;
    std::exception_ptr error;
    try {
        result = inner_->encode(job);
        result.validate();
        result.from_cache = false;
    } catch (...) {
        error = std::current_exception();
    }

    {
        std::unique_lock lock(mu_);
        if (!error) {
            memory_[key] = result;
        }
        inflight_.erase(key);
    }
    if (!error) {
        try {
            disk_store(key, job, result);
        } catch (const std::exception&) {
            // Disk persistence is best-effort; the result itself stands.
        }
    }
    {
        std::unique_lock fl(flight->m);
        flight->done = true;
        if (error) flight->error = error;
        else flight->result = result;
    }
    flight->cv.notify_all();

    if (error) std::rethrow_exception(error);
    return result;
}

ClipRef CachingBackend::downscale(const ClipRef& clip, int target_height) {
    return inner_->downscale(clip, target_height);
}

std::string CachingBackend::fingerprint() const { return inner_->fingerprint(); }

CacheStats CachingBackend::stats() const {
    std::unique_lock lock(mu_);
    return stats_;
}

void CachingBackend::reset_stats() {
    std::unique_lock lock(mu_);
    stats_ = {};
}

void CachingBackend::drop_memory() {
    std::unique_lock lock(mu_);
    memory_.clear();
}

CachingBackend::GcReport CachingBackend::gc(double max_age_days) {
    GcReport rep;
    if (disk_root_.empty()) return rep;
    const long long cutoff =
        now_unix() - static_cast<long long>(max_age_days * 86400.0);
    std::unique_lock lock(mu_);
    for (const auto& entry : fs::recursive_directory_iterator(disk_root_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json")
            continue;
        ++rep.scanned;
        long long created = 0;
        try {
            std::ifstream in(entry.path(), std::ios::binary);
            nlohmann::json j = nlohmann::json::parse(in);
            created = j.value("created_unix", 0LL);
        } catch (const std::exception&) {
            created = 0;  // unreadable records are always collectable
        }
        if (created <= cutoff) {
            fs::path log = entry.path();
            log.replace_extension(".log");
            std::error_code ec;
            const auto size = fs::file_size(entry.path(), ec);
            if (!ec) rep.bytes_freed += size;
            const auto log_size = fs::file_size(log, ec);
            if (!ec) rep.bytes_freed += log_size;
            fs::remove(entry.path());
            fs::remove(log, ec);
            ++rep.removed;
        }
    }
    memory_.clear();
    return rep;
}

}  // namespace lagrange
