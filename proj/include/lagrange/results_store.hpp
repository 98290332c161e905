#pragma once

#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "lagrange/optimizer.hpp"
#include "lagrange/systems.hpp"

namespace lagrange {

// Append-only JSON-lines log of outcomes and optimization traces, one record
// per line, type-tagged. Loading tolerates a torn final line (a crash during
// append) by dropping it; torn interior lines are dropped with a warning.
// One process should write at a time; appends are serialized internally and
// flushed per record so an interrupted run loses at most the line in flight.
class ResultsStore {
public:
    explicit ResultsStore(std::string path);

    bool has_outcome(const std::string& clip_id, SystemId system,
                     Codec codec) const;

    void append(const SystemOutcome& outcome);
    void append(const OptimizationResult& result);

    const std::vector<SystemOutcome>& outcomes() const { return outcomes_; }
    const std::vector<OptimizationResult>& optimizations() const {
        return optimizations_;
    }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::string& path() const { return path_; }
    std::size_t size() const { return outcomes_.size() + optimizations_.size(); }

private:
    void load();
    void append_line(const std::string& line);
    static std::string outcome_key(const std::string& clip_id, SystemId system,
                                   Codec codec);

    std::string path_;
    mutable std::mutex mu_;
    bool trailing_newline_ = true;  // false while the file ends in a torn line
    std::vector<SystemOutcome> outcomes_;
    std::vector<OptimizationResult> optimizations_;
    std::set<std::string> outcome_index_;
    std::vector<std::string> warnings_;
};

}  // namespace lagrange
