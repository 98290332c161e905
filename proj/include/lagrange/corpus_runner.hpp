#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lagrange/manifest.hpp"
#include "lagrange/results_store.hpp"
#include "lagrange/systems.hpp"

namespace lagrange {

struct RunConfig {
    std::vector<SystemId> systems;
    SystemConfig system_config;
    int workers = 4;
    bool force = false;          // redo (clip, system, codec) pairs already stored
    bool record_traces = true;  // also append S0-S3 OptimizationResults
    // Polled between clip-system jobs; returning true stops scheduling new
    // work (in-flight jobs finish). Used to exercise interrupt/resume.
    std::function<bool()> cancelled;
};

struct RunSummary {
    int executed = 0;  // ran this invocation and stored Ok
    int resumed = 0;   // already in the store, skipped without work
    int skipped = 0;   // stored as Skipped (missing file/backend/model)
    int failed = 0;    // stored as Failed
    std::vector<std::string> failures;  // "clip/system: reason"

    // Exit code contract: 0 all good, 3 some skipped, 2 any failed.
    int exit_code() const {
        if (failed > 0) return 2;
        if (skipped > 0) return 3;
        return 0;
    }
};

// Executes every (runnable clip) x (requested system) pair not already in the
// store, across a bounded worker pool. Each pair appends exactly one
// SystemOutcome; unrunnable manifest entries append Skipped records so the
// store accounts for every pair. Clip failures are isolated per pair. Safe to
// interrupt: rerunning resumes from the store index.
RunSummary run_corpus(const Manifest& manifest, EncoderBackend& backend,
                      ResultsStore& store, const RunConfig& config);

}  // namespace lagrange
