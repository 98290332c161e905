#include "lagrange/corpus_runner.hpp"

#include <future>
#include <mutex>

#include "lagrange/thread_pool.hpp"

namespace lagrange {

RunSummary run_corpus(const Manifest& manifest, EncoderBackend& backend,
                      ResultsStore& store, const RunConfig& config) {
    if (config.systems.empty())
        throw std::invalid_argument("no systems requested");

    RunSummary summary;
    std::mutex mu;  // guards summary counters

    ThreadPool pool(std::max(1, config.workers));
    std::vector<std::future<void>> futures;

    const Codec codec = config.system_config.opt.codec;
    for (const ManifestEntry& entry : manifest.entries) {
        for (SystemId system : config.systems) {
            if (config.cancelled && config.cancelled()) break;

            if (!config.force && store.has_outcome(entry.id, system, codec)) {
                std::lock_guard lock(mu);
                ++summary.resumed;
                continue;
            }
            if (!entry.runnable) {
                SystemOutcome out;
                out.clip_id = entry.id;
                out.system = system;
                out.codec = codec;
                out.status = OutcomeStatus::Skipped;
                out.detail = "clip file missing: " + entry.path;
                store.append(out);
                std::lock_guard lock(mu);
                ++summary.skipped;
                continue;
            }

            futures.push_back(pool.submit([&, entry, system] {
                SystemOutcome out;
                OptimizationResult trace;
                bool have_trace = false;
                try {
                    OptimizationResult* want =
                        (config.record_traces && !is_ml(system)) ? &trace
                                                                 : nullptr;
                    out = run_system(to_clip(entry), system, backend,
                                     config.system_config, want);
                    have_trace = want != nullptr && !trace.clip_id.empty();
                } catch (const std::exception& e) {
                    // run_system catches expected failure modes itself; this
                    // is the isolation belt for anything that escapes.
                    out.clip_id = entry.id;
                    out.system = system;
                    out.codec = codec;
                    out.status = OutcomeStatus::Failed;
                    out.detail = e.what();
                }
                if (have_trace) {
                    trace.clip_id = entry.id;  // proxies keep the source id
                    store.append(trace);
                }
                store.append(out);
                std::lock_guard lock(mu);
                switch (out.status) {
                    case OutcomeStatus::Ok: ++summary.executed; break;
                    case OutcomeStatus::Skipped: ++summary.skipped; break;
                    case OutcomeStatus::Failed:
                        ++summary.failed;
                        summary.failures.push_back(entry.id + "/" +
                                                   to_string(system) + ": " +
                                                   out.detail);
                        break;
                }
            }));
        }
        if (config.cancelled && config.cancelled()) break;
    }
    for (auto& f : futures) f.get();
    return summary;
}

}  // namespace lagrange
