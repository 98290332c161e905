#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lagrange/encode.hpp"
#include "lagrange/forest.hpp"
#include "lagrange/optimizer.hpp"

namespace lagrange {

// Where the multiplier is estimated. Every system applies its estimate at the
// original resolution and codec and re-measures the gain there.
//   S0:  direct optimization on the original (ground truth, expensive)
//   S1:  direct optimization on the 144p rendition
//   S2:  direct optimization with the fast preset
//   S3:  direct optimization via H.264
//   ML0: forest prediction from original-configuration features
//   ML1: forest prediction from 144p features
//   ML2: forest prediction from fast-preset features
enum class SystemId { S0, S1, S2, S3, ML0, ML1, ML2 };

std::string to_string(SystemId id);
SystemId system_from_string(const std::string& s);
bool is_ml(SystemId id);

struct SystemConfig {
    OptimizeConfig opt;      // codec field = the target codec
    int proxy_height = 144;
    int feature_crf = kFeatureSourceCrf;
    const ForestModel* model = nullptr;  // required for ML systems
};

enum class OutcomeStatus { Ok, Skipped, Failed };
std::string to_string(OutcomeStatus s);
OutcomeStatus outcome_status_from_string(const std::string& s);

struct SystemOutcome {
    std::string clip_id;
    SystemId system = SystemId::S0;
    Codec codec = Codec::SYNTH;  // target codec the gain is measured on
    OutcomeStatus status = OutcomeStatus::Ok;
    std::string detail;  // reason when skipped or failed
    double k_estimated = 1.0;
    double realized_gain_percent = 0.0;
    bool harmful = false;  // the measured gain came out negative
    double estimate_time_s = 0.0;
    double apply_time_s = 0.0;
    int estimate_encodes = 0;
    int apply_encodes = 0;
    int iterations = 0;        // objective evaluations (1 for ML systems)
    bool timing_fresh = true;  // estimate phase ran with zero cache hits
};

void to_json(nlohmann::json& j, const SystemOutcome& o);
void from_json(const nlohmann::json& j, SystemOutcome& o);

// Runs one system on one clip: estimates k on the system's proxy
// configuration, then re-encodes at the original configuration and measures
// BD-Rate gain against the original k=1 baseline. Gains are never read off
// the proxy. Unavailable dependencies (missing binary, missing scaler,
// missing model) come back as Skipped; measurement errors as Failed; an
// infeasible estimation falls back to k=1 with zero gain.
// For the direct systems (S0-S3), trace_out (when given) receives the full
// optimization trace of the estimate phase.
SystemOutcome run_system(const ClipRef& clip, SystemId system,
                         EncoderBackend& backend, const SystemConfig& config,
                         OptimizationResult* trace_out = nullptr);

struct SpeedupRow {
    SystemId system = SystemId::S0;
    int clips = 0;
    double total_estimate_s = 0.0;
    double mean_estimate_s = 0.0;
    double speedup = 1.0;  // vs S0; S0 row is exactly 1.0
};

// Estimate-phase timing comparison across systems, S0 = 1.0 by definition.
// Outcomes whose estimate phase touched the cache are not honest timings;
// they are refused unless allow_cached_timing is set. Requires at least one
// Ok S0 outcome as the reference.
std::vector<SpeedupRow> measure_speedup(const std::vector<SystemOutcome>& outcomes,
                                        bool allow_cached_timing = false);

}  // namespace lagrange
