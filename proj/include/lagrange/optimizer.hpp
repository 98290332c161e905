#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lagrange/brent.hpp"
#include "lagrange/encode.hpp"
#include "lagrange/rd_metrics.hpp"

namespace lagrange {

struct OptimizeConfig {
    std::vector<int> crfs = {22, 27, 32, 37, 42};
    Codec codec = Codec::SYNTH;
    Preset preset = Preset::Default;
    int frames = 150;
    BrentOptions brent;  // 0.05 pp improvement rule, 1e-3 x-tol, 30 evals
    // Initial bracket around the codec default, expanded toward the feasible
    // walls when the minimum is not interior to it.
    double bracket_lo = 0.2;
    double bracket_mid = 1.0;
    double bracket_hi = 3.0;
    double k_floor = 0.05;
    double k_ceil = 5.95;
};

// One unique candidate k: its objective and how many encoder runs it cost
// (5 cold, 0 when every operating point came from cache).
struct Evaluation {
    double k = 0.0;
    double objective_percent = 0.0;
    int encode_count = 0;
};

enum class Termination { Converged, MaxIter, Infeasible };
std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct OptimizationResult {
    std::string clip_id;
    Codec codec = Codec::SYNTH;
    Preset preset = Preset::Default;
    double k_opt = 1.0;
    double best_objective = 0.0;  // percent, <= 0 (k=1 scores 0 by definition)
    double gain_percent = 0.0;    // = -best_objective
    std::vector<Evaluation> evaluations;  // unique k, first is always k=1.0
    int iterations = 0;                   // = evaluations.size()
    int encodes_performed = 0;            // total encoder runs, 0 on warm cache
    Termination terminated_by = Termination::Converged;
    double wall_time_s = 0.0;   // summed encode wall time of the search
    bool timing_fresh = true;   // false if any operating point was a cache hit
};

void to_json(nlohmann::json& j, const OptimizationResult& r);
void from_json(const nlohmann::json& j, OptimizationResult& r);

// Baseline (k=1) or candidate-k encode failures that abort the whole clip.
struct OptimizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Encodes the clip's operating-point curve at each candidate k Brent visits
// and minimizes the BD objective against the k=1 baseline. Candidate k values
// are rounded to the 1e-3 grid and memoized, so repeated probes cost nothing.
// Evaluations whose curve is unusable (non-monotone, thin overlap) score +inf
// and the search retreats; a baseline failure throws OptimizeError. When no
// interior minimum can be bracketed, returns k=1 with Termination::Infeasible.
OptimizationResult optimize_clip(const ClipRef& clip, EncoderBackend& backend,
                                 const OptimizeConfig& config);

// Encodes the operating-point set at one k and assembles the RD curve.
// Shared by the optimizer (estimate phase) and the systems layer (apply
// phase). Points are sorted by ascending quality before validation.
RdCurve encode_curve(const ClipRef& clip, EncoderBackend& backend,
                     const OptimizeConfig& config, double k,
                     int* encoder_runs = nullptr, double* wall_time_s = nullptr,
                     bool* all_fresh = nullptr);

}  // namespace lagrange
