#include "lagrange/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>

#include "lagrange/k_multiplier.hpp"

namespace lagrange {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxIter: return "max_iter";
        case Termination::Infeasible: return "infeasible";
    }
    return "unknown";
}

Termination termination_from_string(const std::string& s) {
    if (s == "converged") return Termination::Converged;
    if (s == "max_iter") return Termination::MaxIter;
    if (s == "infeasible") return Termination::Infeasible;
    throw std::invalid_argument("unknown termination '" + s + "'");
}

void to_json(nlohmann::json& j, const OptimizationResult& r) {
    nlohmann::json evals = nlohmann::json::array();
    for (const Evaluation& e : r.evaluations)
        evals.push_back({{"k", e.k},
                         {"objective_percent", e.objective_percent},
                         {"encode_count", e.encode_count}});
    j = nlohmann::json{{"clip_id", r.clip_id},
                       {"codec", to_string(r.codec)},
                       {"preset", to_string(r.preset)},
                       {"k_opt", r.k_opt},
                       {"best_objective", r.best_objective},
                       {"gain_percent", r.gain_percent},
                       {"evaluations", evals},
                       {"iterations", r.iterations},
                       {"encodes_performed", r.encodes_performed},
                       {"terminated_by", to_string(r.terminated_by)},
                       {"wall_time_s", r.wall_time_s},
                       {"timing_fresh", r.timing_fresh}};
}

void from_json(const nlohmann::json& j, OptimizationResult& r) {
    j.at("clip_id").get_to(r.clip_id);
    r.codec = codec_from_string(j.at("codec").get<std::string>());
    r.preset = preset_from_string(j.at("preset").get<std::string>());
    j.at("k_opt").get_to(r.k_opt);
    j.at("best_objective").get_to(r.best_objective);
    j.at("gain_percent").get_to(r.gain_percent);
    r.evaluations.clear();
    for (const auto& e : j.at("evaluations")) {
        Evaluation ev;
        e.at("k").get_to(ev.k);
        e.at("objective_percent").get_to(ev.objective_percent);
        e.at("encode_count").get_to(ev.encode_count);
        r.evaluations.push_back(ev);
    }
    j.at("iterations").get_to(r.iterations);
    j.at("encodes_performed").get_to(r.encodes_performed);
    r.terminated_by =
        termination_from_string(j.at("terminated_by").get<std::string>());
    j.at("wall_time_s").get_to(r.wall_time_s);
    r.timing_fresh = j.value("timing_fresh", true);
}

RdCurve encode_curve(const ClipRef& clip, EncoderBackend& backend,
                     const OptimizeConfig& config, double k, int* encoder_runs,
                     double* wall_time_s, bool* all_fresh) {
    std::vector<RdPoint> points;
    points.reserve(config.crfs.size());
    for (int crf : config.crfs) {
        EncodeJob job;
        job.clip = clip;
        job.codec = config.codec;
        job.crf = crf;
        job.k = round_k(k);
        job.preset = config.preset;
        job.frames = config.frames;
        const EncodeResult res = backend.encode(job);
        if (encoder_runs && !res.from_cache) ++*encoder_runs;
        if (wall_time_s) *wall_time_s += res.wall_time_s;
        if (all_fresh && res.from_cache) *all_fresh = false;
        points.push_back({res.bitrate_kbps, res.psnr_overall});
    }
    std::sort(points.begin(), points.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
    char label[32];
    std::snprintf(label, sizeof(label), "k=%.3f", round_k(k));
    return RdCurve(std::move(points), label);
}

OptimizationResult optimize_clip(const ClipRef& clip, EncoderBackend& backend,
                                 const OptimizeConfig& config) {
    OptimizationResult out;
    out.clip_id = clip.id;
    out.codec = config.codec;
    out.preset = config.preset;

    struct Memo {
        double objective;
        bool feasible;
    };
    std::map<double, Memo> memo;  // keyed by grid-rounded k

    // Baseline first; its failure fails the whole clip.
    std::unique_ptr<RdCurve> baseline;
    try {
        int runs = 0;
        bool fresh = true;
        baseline = std::make_unique<RdCurve>(
            encode_curve(clip, backend, config, 1.0, &runs, &out.wall_time_s,
                         &fresh));
        out.encodes_performed += runs;
        out.timing_fresh = out.timing_fresh && fresh;
        memo[1.0] = {0.0, true};
        out.evaluations.push_back({1.0, 0.0, runs});
    } catch (const std::exception& e) {
        throw OptimizeError("baseline encode failed for clip '" + clip.id +
                            "': " + e.what());
    }

    auto objective = [&](double raw_k) -> double {
        const double k = std::clamp(round_k(raw_k), config.k_floor, config.k_ceil);
        if (auto it = memo.find(k); it != memo.end())
            return it->second.feasible ? it->second.objective
                                       : std::numeric_limits<double>::infinity();
        double value = 0.0;
        bool feasible = true;
        int runs = 0;
        bool fresh = true;
        try {
            const RdCurve curve =
                encode_curve(clip, backend, config, k, &runs, &out.wall_time_s,
                             &fresh);
            value = bd_objective(curve, *baseline);
        } catch (const InfeasibleObjective&) {
            feasible = false;
        } catch (const BadCurve&) {
            feasible = false;  // non-monotone RD behaviour at this k
        }
        out.encodes_performed += runs;
        out.timing_fresh = out.timing_fresh && fresh;
        memo[k] = {value, feasible};
        out.evaluations.push_back(
            {k, feasible ? value : std::numeric_limits<double>::infinity(),
             runs});
        return feasible ? value : std::numeric_limits<double>::infinity();
    };

    std::vector<BrentEval> trace;
    const Bracket bracket = bracket_minimum(
        objective, config.bracket_lo, config.bracket_mid, config.bracket_hi,
        config.k_floor, config.k_ceil, trace, config.brent.max_evals);

    if (!bracket.ok) {
        // No interior minimum: stay at the default multiplier.
        out.k_opt = 1.0;
        out.best_objective = 0.0;
        out.gain_percent = 0.0;
        out.terminated_by = Termination::Infeasible;
        out.iterations = static_cast<int>(out.evaluations.size());
        return out;
    }

    const BrentResult res =
        brent_minimize(objective, bracket, config.brent, std::move(trace));

    // The best evaluation is authoritative; Brent's bookkeeping must agree.
    double best_k = 1.0;
    double best_f = 0.0;
    for (const Evaluation& e : out.evaluations) {
        if (e.objective_percent < best_f) {
            best_f = e.objective_percent;
            best_k = e.k;
        }
    }
    out.k_opt = best_k;
    out.best_objective = best_f;
    out.gain_percent = -best_f;
    out.terminated_by =
        res.converged ? Termination::Converged : Termination::MaxIter;
    out.iterations = static_cast<int>(out.evaluations.size());
    KMultiplier guard(out.k_opt);  // enforce 0 < k_opt < 6
    return out;
}

}  // namespace lagrange
