#include "lagrange/systems.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "lagrange/k_multiplier.hpp"
#include "lagrange/rd_metrics.hpp"

namespace lagrange {

std::string to_string(SystemId id) {
    switch (id) {
        case SystemId::S0: return "S0";
        case SystemId::S1: return "S1";
        case SystemId::S2: return "S2";
        case SystemId::S3: return "S3";
        case SystemId::ML0: return "ML0";
        case SystemId::ML1: return "ML1";
        case SystemId::ML2: return "ML2";
    }
    return "?";
}

SystemId system_from_string(const std::string& s) {
    if (s == "S0") return SystemId::S0;
    if (s == "S1") return SystemId::S1;
    if (s == "S2") return SystemId::S2;
    if (s == "S3") return SystemId::S3;
    if (s == "ML0") return SystemId::ML0;
    if (s == "ML1") return SystemId::ML1;
    if (s == "ML2") return SystemId::ML2;
    throw std::invalid_argument("unknown system '" + s + "'");
}

bool is_ml(SystemId id) {
    return id == SystemId::ML0 || id == SystemId::ML1 || id == SystemId::ML2;
}

std::string to_string(OutcomeStatus s) {
    switch (s) {
        case OutcomeStatus::Ok: return "ok";
        case OutcomeStatus::Skipped: return "skipped";
        case OutcomeStatus::Failed: return "failed";
    }
    return "?";
}

OutcomeStatus outcome_status_from_string(const std::string& s) {
    if (s == "ok") return OutcomeStatus::Ok;
    if (s == "skipped") return OutcomeStatus::Skipped;
    if (s == "failed") return OutcomeStatus::Failed;
    throw std::invalid_argument("unknown outcome status '" + s + "'");
}

void to_json(nlohmann::json& j, const SystemOutcome& o) {
    j = nlohmann::json{{"clip_id", o.clip_id},
                       {"system", to_string(o.system)},
                       {"codec", to_string(o.codec)},
                       {"status", to_string(o.status)},
                       {"detail", o.detail},
                       {"k_estimated", o.k_estimated},
                       {"realized_gain_percent", o.realized_gain_percent},
                       {"harmful", o.harmful},
                       {"estimate_time_s", o.estimate_time_s},
                       {"apply_time_s", o.apply_time_s},
                       {"estimate_encodes", o.estimate_encodes},
                       {"apply_encodes", o.apply_encodes},
                       {"iterations", o.iterations},
                       {"timing_fresh", o.timing_fresh}};
}

void from_json(const nlohmann::json& j, SystemOutcome& o) {
    j.at("clip_id").get_to(o.clip_id);
    o.system = system_from_string(j.at("system").get<std::string>());
    o.codec = codec_from_string(j.at("codec").get<std::string>());
    o.status = outcome_status_from_string(j.at("status").get<std::string>());
    o.detail = j.value("detail", std::string{});
    j.at("k_estimated").get_to(o.k_estimated);
    j.at("realized_gain_percent").get_to(o.realized_gain_percent);
    o.harmful = j.value("harmful", false);
    j.at("estimate_time_s").get_to(o.estimate_time_s);
    j.at("apply_time_s").get_to(o.apply_time_s);
    j.at("estimate_encodes").get_to(o.estimate_encodes);
    j.at("apply_encodes").get_to(o.apply_encodes);
    o.iterations = j.value("iterations", 0);
    o.timing_fresh = j.value("timing_fresh", true);
}

namespace {

struct EstimateSetup {
    ClipRef clip;
    Codec codec;
    Preset preset;
};

EstimateSetup estimate_setup(const ClipRef& clip, SystemId system,
                             EncoderBackend& backend,
                             const SystemConfig& config) {
    EstimateSetup s{clip, config.opt.codec, Preset::Default};
    switch (system) {
        case SystemId::S0:
        case SystemId::ML0:
            break;
        case SystemId::S1:
        case SystemId::ML1:
            s.clip = backend.downscale(clip, config.proxy_height);
            break;
        case SystemId::S2:
        case SystemId::ML2:
            s.preset = Preset::Fast;
            break;
        case SystemId::S3:
            s.codec = Codec::H264;
            break;
    }
    return s;
}

}  // namespace

SystemOutcome run_system(const ClipRef& clip, SystemId system,
                         EncoderBackend& backend, const SystemConfig& config,
                         OptimizationResult* trace_out) {
    SystemOutcome out;
    out.clip_id = clip.id;
    out.system = system;
    out.codec = config.opt.codec;

    // Estimate phase: find k on the proxy configuration.
    double k_est = 1.0;
    try {
        if (is_ml(system)) {
            if (config.model == nullptr) {
                out.status = OutcomeStatus::Skipped;
                out.detail = "no forest model configured";
                return out;
            }
            const EstimateSetup setup =
                estimate_setup(clip, system, backend, config);
            EncodeJob job;
            job.clip = setup.clip;
            job.codec = setup.codec;
            job.crf = config.feature_crf;
            job.k = 1.0;
            job.preset = setup.preset;
            job.frames = config.opt.frames;
            const EncodeResult res = backend.encode(job);
            out.estimate_time_s = res.wall_time_s;
            out.estimate_encodes = res.from_cache ? 0 : 1;
            out.timing_fresh = !res.from_cache;
            out.iterations = 1;
            k_est = config.model->predict(extract_features(res));
        } else {
            const EstimateSetup setup =
                estimate_setup(clip, system, backend, config);
            OptimizeConfig est_cfg = config.opt;
            est_cfg.codec = setup.codec;
            est_cfg.preset = setup.preset;
            const OptimizationResult opt =
                optimize_clip(setup.clip, backend, est_cfg);
            if (trace_out != nullptr) *trace_out = opt;
            out.estimate_time_s = opt.wall_time_s;
            out.estimate_encodes = opt.encodes_performed;
            out.iterations = opt.iterations;
            out.timing_fresh = opt.timing_fresh;
            if (opt.terminated_by == Termination::Infeasible) {
                // Mandated fallback: stay at the default multiplier.
                out.k_estimated = 1.0;
                out.realized_gain_percent = 0.0;
                out.detail = "estimation infeasible, fell back to k=1";
                return out;
            }
            k_est = opt.k_opt;
        }
    } catch (const BackendUnavailable& e) {
        out.status = OutcomeStatus::Skipped;
        out.detail = e.what();
        return out;
    } catch (const UnsupportedCapability& e) {
        out.status = OutcomeStatus::Skipped;
        out.detail = e.what();
        return out;
    } catch (const std::exception& e) {
        out.status = OutcomeStatus::Failed;
        out.detail = e.what();
        return out;
    }

    out.k_estimated = round_k(k_est);

    // Apply phase, always at the original configuration: gain of the
    // estimated k over the k=1 baseline. k=1 estimates need no measurement.
    if (std::abs(out.k_estimated - 1.0) < 5e-4) {
        out.k_estimated = 1.0;
        out.realized_gain_percent = 0.0;
        return out;
    }
    try {
        OptimizeConfig apply_cfg = config.opt;  // original codec, default preset
        apply_cfg.preset = Preset::Default;
        int runs = 0;
        double wall = 0.0;
        const RdCurve baseline =
            encode_curve(clip, backend, apply_cfg, 1.0, &runs, &wall, nullptr);
        const RdCurve at_k = encode_curve(clip, backend, apply_cfg,
                                          out.k_estimated, &runs, &wall, nullptr);
        out.apply_encodes = runs;
        out.apply_time_s = wall;
        out.realized_gain_percent = -bd_objective(at_k, baseline);
        out.harmful = out.realized_gain_percent < 0.0;
    } catch (const std::exception& e) {
        out.status = OutcomeStatus::Failed;
        out.detail = std::string("apply phase failed: ") + e.what();
        return out;
    }
    return out;
}

std::vector<SpeedupRow> measure_speedup(const std::vector<SystemOutcome>& outcomes,
                                        bool allow_cached_timing) {
    std::map<SystemId, SpeedupRow> rows;
    std::vector<std::string> stale;
    for (const SystemOutcome& o : outcomes) {
        if (o.status != OutcomeStatus::Ok) continue;
        if (!o.timing_fresh)
            stale.push_back(o.clip_id + "/" + to_string(o.system));
        SpeedupRow& r = rows[o.system];
        r.system = o.system;
        r.clips += 1;
        r.total_estimate_s += o.estimate_time_s;
    }
    if (!stale.empty() && !allow_cached_timing) {
        std::ostringstream msg;
        msg << "refusing to mix cached and fresh timings (" << stale.size()
            << " stale estimate(s), first: " << stale.front()
            << "); rerun with a cold cache or pass --allow-cached-timing";
        throw std::runtime_error(msg.str());
    }
    auto s0 = rows.find(SystemId::S0);
    if (s0 == rows.end() || s0->second.total_estimate_s <= 0.0)
        throw std::runtime_error("speedup needs S0 outcomes as the reference");

    std::vector<SpeedupRow> out;
    for (auto& [id, row] : rows) {
        row.mean_estimate_s = row.total_estimate_s / row.clips;
        row.speedup = (id == SystemId::S0)
                          ? 1.0
                          : s0->second.total_estimate_s / row.total_estimate_s;
        out.push_back(row);
    }
    return out;
}

}  // namespace lagrange
