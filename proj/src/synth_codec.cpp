#include "lagrange/synth_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lagrange/k_multiplier.hpp"
#include "lagrange/rng.hpp"

namespace lagrange {
namespace {

// Marginals of ln k* before clamping; proxy draws reuse them so every proxy
// k* has the same distribution as the original.
constexpr double kLnKMean = 0.1;
constexpr double kLnKSigma = 0.55;
constexpr double kKstarLo = 0.3;
constexpr double kKstarHi = 4.0;

double clamp_kstar(double k) { return std::clamp(k, kKstarLo, kKstarHi); }

// Proxy flavour of a job: at most one axis is active per system.
enum class ProxyAxis { None, P144, Fast, H264 };

ProxyAxis axis_of(const EncodeJob& job) {
    if (job.clip.is_proxy()) return ProxyAxis::P144;
    if (job.preset == Preset::Fast) return ProxyAxis::Fast;
    if (job.codec == Codec::H264) return ProxyAxis::H264;
    return ProxyAxis::None;
}

const char* axis_name(ProxyAxis a) {
    switch (a) {
        case ProxyAxis::P144: return "p144";
        case ProxyAxis::Fast: return "fast";
        case ProxyAxis::H264: return "h264";
        case ProxyAxis::None: break;
    }
    return "none";
}

// Less efficient configurations spend more bits for the same PSNR. Constant
// across CRF and k, so the BD objective in k is untouched.
double rate_factor(ProxyAxis a) {
    switch (a) {
        case ProxyAxis::Fast: return 1.12;
        case ProxyAxis::H264: return 1.35;
        default: return 1.0;
    }
}

double psnr_offset(ProxyAxis a) {
    switch (a) {
        case ProxyAxis::P144: return -1.2;
        case ProxyAxis::Fast: return -0.2;
        case ProxyAxis::H264: return -0.8;
        default: return 0.0;
    }
}

struct TypeCounts {
    int i = 0, p = 0, b = 0;
};

// 1 IDR per 30 frames, remainder alternating P/B starting with P.
TypeCounts frame_type_counts(int frames) {
    TypeCounts c;
    c.i = std::max(1, frames / 30);
    const int rest = frames - c.i;
    c.p = (rest + 1) / 2;
    c.b = rest / 2;
    return c;
}

}  // namespace

void SynthClipParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::domain_error(std::string("synth param ") + name +
                                    " must be positive");
    };
    positive(kstar, "kstar");
    positive(beta, "beta");
    positive(alpha, "alpha");
    positive(rate_density, "rate_density");
    positive(d0, "d0");
    positive(slope, "slope");
}

SynthRd synth_model(const SynthClipParams& p, int width, int height, int crf,
                    double k) {
    p.validate();
    if (width <= 0 || height <= 0) throw std::domain_error("bad dimensions");
    KMultiplier checked(k);
    const double u = std::log(checked.value()) - std::log(p.kstar);
    const double base =
        p.rate_density * width * height * std::pow(10.0, -p.alpha * (crf - 22) / 5.0);
    SynthRd rd;
    rd.rate_kbps = base * (1.0 + p.beta * u * u);
    rd.psnr = p.d0 - p.slope * (crf - 22);
    return rd;
}

SynthBackend::SynthBackend(SynthConfig config) : config_(config) {
    for (double rho : {config_.corr_144p, config_.corr_fast, config_.corr_h264})
        if (!(rho >= 0.0) || !(rho <= 1.0))
            throw std::domain_error("proxy correlation must lie in [0, 1]");
}

SynthClipParams SynthBackend::params_for(const std::string& clip_id) const {
    SplitMix64 rng(keyed_stream(config_.seed, "params:" + clip_id));
    SynthClipParams p;
    p.kstar = clamp_kstar(std::exp(kLnKMean + kLnKSigma * rng.normal()));
    p.beta = rng.uniform(0.3, 2.5);
    p.alpha = rng.uniform(0.30, 0.50);
    p.rate_density = rng.uniform(0.008, 0.016);
    p.d0 = rng.uniform(43.0, 49.0);
    p.slope = rng.uniform(0.40, 0.60);
    return p;
}

double SynthBackend::effective_kstar(const EncodeJob& job) const {
    const SynthClipParams base = params_for(job.clip.id);
    const ProxyAxis axis = axis_of(job);
    if (axis == ProxyAxis::None) return base.kstar;

    double rho = 0.0;
    switch (axis) {
        case ProxyAxis::P144: rho = config_.corr_144p; break;
        case ProxyAxis::Fast: rho = config_.corr_fast; break;
        case ProxyAxis::H264: rho = config_.corr_h264; break;
        case ProxyAxis::None: break;
    }
    // Gaussian in log space with the original's marginals: correlation rho
    // with the planted k*, identical when rho = 1. The rho = 1 case returns
    // the planted value itself so proxy and original landscapes agree exactly,
    // not just up to exp/log round-trips.
    if (rho >= 1.0) return clamp_kstar(base.kstar);
    SplitMix64 rng(keyed_stream(
        config_.seed, std::string("proxy:") + axis_name(axis) + ":" + job.clip.id));
    const double n = rng.normal();
    const double ln_base = std::log(base.kstar);
    const double ln_proxy = kLnKMean + rho * (ln_base - kLnKMean) +
                            std::sqrt(1.0 - rho * rho) * kLnKSigma * n;
    return clamp_kstar(std::exp(ln_proxy));
}

double SynthBackend::encode_cost_s(Codec codec, Preset preset, int width,
                                   int height, int frames) {
    // Seconds per pixel per frame, anchored so a 150-frame 720p encode costs
    // ~0.3 s and the relative speeds across codecs/presets are realistic.
    double factor = 0.0;
    switch (codec) {
        case Codec::HEVC:
        case Codec::SYNTH:
            factor = (preset == Preset::Fast) ? 2.2e-9 / 3.07 : 2.2e-9;
            break;
        case Codec::VP9:
            factor = (preset == Preset::Fast) ? 5.7e-9 / 1.07 : 5.7e-9;
            break;
        case Codec::H264:
            factor = (preset == Preset::Fast) ? 3.05e-10 : 6.1e-10;
            break;
    }
    return factor * width * height * frames;
}

EncodeResult SynthBackend::encode(const EncodeJob& job) {
    if (job.frames <= 0) throw std::domain_error("frames must be positive");
    if (job.crf < 0 || job.crf > 63) throw std::domain_error("crf out of range");
    SynthClipParams p = params_for(job.clip.id);
    p.kstar = effective_kstar(job);

    const ProxyAxis axis = axis_of(job);
    SynthRd rd = synth_model(p, job.clip.width, job.clip.height, job.crf, job.k);
    rd.rate_kbps *= rate_factor(axis);
    rd.psnr += psnr_offset(axis);

    EncodeResult r;
    r.bitrate_kbps = rd.rate_kbps;
    r.psnr_overall = rd.psnr;
    r.psnr_y = rd.psnr - 0.3;
    r.psnr_u = rd.psnr + 3.2;
    r.psnr_v = rd.psnr + 3.5;
    r.width = job.clip.width;
    r.height = job.clip.height;
    r.wall_time_s =
        encode_cost_s(job.codec, job.preset, job.clip.width, job.clip.height,
                      job.frames);

    // Fixed I/P/B structure: I frames cost 6x a P frame, B frames 0.5x. The
    // per-type "bitrate" is the rate of a stream made of that type alone, so
    // the mixture recombines to the overall bitrate exactly.
    const TypeCounts tc = frame_type_counts(job.frames);
    const double weight_sum = 6.0 * tc.i + 1.0 * tc.p + 0.5 * tc.b;
    auto type_stats = [&](double weight, int count, double psnr_shift) {
        FrameTypeStats s;
        s.avg_bitrate_kbps = r.bitrate_kbps * weight * job.frames / weight_sum;
        s.avg_psnr_y = r.psnr_y + psnr_shift;
        s.avg_psnr_u = r.psnr_u + psnr_shift;
        s.avg_psnr_v = r.psnr_v + psnr_shift;
        s.frame_count = count;
        return s;
    };
    r.per_frame_type["I"] = type_stats(6.0, tc.i, 1.2);
    r.per_frame_type["P"] = type_stats(1.0, tc.p, 0.1);
    if (tc.b > 0) r.per_frame_type["B"] = type_stats(0.5, tc.b, -0.4);

    r.validate();
    return r;
}

ClipRef SynthBackend::downscale(const ClipRef& clip, int target_height) {
    if (target_height <= 0 || target_height > clip.height)
        throw std::domain_error("bad downscale target");
    ClipRef out = clip;
    out.height = target_height;
    // Preserve aspect, snap to even as real scalers do.
    int w = static_cast<int>(std::lround(
        static_cast<double>(clip.width) * target_height / clip.height));
    out.width = (w + 1) & ~1;
    out.path = clip.path + "#p" + std::to_string(target_height);
    out.variant = "p" + std::to_string(target_height);
    return out;
}

std::string SynthBackend::fingerprint() const {
    return "synth-v1:seed=" + std::to_string(config_.seed);
}

}  // namespace lagrange
