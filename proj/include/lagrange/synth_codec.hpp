#pragma once

#include <cstdint>
#include <string>

#include "lagrange/encode.hpp"

namespace lagrange {

// Closed-form per-clip model parameters, all derived deterministically from
// (corpus seed, clip id). kstar is the planted optimal multiplier.
struct SynthClipParams {
    double kstar = 1.0;         // in [0.3, 4.0]
    double beta = 1.0;          // mispricing penalty, > 0
    double alpha = 0.4;         // RD slope in log10-rate per 5 CRF steps, > 0
    double rate_density = 0.012;  // kbps per pixel at CRF 22
    double d0 = 46.0;           // PSNR at CRF 22, dB
    double slope = 0.5;         // PSNR loss per CRF step, dB

    void validate() const;  // throws std::domain_error on non-positive params
};

// The rate model: R = density * pixels * 10^(-alpha (crf-22)/5), inflated by
// (1 + beta (ln k - ln kstar)^2); PSNR is unaffected by k. Because the
// inflation is constant across CRF, BD-Rate against the k=1 curve has the
// closed form ((1+beta u_k^2)/(1+beta u_1^2) - 1)*100 with u_x = ln x - ln k*,
// minimized exactly at k = kstar.
struct SynthRd {
    double rate_kbps = 0.0;
    double psnr = 0.0;
};
SynthRd synth_model(const SynthClipParams& p, int width, int height, int crf,
                    double k);

// Correlations between the planted k* of the original and each proxy flavour.
// 1.0 makes the proxy landscape identical; lower values degrade it via a
// log-space Gaussian draw with matched marginals.
struct SynthConfig {
    std::uint64_t seed = 20260818;
    double corr_144p = 0.90;
    double corr_fast = 0.97;
    double corr_h264 = 0.75;
};

// Deterministic simulator. Thread-safe: all state is derived per call from
// the seed. wall_time_s in results is simulated (pixels x frames x per-codec
// cost factor), never measured, so speedup arithmetic is exact and tests run
// in microseconds.
class SynthBackend : public EncoderBackend {
public:
    explicit SynthBackend(SynthConfig config = {});

    EncodeResult encode(const EncodeJob& job) override;
    ClipRef downscale(const ClipRef& clip, int target_height) override;
    std::string fingerprint() const override;

    // Oracle access for tests: base parameters and the k* the backend will
    // actually use for a given job's proxy flavour.
    SynthClipParams params_for(const std::string& clip_id) const;
    double effective_kstar(const EncodeJob& job) const;

    // Simulated seconds for one encode under the cost model.
    static double encode_cost_s(Codec codec, Preset preset, int width,
                                int height, int frames);

    const SynthConfig& config() const { return config_; }

private:
    SynthConfig config_;
};

}  // namespace lagrange
