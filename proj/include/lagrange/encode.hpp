#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace lagrange {

enum class Codec { HEVC, VP9, H264, SYNTH };
enum class Preset { Default, Fast };

std::string to_string(Codec c);
std::string to_string(Preset p);
Codec codec_from_string(const std::string& s);
Preset preset_from_string(const std::string& s);

// A clip as the backends see it. `variant` is empty for originals and "p144"
// for a downscaled rendition; the id stays that of the source clip so caches
// and synthetic parameter derivation stay keyed to the original.
struct ClipRef {
    std::string id;
    std::string path;
    int width = 0;
    int height = 0;
    int frames = 150;
    double fps = 30.0;
    std::string variant;

    bool is_proxy() const { return !variant.empty(); }
};

// Fully specified encoder invocation. Two jobs with equal key() are the same
// work and may share one cache entry. k is stored already rounded to the
// 1e-3 grid by the optimizer; key() re-rounds defensively.
struct EncodeJob {
    ClipRef clip;
    Codec codec = Codec::SYNTH;
    int crf = 32;
    double k = 1.0;
    Preset preset = Preset::Default;
    int frames = 150;

    std::string key() const;
};

struct FrameTypeStats {
    double avg_bitrate_kbps = 0.0;
    double avg_psnr_y = 0.0;
    double avg_psnr_u = 0.0;
    double avg_psnr_v = 0.0;
    int frame_count = 0;
};

struct BadEncodeResult : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parsed outcome of one encode. per_frame_type keys are limited to
// "I", "P", "B"; a type the encode never produced is simply absent.
// psnr_overall is whatever the backend reported globally, never recomputed
// from the channel values here.
struct EncodeResult {
    double bitrate_kbps = 0.0;
    double psnr_overall = 0.0;
    double psnr_y = 0.0;
    double psnr_u = 0.0;
    double psnr_v = 0.0;
    std::map<std::string, FrameTypeStats> per_frame_type;
    int width = 0;
    int height = 0;
    double wall_time_s = 0.0;
    bool from_cache = false;   // transient, not serialized
    std::string log_text;      // verbatim encoder output; cache stores it as a
                               // sibling .log file, not inside the JSON record

    void validate() const;  // throws BadEncodeResult
};

void to_json(nlohmann::json& j, const ClipRef& c);
void from_json(const nlohmann::json& j, ClipRef& c);
void to_json(nlohmann::json& j, const EncodeJob& job);
void from_json(const nlohmann::json& j, EncodeJob& job);
void to_json(nlohmann::json& j, const FrameTypeStats& s);
void from_json(const nlohmann::json& j, FrameTypeStats& s);
void to_json(nlohmann::json& j, const EncodeResult& r);
void from_json(const nlohmann::json& j, EncodeResult& r);

// Raised when an encoder binary (or scaler) cannot be found at all.
struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when an encode ran but failed or produced unusable output; carries
// the captured process output for audit.
struct EncodeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when k != 1 is requested from a binary that has no multiplier knob.
struct UnsupportedCapability : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Uniform encode interface. Implementations: the synthetic simulator, the
// external process wrappers, and the caching decorator.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual EncodeResult encode(const EncodeJob& job) = 0;

    // Produces (or reuses) a lower-resolution rendition for proxy systems.
    virtual ClipRef downscale(const ClipRef& clip, int target_height) = 0;

    // Distinguishes cache namespaces between backends and their versions.
    virtual std::string fingerprint() const = 0;
};

}  // namespace lagrange
