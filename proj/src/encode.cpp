#include "lagrange/encode.hpp"

#include <cmath>
#include <sstream>

namespace lagrange {

std::string to_string(Codec c) {
    switch (c) {
        case Codec::HEVC: return "hevc";
        case Codec::VP9: return "vp9";
        case Codec::H264: return "h264";
        case Codec::SYNTH: return "synth";
    }
    return "unknown";
}

std::string to_string(Preset p) {
    return p == Preset::Fast ? "fast" : "default";
}

Codec codec_from_string(const std::string& s) {
    if (s == "hevc" || s == "h265" || s == "x265") return Codec::HEVC;
    if (s == "vp9") return Codec::VP9;
    if (s == "h264" || s == "x264" || s == "avc") return Codec::H264;
    if (s == "synth") return Codec::SYNTH;
    throw std::invalid_argument("unknown codec '" + s + "'");
}

Preset preset_from_string(const std::string& s) {
    if (s == "default") return Preset::Default;
    if (s == "fast" || s == "ultrafast" || s == "rt") return Preset::Fast;
    throw std::invalid_argument("unknown preset '" + s + "'");
}

std::string EncodeJob::key() const {
    // Canonical identity string; hashed by the cache. k lives on a 1e-3 grid
    // so nearby optimizer iterates collapse to one entry.
    const long long k_milli = std::llround(k * 1000.0);
    std::ostringstream os;
    os << "clip=" << clip.id << ";path=" << clip.path << ";res=" << clip.width
       << "x" << clip.height << ";variant=" << clip.variant
       << ";codec=" << to_string(codec) << ";crf=" << crf << ";k=" << k_milli
       << ";preset=" << to_string(preset) << ";frames=" << frames;
    return os.str();
}

void EncodeResult::validate() const {
    auto fail = [](const std::string& what) { throw BadEncodeResult(what); };
    if (!(bitrate_kbps > 0.0) || !std::isfinite(bitrate_kbps))
        fail("bitrate must be finite and positive");
    for (double v : {psnr_overall, psnr_y, psnr_u, psnr_v})
        if (!std::isfinite(v)) fail("PSNR values must be finite");
    if (width <= 0 || height <= 0) fail("dimensions must be positive");
    if (!(wall_time_s >= 0.0)) fail("wall time must be non-negative");
    for (const auto& [type, stats] : per_frame_type) {
        if (type != "I" && type != "P" && type != "B")
            fail("unknown frame type '" + type + "'");
        if (stats.frame_count < 0) fail("negative frame count for " + type);
        if (stats.frame_count > 0 &&
            (!(stats.avg_bitrate_kbps > 0.0) ||
             !std::isfinite(stats.avg_psnr_y) || !std::isfinite(stats.avg_psnr_u) ||
             !std::isfinite(stats.avg_psnr_v)))
            fail("bad per-frame-type stats for " + type);
    }
}

void to_json(nlohmann::json& j, const ClipRef& c) {
    j = nlohmann::json{{"id", c.id},         {"path", c.path},
                       {"width", c.width},   {"height", c.height},
                       {"frames", c.frames}, {"fps", c.fps},
                       {"variant", c.variant}};
}

void from_json(const nlohmann::json& j, ClipRef& c) {
    j.at("id").get_to(c.id);
    j.at("path").get_to(c.path);
    j.at("width").get_to(c.width);
    j.at("height").get_to(c.height);
    j.at("frames").get_to(c.frames);
    c.fps = j.value("fps", 30.0);
    c.variant = j.value("variant", std::string{});
}

void to_json(nlohmann::json& j, const EncodeJob& job) {
    j = nlohmann::json{{"clip", job.clip},
                       {"codec", to_string(job.codec)},
                       {"crf", job.crf},
                       {"k", job.k},
                       {"preset", to_string(job.preset)},
                       {"frames", job.frames}};
}

void from_json(const nlohmann::json& j, EncodeJob& job) {
    j.at("clip").get_to(job.clip);
    job.codec = codec_from_string(j.at("codec").get<std::string>());
    j.at("crf").get_to(job.crf);
    j.at("k").get_to(job.k);
    job.preset = preset_from_string(j.at("preset").get<std::string>());
    j.at("frames").get_to(job.frames);
}

void to_json(nlohmann::json& j, const FrameTypeStats& s) {
    j = nlohmann::json{{"avg_bitrate_kbps", s.avg_bitrate_kbps},
                       {"avg_psnr_y", s.avg_psnr_y},
                       {"avg_psnr_u", s.avg_psnr_u},
                       {"avg_psnr_v", s.avg_psnr_v},
                       {"frame_count", s.frame_count}};
}

void from_json(const nlohmann::json& j, FrameTypeStats& s) {
    j.at("avg_bitrate_kbps").get_to(s.avg_bitrate_kbps);
    j.at("avg_psnr_y").get_to(s.avg_psnr_y);
    j.at("avg_psnr_u").get_to(s.avg_psnr_u);
    j.at("avg_psnr_v").get_to(s.avg_psnr_v);
    s.frame_count = j.value("frame_count", 0);
}

void to_json(nlohmann::json& j, const EncodeResult& r) {
    j = nlohmann::json{{"bitrate_kbps", r.bitrate_kbps},
                       {"psnr_overall", r.psnr_overall},
                       {"psnr_y", r.psnr_y},
                       {"psnr_u", r.psnr_u},
                       {"psnr_v", r.psnr_v},
                       {"per_frame_type", r.per_frame_type},
                       {"width", r.width},
                       {"height", r.height},
                       {"wall_time_s", r.wall_time_s}};
}

void from_json(const nlohmann::json& j, EncodeResult& r) {
    j.at("bitrate_kbps").get_to(r.bitrate_kbps);
    j.at("psnr_overall").get_to(r.psnr_overall);
    j.at("psnr_y").get_to(r.psnr_y);
    j.at("psnr_u").get_to(r.psnr_u);
    j.at("psnr_v").get_to(r.psnr_v);
    j.at("per_frame_type").get_to(r.per_frame_type);
    j.at("width").get_to(r.width);
    j.at("height").get_to(r.height);
    j.at("wall_time_s").get_to(r.wall_time_s);
    r.from_cache = false;
}

}  // namespace lagrange
