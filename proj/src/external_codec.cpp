#include "lagrange/external_codec.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include "lagrange/sha256.hpp"
#include "lagrange/subprocess.hpp"
#include "lagrange/y4m.hpp"

namespace fs = std::filesystem;

namespace lagrange {
namespace {

std::string replace_all_of(std::string s, const std::string& from,
                           const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::string format_k(double k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", k);
    return buf;
}

std::string expand(const std::string& tmpl, const EncodeJob& job,
                   const std::string& output) {
    std::string s = tmpl;
    s = replace_all_of(s, "{input}", job.clip.path);
    s = replace_all_of(s, "{output}", output);
    s = replace_all_of(s, "{crf}", std::to_string(job.crf));
    s = replace_all_of(s, "{frames}", std::to_string(job.frames));
    s = replace_all_of(s, "{k}", format_k(job.k));
    return s;
}

double to_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

}  // namespace

EncodeResult parse_x265_log(const std::string& log) {
    EncodeResult r;
    // Per-frame-type summaries, e.g.
    //   x265 [info]: frame I:      5, Avg QP:27.42  kb/s: 6214.40  PSNR Mean: Y:43.271 U:45.247 V:45.590
    static const std::regex type_re(
        R"(frame\s+([IPB]):\s*(\d+),\s*Avg QP:[0-9.]+\s+kb/s:\s*([0-9.]+)\s+PSNR Mean:\s*Y:([0-9.]+)\s+U:([0-9.]+)\s+V:([0-9.]+))");
    for (std::sregex_iterator it(log.begin(), log.end(), type_re), end;
         it != end; ++it) {
        FrameTypeStats s;
        s.frame_count = std::stoi((*it)[2]);
        s.avg_bitrate_kbps = to_double((*it)[3]);
        s.avg_psnr_y = to_double((*it)[4]);
        s.avg_psnr_u = to_double((*it)[5]);
        s.avg_psnr_v = to_double((*it)[6]);
        if (s.frame_count > 0) r.per_frame_type[(*it)[1]] = s;
    }
    //   x265 [info]: PSNR Mean: Y:40.876, U:44.498, V:44.836, Global PSNR: 41.662
    static const std::regex global_re(
        R"(PSNR Mean:\s*Y:([0-9.]+),\s*U:([0-9.]+),\s*V:([0-9.]+),\s*Global PSNR:\s*([0-9.]+))");
    //   encoded 150 frames in 5.45s (27.52 fps), 1044.23 kb/s, Avg QP:31.15
    static const std::regex rate_re(
        R"(encoded\s+\d+\s+frames\s+in\s+[0-9.]+s\s+\([0-9.]+\s+fps\),\s*([0-9.]+)\s+kb/s)");
    std::smatch m;
    if (!std::regex_search(log, m, global_re))
        throw EncodeFailure("x265 log missing global PSNR summary");
    r.psnr_y = to_double(m[1]);
    r.psnr_u = to_double(m[2]);
    r.psnr_v = to_double(m[3]);
    r.psnr_overall = to_double(m[4]);
    if (!std::regex_search(log, m, rate_re))
        throw EncodeFailure("x265 log missing bitrate summary");
    r.bitrate_kbps = to_double(m[1]);
    return r;
}

EncodeResult parse_x264_log(const std::string& log) {
    EncodeResult r;
    //   x264 [info]: frame I:5     Avg QP:20.87  size:114689  PSNR Mean Y:45.12 U:49.33 V:49.21 Avg:46.01 Global:45.89
    static const std::regex type_re(
        R"(frame\s+([IPB]):(\d+)\s+Avg QP:\s*[0-9.]+\s+size:\s*(\d+)(?:\s+PSNR Mean Y:([0-9.]+)\s+U:([0-9.]+)\s+V:([0-9.]+))?)");
    // Frame sizes are bytes/frame; per-type "bitrate" needs fps, recovered
    // from the final summary line below, so stash raw sizes first.
    struct Raw {
        int count;
        double size_bytes;
        double y, u, v;
        bool have_psnr;
    };
    std::map<std::string, Raw> raw;
    for (std::sregex_iterator it(log.begin(), log.end(), type_re), end;
         it != end; ++it) {
        Raw w{};
        w.count = std::stoi((*it)[2]);
        w.size_bytes = to_double((*it)[3]);
        w.have_psnr = (*it)[4].matched;
        if (w.have_psnr) {
            w.y = to_double((*it)[4]);
            w.u = to_double((*it)[5]);
            w.v = to_double((*it)[6]);
        }
        if (w.count > 0) raw[(*it)[1]] = w;
    }
    //   x264 [info]: PSNR Mean Y:41.23 U:45.67 V:45.89 Avg:42.11 Global:41.98 kb/s:1044.55
    static const std::regex global_re(
        R"(PSNR Mean Y:([0-9.]+)\s+U:([0-9.]+)\s+V:([0-9.]+)\s+Avg:([0-9.]+)\s+Global:([0-9.]+)\s+kb/s:([0-9.]+))");
    std::smatch m;
    if (!std::regex_search(log, m, global_re))
        throw EncodeFailure("x264 log missing PSNR/bitrate summary");
    r.psnr_y = to_double(m[1]);
    r.psnr_u = to_double(m[2]);
    r.psnr_v = to_double(m[3]);
    r.psnr_overall = to_double(m[5]);
    r.bitrate_kbps = to_double(m[6]);
    //   encoded 150 frames, 45.67 fps, 1044.55 kb/s
    static const std::regex fps_re(R"(encoded\s+\d+\s+frames,\s*([0-9.]+)\s+fps)");
    double fps = 0.0;
    if (std::regex_search(log, m, fps_re)) fps = to_double(m[1]);
    // x264 reports encoding fps, not content fps; content fps is what converts
    // frame size to rate. Recover it from the global numbers instead: total
    // kb/s corresponds to the mixture of per-type sizes.
    double weighted_bytes = 0.0;
    int total_frames = 0;
    for (const auto& [t, w] : raw) {
        weighted_bytes += w.size_bytes * w.count;
        total_frames += w.count;
    }
    if (total_frames > 0 && weighted_bytes > 0.0) {
        const double content_fps =
            r.bitrate_kbps * 1000.0 * total_frames / (8.0 * weighted_bytes);
        for (const auto& [t, w] : raw) {
            FrameTypeStats s;
            s.frame_count = w.count;
            s.avg_bitrate_kbps = w.size_bytes * 8.0 * content_fps / 1000.0;
            if (w.have_psnr) {
                s.avg_psnr_y = w.y;
                s.avg_psnr_u = w.u;
                s.avg_psnr_v = w.v;
            } else {
                s.avg_psnr_y = r.psnr_y;
                s.avg_psnr_u = r.psnr_u;
                s.avg_psnr_v = r.psnr_v;
            }
            r.per_frame_type[t] = s;
        }
    }
    (void)fps;
    return r;
}

EncodeResult parse_vpx_log(const std::string& log, std::uintmax_t output_bytes,
                           int frames, double fps) {
    EncodeResult r;
    //   PSNR (Overall/Avg/Y/U/V)   40.123 39.876 39.432 44.123 44.567
    static const std::regex psnr_re(
        R"(PSNR \(Overall/Avg/Y/U/V\)\s+([0-9.]+)\s+([0-9.]+)\s+([0-9.]+)\s+([0-9.]+)\s+([0-9.]+))");
    std::smatch m;
    if (!std::regex_search(log, m, psnr_re))
        throw EncodeFailure("vpxenc log missing PSNR summary");
    r.psnr_overall = to_double(m[1]);
    r.psnr_y = to_double(m[3]);
    r.psnr_u = to_double(m[4]);
    r.psnr_v = to_double(m[5]);
    if (frames <= 0 || fps <= 0.0 || output_bytes == 0)
        throw EncodeFailure("vpxenc rate derivation needs output size, frames, fps");
    r.bitrate_kbps = static_cast<double>(output_bytes) * 8.0 * fps /
                     (static_cast<double>(frames) * 1000.0);
    // vpxenc prints no per-frame-type breakdown; downstream feature masking
    // treats the absent entries as zeros.
    return r;
}

ExternalBackend::ExternalBackend(ToolchainConfig config)
    : config_(std::move(config)) {
    if (config_.work_dir.empty()) {
        config_.work_dir =
            (fs::temp_directory_path() / "lagrange-encodes").string();
    }
    if (config_.scale_dir.empty()) config_.scale_dir = config_.work_dir;
    fs::create_directories(config_.work_dir);
    fs::create_directories(config_.scale_dir);
}

std::string ExternalBackend::binary_name(Codec codec) const {
    switch (codec) {
        case Codec::HEVC: return config_.x265_bin;
        case Codec::VP9: return config_.vpx_bin;
        case Codec::H264: return config_.x264_bin;
        case Codec::SYNTH: break;
    }
    throw std::invalid_argument("external backend has no synthetic codec");
}

std::string ExternalBackend::resolve_binary(Codec codec) {
    const std::string name = binary_name(codec);
    std::lock_guard lock(mu_);
    if (auto it = found_.find(name); it != found_.end()) return it->second;
    const auto path = find_executable(name);
    if (!path)
        throw BackendUnavailable("encoder binary not found: " + name);
    found_[name] = *path;
    return *path;
}

bool ExternalBackend::supports_k(Codec codec) {
    if (config_.assume_k_support) return true;
    const std::string path = resolve_binary(codec);
    std::lock_guard lock(mu_);
    if (auto it = k_support_.find(path); it != k_support_.end())
        return it->second;
    // The flag name is the first token of k_flag, e.g. "--lambda-scale".
    const std::string flag = config_.k_flag.substr(0, config_.k_flag.find(' '));
    RunResult help = run_command({path, "--fullhelp"});
    if (help.output.find(flag) == std::string::npos)
        help = run_command({path, "--help"});
    const bool ok = help.output.find(flag) != std::string::npos;
    k_support_[path] = ok;
    return ok;
}

EncodeResult ExternalBackend::encode(const EncodeJob& job) {
    const std::string bin = resolve_binary(job.codec);
    const bool wants_k = std::abs(job.k - 1.0) >= 5e-4;
    if (wants_k && !supports_k(job.codec))
        throw UnsupportedCapability("binary " + bin +
                                    " lacks the k multiplier flag; only k=1 runs");

    std::string args_tmpl;
    std::string fast_flags;
    std::string suffix;
    switch (job.codec) {
        case Codec::HEVC:
            args_tmpl = config_.x265_args;
            fast_flags = config_.x265_fast;
            suffix = ".mp4";
            break;
        case Codec::VP9:
            args_tmpl = config_.vpx_args;
            fast_flags = config_.vpx_fast;
            suffix = ".mkv";
            break;
        case Codec::H264:
            args_tmpl = config_.x264_args;
            fast_flags = config_.x264_fast;
            suffix = ".mkv";
            break;
        case Codec::SYNTH:
            throw std::invalid_argument("external backend has no synthetic codec");
    }

    const std::string out_name =
        sha256_hex(job.key()).substr(0, 16) + suffix;
    const std::string out_path = (fs::path(config_.work_dir) / out_name).string();

    std::string cmdline = expand(args_tmpl, job, out_path);
    if (job.preset == Preset::Fast && !fast_flags.empty())
        cmdline += " " + fast_flags;
    if (wants_k) cmdline += " " + expand(config_.k_flag, job, out_path);

    std::vector<std::string> argv{bin};
    for (auto& tok : split_command(cmdline)) argv.push_back(tok);

    const RunResult run = run_command(argv);
    if (run.exit_code != 0) {
        std::error_code ec;
        fs::remove(out_path, ec);
        std::ostringstream msg;
        msg << bin << " exited " << run.exit_code << "\n" << run.output;
        throw EncodeFailure(msg.str());
    }

    EncodeResult r;
    switch (job.codec) {
        case Codec::HEVC: r = parse_x265_log(run.output); break;
        case Codec::H264: r = parse_x264_log(run.output); break;
        case Codec::VP9: {
            std::error_code ec;
            const auto bytes = fs::file_size(out_path, ec);
            if (ec) throw EncodeFailure("vpxenc output missing: " + out_path);
            r = parse_vpx_log(run.output, bytes, job.frames, job.clip.fps);
            break;
        }
        case Codec::SYNTH: break;
    }
    r.width = job.clip.width;
    r.height = job.clip.height;
    r.wall_time_s = run.wall_time_s;
    r.log_text = run.output;
    if (!config_.keep_outputs) {
        std::error_code ec;
        fs::remove(out_path, ec);
    }
    r.validate();
    return r;
}

ClipRef ExternalBackend::downscale(const ClipRef& clip, int target_height) {
    const auto ffmpeg = find_executable(config_.ffmpeg_bin);
    if (!ffmpeg)
        throw BackendUnavailable("scaler binary not found: " + config_.ffmpeg_bin);

    const std::string stem =
        sha256_hex(clip.id + "|" + clip.path).substr(0, 16);
    const std::string out_path =
        (fs::path(config_.scale_dir) /
         (stem + "_p" + std::to_string(target_height) + ".y4m"))
            .string();

    ClipRef out = clip;
    out.path = out_path;
    out.variant = "p" + std::to_string(target_height);

    // Reuse an existing rendition when its header checks out.
    {
        std::lock_guard lock(mu_);
        if (fs::exists(out_path)) {
            if (const auto info = probe_y4m(out_path, true);
                info && info->frames >= clip.frames) {
                out.width = info->width;
                out.height = info->height;
                return out;
            }
            fs::remove(out_path);
        }
    }

    const RunResult run = run_command(
        {*ffmpeg, "-y", "-hide_banner", "-loglevel", "error", "-i", clip.path,
         "-vf", "scale=-2:" + std::to_string(target_height) + ":flags=bicubic",
         "-pix_fmt", "yuv420p", out_path});
    if (run.exit_code != 0)
        throw EncodeFailure("scaler failed:\n" + run.output);

    const auto info = probe_y4m(out_path, true);
    if (!info || info->frames < clip.frames) {
        std::error_code ec;
        fs::remove(out_path, ec);
        std::ostringstream msg;
        msg << "downscaled rendition at " << out_path << " has "
            << (info ? info->frames : 0) << " frames, need " << clip.frames;
        throw EncodeFailure(msg.str());
    }
    out.width = info->width;
    out.height = info->height;
    return out;
}

std::string ExternalBackend::fingerprint() const {
    // Binary identity matters for cache correctness: mtime+size changes when
    // a binary is swapped, without the cost of running --version per job.
    std::ostringstream os;
    os << "ext-v1";
    for (const std::string& name :
         {config_.x265_bin, config_.vpx_bin, config_.x264_bin}) {
        const auto path = find_executable(name);
        os << ";" << name << "=";
        if (!path) {
            os << "absent";
            continue;
        }
        std::error_code ec;
        const auto size = fs::file_size(*path, ec);
        const auto mtime = fs::last_write_time(*path, ec);
        os << size << ":"
           << std::chrono::duration_cast<std::chrono::seconds>(
                  mtime.time_since_epoch())
                  .count();
    }
    return os.str();
}

}  // namespace lagrange
