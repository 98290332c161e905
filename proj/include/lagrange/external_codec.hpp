#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "lagrange/encode.hpp"

namespace lagrange {

// Invocation templates for the external encoders. Placeholders {input},
// {output}, {crf}, {frames}, {k} are substituted per job. The defaults mirror
// the documented reference invocations; any of them can be overridden for a
// local toolchain.
//
// The k contract: a patched binary accepts `--lambda-scale <k>` scaling its
// internal Lagrangian. Stock binaries work at k=1 only; requesting k != 1
// from an unpatched binary raises UnsupportedCapability after a one-time
// help-text probe.
struct ToolchainConfig {
    std::string x265_bin = "x265";
    std::string vpx_bin = "vpxenc";
    std::string x264_bin = "x264";
    std::string ffmpeg_bin = "ffmpeg";

    std::string x265_args =
        "--input {input} --crf {crf} --tune psnr --psnr --frames {frames} "
        "--output {output}";
    std::string vpx_args =
        "-p 1 --end-usage=vbr --cq-level {crf} --tune=psnr --psnr "
        "--limit={frames} -o {output} {input}";
    std::string x264_args =
        "--frames {frames} --tune psnr --psnr --crf {crf} -o {output} {input}";

    std::string x265_fast = "--preset ultrafast";
    std::string vpx_fast = "--rt";
    std::string x264_fast = "--preset ultrafast";

    std::string k_flag = "--lambda-scale {k}";

    std::string work_dir;    // encoded outputs; empty = create under tmp
    std::string scale_dir;   // downscaled rendition cache; empty = work_dir
    bool keep_outputs = false;
    // Trust that the binaries accept k_flag without probing --help first.
    bool assume_k_support = false;
};

// Log parsers, exposed for fixture-based tests. Each fills rates, PSNRs and
// per-frame-type stats from the encoder's own summary output; the caller
// completes dimensions and wall time. They throw EncodeFailure when the
// expected summary lines are absent.
EncodeResult parse_x265_log(const std::string& log);
EncodeResult parse_x264_log(const std::string& log);
// vpxenc reports PSNR but no rate summary; the rate is derived from the
// output size: bytes * 8 * fps / frames / 1000.
EncodeResult parse_vpx_log(const std::string& log, std::uintmax_t output_bytes,
                           int frames, double fps);

class ExternalBackend : public EncoderBackend {
public:
    explicit ExternalBackend(ToolchainConfig config = {});

    EncodeResult encode(const EncodeJob& job) override;
    ClipRef downscale(const ClipRef& clip, int target_height) override;
    std::string fingerprint() const override;

    // True when the resolved binary for this codec advertises the k flag.
    bool supports_k(Codec codec);

    const ToolchainConfig& config() const { return config_; }

private:
    std::string resolve_binary(Codec codec);
    std::string binary_name(Codec codec) const;

    ToolchainConfig config_;
    std::mutex mu_;
    std::map<std::string, bool> k_support_;     // binary path -> probed support
    std::map<std::string, std::string> found_;  // name -> resolved path
};

}  // namespace lagrange
