#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lagrange/encode.hpp"

namespace lagrange {

inline constexpr int kBaseFeatureCount = 19;
inline constexpr int kFeatureCount = 49;

// Base features, in frozen order (see docs/features.md):
//   0 overall_bitrate   1 overall_psnr   2 psnr_y   3 psnr_u   4 psnr_v
//   5 bitrate_i   6 bitrate_p   7 bitrate_b
//   8..10  I-frame PSNR Y/U/V    11..13 P-frame PSNR Y/U/V
//   14..16 B-frame PSNR Y/U/V    17 height   18 width
// Entries 19..48 are the 30 configured pair products listed by
// feature_product_pairs(). The ordering is versioned: models refuse vectors
// from a different ordering.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::string version;
    // Names of base features zeroed because the encode lacked the stats
    // (e.g. no B frames); informational, not part of the vector.
    std::vector<std::string> masked;
};

const std::vector<std::string>& feature_names();               // size 49
const std::vector<std::pair<int, int>>& feature_product_pairs();  // size 30

// FNV-1a hash over the full ordering (names + pair indices); changes when
// the layout changes, freezing model/vector compatibility.
const std::string& feature_ordering_version();

// Deterministic extraction from one proxy encode (the standard pipeline uses
// the CRF 32 encode of the proxy configuration). Missing frame-type stats
// yield zeros plus a mask note rather than NaN.
FeatureVector extract_features(const EncodeResult& encode);

// The operating point whose encode feeds extract_features.
inline constexpr int kFeatureSourceCrf = 32;

void to_json(nlohmann::json& j, const FeatureVector& f);
void from_json(const nlohmann::json& j, FeatureVector& f);

}  // namespace lagrange
