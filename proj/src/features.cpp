#include "lagrange/features.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lagrange/rng.hpp"

namespace lagrange {
namespace {

const std::vector<std::string> kBaseNames = {
    "overall_bitrate", "overall_psnr", "psnr_y", "psnr_u", "psnr_v",
    "bitrate_i", "bitrate_p", "bitrate_b",
    "psnr_i_y", "psnr_i_u", "psnr_i_v",
    "psnr_p_y", "psnr_p_u", "psnr_p_v",
    "psnr_b_y", "psnr_b_u", "psnr_b_v",
    "height", "width"};

// The 30 products extending the 19 base features to 49. Chosen once and
// frozen: rate-quality interactions, geometry, and per-frame-type couplings.
const std::vector<std::pair<int, int>> kPairs = {
    {0, 1},  {0, 2},  {0, 3},  {0, 4},   // bitrate x each global PSNR
    {17, 18},                            // height x width
    {0, 17}, {0, 18},                    // bitrate x geometry
    {5, 8},  {5, 9},  {5, 10},           // I bitrate x I PSNRs
    {6, 11}, {6, 12}, {6, 13},           // P bitrate x P PSNRs
    {7, 14}, {7, 15}, {7, 16},           // B bitrate x B PSNRs
    {5, 6},  {5, 7},  {6, 7},            // per-type bitrate couplings
    {1, 2},  {1, 3},  {1, 4},            // overall PSNR x channel PSNRs
    {2, 3},  {2, 4},  {3, 4},            // channel PSNR couplings
    {0, 5},  {0, 6},  {0, 7},            // bitrate x per-type bitrates
    {1, 17}, {1, 18}};                   // overall PSNR x geometry

std::vector<std::string> build_names() {
    std::vector<std::string> names = kBaseNames;
    for (const auto& [a, b] : kPairs)
        names.push_back(kBaseNames[a] + "*" + kBaseNames[b]);
    return names;
}

std::string build_version() {
    std::ostringstream os;
    for (const std::string& n : build_names()) os << n << ";";
    std::ostringstream hex;
    hex << std::hex << fnv1a64(os.str());
    return "fo1-" + hex.str();
}

}  // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = build_names();
    return names;
}

const std::vector<std::pair<int, int>>& feature_product_pairs() { return kPairs; }

const std::string& feature_ordering_version() {
    static const std::string v = build_version();
    return v;
}

FeatureVector extract_features(const EncodeResult& encode) {
    encode.validate();
    FeatureVector f;
    f.version = feature_ordering_version();

    auto& v = f.values;
    v[0] = encode.bitrate_kbps;
    v[1] = encode.psnr_overall;
    v[2] = encode.psnr_y;
    v[3] = encode.psnr_u;
    v[4] = encode.psnr_v;

    auto fill_type = [&](const char* type, int bitrate_idx, int psnr_idx) {
        auto it = encode.per_frame_type.find(type);
        if (it == encode.per_frame_type.end() || it->second.frame_count == 0) {
            // Already zeros; record which base features the mask touched.
            f.masked.push_back(kBaseNames[bitrate_idx]);
            f.masked.push_back(kBaseNames[psnr_idx]);
            f.masked.push_back(kBaseNames[psnr_idx + 1]);
            f.masked.push_back(kBaseNames[psnr_idx + 2]);
            return;
        }
        v[bitrate_idx] = it->second.avg_bitrate_kbps;
        v[psnr_idx] = it->second.avg_psnr_y;
        v[psnr_idx + 1] = it->second.avg_psnr_u;
        v[psnr_idx + 2] = it->second.avg_psnr_v;
    };
    fill_type("I", 5, 8);
    fill_type("P", 6, 11);
    fill_type("B", 7, 14);

    v[17] = encode.height;
    v[18] = encode.width;

    int idx = kBaseFeatureCount;
    for (const auto& [a, b] : kPairs) v[idx++] = v[a] * v[b];

    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument("non-finite feature value");
    return f;
}

void to_json(nlohmann::json& j, const FeatureVector& f) {
    j = nlohmann::json{{"version", f.version},
                       {"values", f.values},
                       {"masked", f.masked}};
}

void from_json(const nlohmann::json& j, FeatureVector& f) {
    j.at("version").get_to(f.version);
    const auto& vals = j.at("values");
    if (vals.size() != kFeatureCount)
        throw std::invalid_argument("feature vector must have 49 values");
    for (int i = 0; i < kFeatureCount; ++i) f.values[i] = vals[i].get<double>();
    f.masked = j.value("masked", std::vector<std::string>{});
}

}  // namespace lagrange
