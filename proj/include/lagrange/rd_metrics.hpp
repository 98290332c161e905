#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace lagrange {

// One rate-distortion operating point. Rate in kbit/s (must be positive so its
// log exists), quality as PSNR in dB (must be finite).
struct RdPoint {
    double rate_kbps = 0.0;
    double psnr = 0.0;
};

struct BadCurve : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InfeasibleObjective : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operating points of one encode sweep, ordered by ascending quality.
// Construction enforces monotone RD behaviour: at least 4 points (a cubic fit
// needs 4), strictly increasing quality, strictly increasing rate. Duplicate
// PSNR values are rejected rather than averaged.
class RdCurve {
public:
    explicit RdCurve(std::vector<RdPoint> points, std::string label = {});

    const std::vector<RdPoint>& points() const { return points_; }
    const std::string& label() const { return label_; }
    double min_quality() const { return points_.front().psnr; }
    double max_quality() const { return points_.back().psnr; }

private:
    std::vector<RdPoint> points_;
    std::string label_;
};

// log10(rate) modelled as a cubic in quality:
//   log10(rate) = c[0] + c[1] q + c[2] q^2 + c[3] q^3
struct PolyFit {
    std::array<double, 4> coeffs{};

    double operator()(double quality) const {
        const auto& c = coeffs;
        return ((c[3] * quality + c[2]) * quality + c[1]) * quality + c[0];
    }
};

// Least-squares cubic fit of log10(rate) against quality. With exactly four
// points the fit interpolates them. The solve runs on mean-shifted qualities
// in extended precision to keep the normal equations well conditioned.
PolyFit fit_log_rate_curve(const RdCurve& curve);

struct BdRateResult {
    double bd_rate_percent = 0.0;  // negative = the test curve saves rate
    double overlap_lo = 0.0;       // D_a in dB
    double overlap_hi = 0.0;       // D_b in dB
    bool valid = false;
    std::string reason;            // populated when invalid

    // Reports use "BD-Rate improvement": positive when rate is saved.
    double gain_percent() const { return -bd_rate_percent; }
};

// Quality overlaps narrower than this are refused instead of extrapolated.
inline constexpr double kMinOverlapDb = 0.5;

// Average log10-rate difference of the two fitted cubics over the shared
// quality range [D_a, D_b], integrated analytically (quartic antiderivative)
// and converted to percent: (10^avg - 1) * 100.
BdRateResult bd_rate(const RdCurve& reference, const RdCurve& test);

// The scalar the optimizer minimizes: bd_rate(baseline, k_curve) in percent.
// More negative = better. Throws InfeasibleObjective when the overlap is
// unusable, so a caller can score the evaluation +inf and retreat.
double bd_objective(const RdCurve& k_curve, const RdCurve& baseline);

}  // namespace lagrange
