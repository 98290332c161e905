#include "lagrange/rd_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>

namespace lagrange {
namespace {

// Solves the 4x4 system A x = b in place. Partial pivoting; A comes from
// normal equations on mean-shifted data so it is symmetric positive definite
// unless the quality values are degenerate.
std::array<long double, 4> solve4(std::array<std::array<long double, 4>, 4> a,
                                  std::array<long double, 4> b) {
    for (std::size_t col = 0; col < 4; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 4; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        if (a[col][col] == 0.0L) throw BadCurve("singular normal equations");
        for (std::size_t r = col + 1; r < 4; ++r) {
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<long double, 4> x{};
    for (std::size_t i = 4; i-- > 0;) {
        long double s = b[i];
        for (std::size_t c = i + 1; c < 4; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

// Antiderivative of the quartic obtained by integrating a cubic: evaluates
// c0 q + c1 q^2/2 + c2 q^3/3 + c3 q^4/4 at q.
long double cubic_integral_at(const std::array<long double, 4>& c, long double q) {
    return q * (c[0] + q * (c[1] / 2.0L + q * (c[2] / 3.0L + q * c[3] / 4.0L)));
}

}  // namespace

RdCurve::RdCurve(std::vector<RdPoint> points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
    if (points_.size() < 4) {
        std::ostringstream msg;
        msg << "curve '" << label_ << "' has " << points_.size()
            << " points, need at least 4";
        throw BadCurve(msg.str());
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const RdPoint& p = points_[i];
        if (!(p.rate_kbps > 0.0) || !std::isfinite(p.rate_kbps)) {
            std::ostringstream msg;
            msg << "curve '" << label_ << "' point " << i << " has rate "
                << p.rate_kbps << ", must be finite and positive";
            throw BadCurve(msg.str());
        }
        if (!std::isfinite(p.psnr)) {
            std::ostringstream msg;
            msg << "curve '" << label_ << "' point " << i << " has non-finite quality";
            throw BadCurve(msg.str());
        }
        if (i > 0) {
            if (!(p.psnr > points_[i - 1].psnr)) {
                std::ostringstream msg;
                msg << "curve '" << label_ << "' quality not strictly increasing at point "
                    << i << " (" << points_[i - 1].psnr << " -> " << p.psnr << ")";
                throw BadCurve(msg.str());
            }
            if (!(p.rate_kbps > points_[i - 1].rate_kbps)) {
                std::ostringstream msg;
                msg << "curve '" << label_ << "' rate not strictly increasing at point "
                    << i << " (" << points_[i - 1].rate_kbps << " -> " << p.rate_kbps
                    << ")";
                throw BadCurve(msg.str());
            }
        }
    }
}

PolyFit fit_log_rate_curve(const RdCurve& curve) {
    const auto& pts = curve.points();
    const std::size_t n = pts.size();

    long double mean_q = 0.0L;
    for (const RdPoint& p : pts) mean_q += p.psnr;
    mean_q /= static_cast<long double>(n);

    // Normal equations for the cubic in u = q - mean_q. Moments up to u^6.
    std::array<long double, 7> m{};
    std::array<long double, 4> rhs{};
    for (const RdPoint& p : pts) {
        const long double u = static_cast<long double>(p.psnr) - mean_q;
        const long double y = std::log10(static_cast<long double>(p.rate_kbps));
        long double upow = 1.0L;
        for (std::size_t d = 0; d < 7; ++d) {
            m[d] += upow;
            if (d < 4) rhs[d] += upow * y;
            upow *= u;
        }
    }
    std::array<std::array<long double, 4>, 4> a{};
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) a[r][c] = m[r + c];

    const std::array<long double, 4> cs = solve4(a, rhs);

    // Expand sum cs[j] (q - mean_q)^j back to raw powers of q.
    const long double s = -mean_q;
    std::array<long double, 4> raw{};
    // binomial coefficients for j = 0..3
    raw[0] = cs[0] + cs[1] * s + cs[2] * s * s + cs[3] * s * s * s;
    raw[1] = cs[1] + 2.0L * cs[2] * s + 3.0L * cs[3] * s * s;
    raw[2] = cs[2] + 3.0L * cs[3] * s;
    raw[3] = cs[3];

    PolyFit fit;
    for (std::size_t i = 0; i < 4; ++i) fit.coeffs[i] = static_cast<double>(raw[i]);
    return fit;
}

BdRateResult bd_rate(const RdCurve& reference, const RdCurve& test) {
    BdRateResult out;
    out.overlap_lo = std::max(reference.min_quality(), test.min_quality());
    out.overlap_hi = std::min(reference.max_quality(), test.max_quality());
    if (!(out.overlap_hi - out.overlap_lo >= kMinOverlapDb)) {
        std::ostringstream msg;
        msg << "quality overlap [" << out.overlap_lo << ", " << out.overlap_hi
            << "] narrower than " << kMinOverlapDb << " dB";
        out.reason = msg.str();
        return out;
    }

    const PolyFit fit_ref = fit_log_rate_curve(reference);
    const PolyFit fit_test = fit_log_rate_curve(test);

    std::array<long double, 4> diff{};
    for (std::size_t i = 0; i < 4; ++i)
        diff[i] = static_cast<long double>(fit_test.coeffs[i]) -
                  static_cast<long double>(fit_ref.coeffs[i]);

    const long double lo = out.overlap_lo;
    const long double hi = out.overlap_hi;
    const long double avg =
        (cubic_integral_at(diff, hi) - cubic_integral_at(diff, lo)) / (hi - lo);

    out.bd_rate_percent =
        static_cast<double>((std::pow(10.0L, avg) - 1.0L) * 100.0L);
    out.valid = true;
    return out;
}

double bd_objective(const RdCurve& k_curve, const RdCurve& baseline) {
    const BdRateResult r = bd_rate(baseline, k_curve);
    if (!r.valid) throw InfeasibleObjective(r.reason);
    return r.bd_rate_percent;
}

}  // namespace lagrange
