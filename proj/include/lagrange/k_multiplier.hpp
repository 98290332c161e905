#pragma once

#include <cmath>
#include <stdexcept>

namespace lagrange {

// Admissible open range for the multiplier.
inline constexpr double kKMin = 0.0;
inline constexpr double kKMax = 6.0;

// Scale factor applied to the codec's default Lagrangian. Valid strictly
// inside (0, 6); construction rejects anything else.
class KMultiplier {
public:
    explicit KMultiplier(double v) : value_(v) {
        if (!std::isfinite(v) || !(v > kKMin) || !(v < kKMax))
            throw std::domain_error("k multiplier must lie in (0, 6), got " +
                                    std::to_string(v));
    }

    double value() const { return value_; }

private:
    double value_;
};

// Candidate k values are snapped to a 1e-3 grid before hitting the encode
// cache, so near-identical optimizer iterates share one encode.
inline double round_k(double k) { return std::round(k * 1000.0) / 1000.0; }

}  // namespace lagrange
