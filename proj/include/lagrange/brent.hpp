#pragma once

#include <functional>
#include <vector>

namespace lagrange {

struct Bracket {
    double lo = 0.0;
    double mid = 0.0;
    double hi = 0.0;
    double f_lo = 0.0;
    double f_mid = 0.0;
    double f_hi = 0.0;
    bool ok = false;
};

struct BrentOptions {
    // Stop once the improvement of the best objective value has stayed below
    // this (absolute, in objective units) for two consecutive accepted points.
    double improvement_tol = 0.05;
    // Stop when the bracketing interval around the minimum shrinks below this.
    double x_tol = 1e-3;
    // Total objective-call budget, bracket probes included.
    int max_evals = 30;
};

struct BrentEval {
    double x = 0.0;
    double f = 0.0;
};

struct BrentResult {
    double x = 0.0;
    double f = 0.0;
    int evals = 0;
    bool converged = false;       // false means the eval budget ran out
    std::vector<BrentEval> trace; // in evaluation order, bracket probes included
};

// Walks the initial triple (lo, mid, hi) outward until f(mid) is strictly
// below both ends: lo steps down geometrically (x0.5), hi steps up (x1.6),
// both clamped to [floor_x, ceil_x]. Every probe lands in trace. Returns
// ok=false when a wall is reached before the middle drops below both ends,
// which on a monotone objective means the minimum sits at the feasible edge.
Bracket bracket_minimum(const std::function<double(double)>& eval, double lo,
                        double mid, double hi, double floor_x, double ceil_x,
                        std::vector<BrentEval>& trace, int max_evals);

// Brent parabolic-interpolation minimization of a unimodal scalar function.
// Termination follows BrentOptions: the improvement rule needs two successive
// new-best acceptances that each gain less than improvement_tol, which rides
// out single flat steps that a one-shot rule mistakes for convergence.
// Non-finite objective values are treated as +inf probes. The trace passed in
// (normally the bracket's probes) counts against max_evals and is carried
// into the result.
BrentResult brent_minimize(const std::function<double(double)>& eval,
                           const Bracket& bracket, const BrentOptions& options,
                           std::vector<BrentEval> trace = {});

}  // namespace lagrange
