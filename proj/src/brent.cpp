#include "lagrange/brent.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace lagrange {
namespace {

constexpr double kGold = 0.3819660112501051;  // 2 - golden ratio

double probe(const std::function<double(double)>& eval, double x,
             std::vector<BrentEval>& trace) {
    double f = eval(x);
    if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
    trace.push_back({x, f});
    return f;
}

}  // namespace

Bracket bracket_minimum(const std::function<double(double)>& eval, double lo,
                        double mid, double hi, double floor_x, double ceil_x,
                        std::vector<BrentEval>& trace, int max_evals) {
    Bracket b;
    b.lo = lo;
    b.mid = mid;
    b.hi = hi;
    b.f_lo = probe(eval, b.lo, trace);
    b.f_mid = probe(eval, b.mid, trace);
    b.f_hi = probe(eval, b.hi, trace);

    while (static_cast<int>(trace.size()) < max_evals) {
        if (b.f_mid < b.f_lo && b.f_mid < b.f_hi) {
            b.ok = true;
            return b;
        }
        if (b.f_lo <= b.f_hi) {
            if (b.lo <= floor_x) return b;  // wall, minimum at the edge
            b.hi = b.mid;
            b.f_hi = b.f_mid;
            b.mid = b.lo;
            b.f_mid = b.f_lo;
            b.lo = std::max(floor_x, b.lo * 0.5);
            b.f_lo = probe(eval, b.lo, trace);
        } else {
            if (b.hi >= ceil_x) return b;
            b.lo = b.mid;
            b.f_lo = b.f_mid;
            b.mid = b.hi;
            b.f_mid = b.f_hi;
            b.hi = std::min(ceil_x, b.hi * 1.6);
            b.f_hi = probe(eval, b.hi, trace);
        }
    }
    return b;  // budget exhausted without a bracket
}

BrentResult brent_minimize(const std::function<double(double)>& eval,
                           const Bracket& bracket, const BrentOptions& options,
                           std::vector<BrentEval> trace) {
    BrentResult res;
    res.trace = std::move(trace);

    double a = std::min(bracket.lo, bracket.hi);
    double b = std::max(bracket.lo, bracket.hi);
    double x = bracket.mid, w = bracket.mid, v = bracket.mid;
    double fx = bracket.f_mid, fw = bracket.f_mid, fv = bracket.f_mid;
    double d = 0.0, e = 0.0;

    // Counts consecutive accepted improvements below tolerance. Two in a row
    // means the landscape is flat around the minimum, not just one lucky step.
    int small_streak = 0;

    const double tol1 = options.x_tol;
    const double tol2 = 2.0 * tol1;

    while (static_cast<int>(res.trace.size()) < options.max_evals) {
        const double xm = 0.5 * (a + b);
        if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) {
            res.converged = true;
            break;
        }

        bool golden = true;
        if (std::fabs(e) > tol1) {
            // Trial parabola through x, w, v.
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double etemp = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) &&
                p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2)
                    d = std::copysign(tol1, xm - x);
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? a - x : b - x;
            d = kGold * e;
        }

        const double u = (std::fabs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
        const double fu = probe(eval, u, res.trace);

        if (fu <= fx) {
            const double gain = fx - fu;
            small_streak = (gain < options.improvement_tol) ? small_streak + 1 : 0;
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
            if (small_streak >= 2) {
                res.converged = true;
                break;
            }
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }

    res.x = x;
    res.f = fx;
    res.evals = static_cast<int>(res.trace.size());
    return res;
}

}  // namespace lagrange
