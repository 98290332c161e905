#include "lagrange/lambda_model.hpp"

#include <algorithm>
#include <cmath>

namespace lagrange {
namespace lambda_model {
namespace {

double pow2_q(double q) { return std::pow(2.0, (q - 12.0) / 3.0); }

}  // namespace

double avc_lambda(double q) { return 0.85 * q * q; }

double hevc_lambda_i(double q) { return 0.57 * pow2_q(q); }

double hevc_lambda_p(double q) { return 0.85 * pow2_q(q); }

double hevc_lambda_b(double q) {
    const double level = std::max(2.0, std::min(4.0, (q - 12.0) / 6.0));
    return 0.68 * level * pow2_q(q);
}

double vp9_lambda(double q) { return q * q; }

void verify_monotone(Codec codec) {
    auto check = [](double (*f)(double), double lo, double hi, const char* name) {
        double prev = f(lo);
        if (!(prev > 0.0)) throw std::logic_error(std::string(name) + " not positive");
        for (double q = lo + 0.5; q <= hi; q += 0.5) {
            const double cur = f(q);
            if (!(cur > prev))
                throw std::logic_error(std::string(name) + " not strictly increasing");
            prev = cur;
        }
    };
    switch (codec) {
        case Codec::HEVC:
        case Codec::SYNTH:
            check(&hevc_lambda_i, 1.0, 51.0, "lambda_I");
            check(&hevc_lambda_p, 1.0, 51.0, "lambda_P");
            check(&hevc_lambda_b, 1.0, 51.0, "lambda_B");
            break;
        case Codec::VP9:
            check(&vp9_lambda, 1.0, 63.0, "vp9 lambda");
            break;
        case Codec::H264:
            check(&avc_lambda, 1.0, 51.0, "avc lambda");
            break;
    }
}

}  // namespace lambda_model
}  // namespace lagrange
