#pragma once

#include <stdexcept>

#include "lagrange/encode.hpp"

namespace lagrange {

// Reference Lagrangian laws as functions of the quantiser Q. These are not
// used to encode anything (the multiplier is threaded through the encoder
// itself); they document the quantities k scales and anchor the simulator's
// behaviour, and tests pin their monotonicity and spot values.
namespace lambda_model {

// Classic H.264-era rule of thumb.
double avc_lambda(double q);

// HEVC per-frame-type laws. Legal Q range [0, 51].
double hevc_lambda_i(double q);
double hevc_lambda_p(double q);
double hevc_lambda_b(double q);

// VP9's RD cost multiplier is proportional to Q^2; the constant is absorbed
// by the codec, so this returns the Q^2 shape with unit scale.
double vp9_lambda(double q);

// lambda_new = k * lambda_orig.
inline double scaled(double lambda_orig, double k) { return k * lambda_orig; }

// Strictly-increasing check over the legal Q range for every frame-type law
// of the codec; throws std::logic_error on violation. Called by tests and at
// simulator start-up as a sanity gate.
void verify_monotone(Codec codec);

}  // namespace lambda_model
}  // namespace lagrange
