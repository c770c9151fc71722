// Copyright 2026 The mcwc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MCWC_DETMATH_HPP_
#define MCWC_DETMATH_HPP_

#include <cstdint>

// Transcendental functions built only from IEEE-754 basic operations, so the
// decoder produces identical bits on every conforming platform.
namespace mcwc::det {

double Exp(double x);
double Expm1(double x);
double Log(double x);
double Log1p(double x);
double Sigmoid(double x);
double Tanh(double x);
double Softplus(double x);
double Asinh(double x);

// tanh-approximated GELU and its derivative.
double Gelu(double x);
double GeluGrad(double x);

// sigmoid(b) - sigmoid(a) for b >= a without cancellation in the tails.
double SigmoidDiff(double b, double a);

// IEEE binary16 conversion with round-to-nearest-even.
uint16_t FloatToHalf(float f);
float HalfToFloat(uint16_t h);
inline double RoundToHalf(double v) {
  return HalfToFloat(FloatToHalf(static_cast<float>(v)));
}

}  // namespace mcwc::det

#endif  // MCWC_DETMATH_HPP_
