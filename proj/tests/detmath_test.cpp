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

#include "mcwc/detmath.hpp"

#include <cmath>

#include "test_util.hpp"

namespace mcwc {
namespace {

TEST(DetMath, AgreesWithLibm) {
  Rng rng(1);
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.Uniform(-30.0, 30.0);
    EXPECT_NEAR(det::Exp(x), std::exp(x), 1e-13 * std::exp(x));
    EXPECT_NEAR(det::Tanh(x), std::tanh(x), 1e-13);
    EXPECT_NEAR(det::Sigmoid(x), 1.0 / (1.0 + std::exp(-x)), 1e-14);
    EXPECT_NEAR(det::Softplus(x), std::log1p(std::exp(x)), 1e-12 * (1 + std::abs(x)));
    EXPECT_NEAR(det::Asinh(x), std::asinh(x), 1e-13 * (1 + std::abs(x)));
    const double y = rng.Uniform(1e-6, 1e6);
    EXPECT_NEAR(det::Log(y), std::log(y), 1e-13 * (1 + std::abs(std::log(y))));
  }
}

TEST(DetMath, SigmoidDifferenceIsAccurateInTails) {
  EXPECT_NEAR(det::SigmoidDiff(0.5, -0.5), 0.24491866240370913, 1e-15);
  const double far = det::SigmoidDiff(40.5, 39.5);
  EXPECT_GT(far, 0.0);
  EXPECT_NEAR(far / (std::exp(-39.5) - std::exp(-40.5)), 1.0, 1e-6);
}

TEST(DetMath, HalfPrecision) {
  EXPECT_EQ(det::HalfToFloat(det::FloatToHalf(1.0f)), 1.0f);
  EXPECT_EQ(det::HalfToFloat(det::FloatToHalf(-2.5f)), -2.5f);
  EXPECT_EQ(det::HalfToFloat(det::FloatToHalf(65504.0f)), 65504.0f);
  EXPECT_NEAR(det::RoundToHalf(0.1), 0.1, 1e-4);
  for (uint32_t h = 0; h < 0x7C00; ++h) {
    const float f = det::HalfToFloat(static_cast<uint16_t>(h));
    ASSERT_EQ(det::FloatToHalf(f), h);
  }
}

TEST(DetMath, GeluGradient) {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const double num = (det::Gelu(x + 1e-6) - det::Gelu(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(det::GeluGrad(x), num, 1e-7);
  }
}

}  // namespace
}  // namespace mcwc
