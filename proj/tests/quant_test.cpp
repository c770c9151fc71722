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

#include "mcwc/quant.hpp"

#include <cmath>

#include "test_util.hpp"

namespace mcwc {
namespace {

TEST(Quantizer, ZeroResidualsHitFloor) {
  const std::vector<double> v(8, 0.0);
  const QuantizerParams q = InitQuantizer(v, std::vector<uint32_t>(8, 0), 1, 0.8, 127, true);
  EXPECT_FLOAT_EQ(q.step[0], static_cast<float>(kStepFloor));
  EXPECT_EQ(q.mean[0], 0.0f);
}

TEST(Quantizer, PopulationStdTimesGamma) {
  const std::vector<double> v{-1.0, 1.0};
  const QuantizerParams q = InitQuantizer(v, {0, 0}, 1, 0.8, 127, false);
  EXPECT_FLOAT_EQ(q.step[0], 0.8f);
}

TEST(Quantizer, PerGroupSteps) {
  const std::vector<double> v{-1.0, 1.0, 5.0, 7.0};
  const QuantizerParams q = InitQuantizer(v, {0, 0, 1, 1}, 2, 1.0, 127, true);
  EXPECT_FLOAT_EQ(q.step[0], 1.0f);
  EXPECT_FLOAT_EQ(q.step[1], 1.0f);
  EXPECT_FLOAT_EQ(q.mean[1], 6.0f);
  EXPECT_ERRC(InitQuantizer(v, {0, 0, 0, 0}, 2, 1.0, 127, false), Errc::kEmptyGroup);
}

TEST(Quantizer, ScalarExamples) {
  bool clipped = false;
  EXPECT_EQ(QuantizeValue(0.74, 0.5, 0.0, 127, &clipped), 1);
  EXPECT_FALSE(clipped);
  EXPECT_EQ(QuantizeValue(0.3, 0.5, 0.3, 127, &clipped), 0);
  EXPECT_EQ(QuantizeValue(1e6, 0.5, 0.0, 127, &clipped), 127);
  EXPECT_TRUE(clipped);
  EXPECT_EQ(DequantizeValue(0, 0.5, 0.25), 0.25);
  const double rec = DequantizeValue(QuantizeValue(0.74, 0.5, 0.0, 127, &clipped), 0.5, 0.0);
  EXPECT_EQ(rec, 0.5);
  EXPECT_LE(std::abs(0.74 - rec), 0.25);
}

TEST(Quantizer, HalfwayRoundsAwayFromZero) {
  bool clipped = false;
  EXPECT_EQ(QuantizeValue(0.25, 0.5, 0.0, 127, &clipped), 1);
  EXPECT_EQ(QuantizeValue(-0.25, 0.5, 0.0, 127, &clipped), -1);
}

TEST(Quantizer, CodeRangeIsFixedPoint) {
  for (int qmax : {127, 255}) {
    const double s = 0.0137, m = -0.21;
    for (int c = -qmax; c <= qmax; ++c) {
      bool clipped = false;
      ASSERT_EQ(QuantizeValue(DequantizeValue(c, s, m), s, m, qmax, &clipped), c);
      ASSERT_FALSE(clipped);
    }
  }
}

TEST(Quantizer, HalfStepBoundOnRandomSamples) {
  Rng rng(1);
  std::vector<double> r(10000);
  std::vector<uint32_t> g(r.size());
  for (size_t k = 0; k < r.size(); ++k) {
    r[k] = 3.0 * rng.Normal();
    g[k] = static_cast<uint32_t>(k % 5);
  }
  const QuantizerParams q = InitQuantizer(r, g, 5, 0.8, 127, true);
  uint64_t clips = 0;
  const std::vector<int> c = Quantize(r, q, &clips);
  const std::vector<double> back = Dequantize(c, q);
  for (size_t k = 0; k < r.size(); ++k) {
    if (std::abs(c[k]) < q.qmax) {
      ASSERT_LE(std::abs(r[k] - back[k]), 0.5 * q.step[g[k]] * (1 + 1e-12));
    }
  }
}

TEST(Quantizer, DequantizeRejectsOutOfRangeCodes) {
  const QuantizerParams q = FixedQuantizer({0.5f}, {}, {0, 0}, 127);
  const std::vector<int> c{1, 128};
  EXPECT_ERRC(Dequantize(c, q), Errc::kCodeOutOfRange);
  EXPECT_ERRC(FixedQuantizer({0.0f}, {}, {0}, 127), Errc::kInvalidArgument);
}

}  // namespace
}  // namespace mcwc
