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

#include "mcwc/diagnostics.hpp"

#include <cmath>

#include "mcwc/synthetic.hpp"
#include "test_util.hpp"

namespace mcwc {
namespace {

std::vector<double> RandomVec(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Normal();
  return v;
}

TEST(Cosine, PlantedCopiesAlignToOne) {
  SyntheticConfig c = SmoothDriftConfig(6, 16, 8, 0.0, 1);
  const SyntheticModel m = GenerateSynthetic(c);
  const PredictabilityReport r = Diagnose(m.ckpt, m.specs, DiagnoseConfig{});
  EXPECT_NEAR(r.cos_after, 1.0, 1e-6);
  EXPECT_LT(r.cos_before, 0.9);
  EXPECT_NEAR(r.nre_after, 0.0, 1e-10);
}

TEST(R2, Examples) {
  const std::vector<double> t{1.0, 3.0};
  EXPECT_DOUBLE_EQ(PredictorR2(t, t, 1), 1.0);
  EXPECT_DOUBLE_EQ(PredictorR2(t, std::vector<double>{2.0, 2.0}, 1), 0.0);
  EXPECT_DOUBLE_EQ(PredictorR2(t, std::vector<double>{1.0, 2.0}, 1), 0.5);
  EXPECT_ERRC(PredictorR2(std::vector<double>{2.0, 2.0}, t, 1), Errc::kZeroVariance);
}

TEST(Nre, Examples) {
  const std::vector<double> t{1.0, -3.0, 2.0};
  EXPECT_EQ(NormalizedResidualEnergy(t, t), 0.0);
  EXPECT_EQ(NormalizedResidualEnergy(t, std::vector<double>(3, 0.0)), 1.0);
  EXPECT_ERRC(NormalizedResidualEnergy(std::vector<double>(3, 0.0), t), Errc::kZeroEnergy);
}

TEST(Diagnose, TrainedPredictorsOnDrift) {
  const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(8, 16, 8, 0.05, 2));
  DiagnoseConfig cfg;
  cfg.predictor = DiagnosePredictor::kTrained;
  cfg.train.steps = 100;
  cfg.train.warmup = 10;
  cfg.d_lat = 16;
  cfg.d_emb = 4;
  std::vector<std::vector<Permutation>> perms;
  const PredictabilityReport r = Diagnose(m.ckpt, m.specs, cfg, &perms);
  EXPECT_GT(r.r2_after, r.r2_before);
  EXPECT_LT(r.nre_after, r.nre_before);
  ASSERT_EQ(perms.size(), 1u);
  EXPECT_EQ(r.rows.size(), 7u);
  EXPECT_NE(r.ToCsv().find("layer,type"), std::string::npos);
  EXPECT_NE(r.ToJson().find("\"rows\""), std::string::npos);
}

TEST(MlpInvariance, IdentityIsExact) {
  Rng rng(3);
  const int din = 5, h = 7, dout = 4;
  const auto w1 = RandomVec(rng, h * din), b1 = RandomVec(rng, h), w2 = RandomVec(rng, dout * h),
             b2 = RandomVec(rng, dout), x = RandomVec(rng, 20 * din);
  EXPECT_EQ(VerifyMlpInvariance(w1, b1, w2, b2, din, h, dout, IdentityPermutation(h), x,
                                Activation::kGelu),
            0.0);
}

TEST(MlpInvariance, RandomPermutationAndNegativeControl) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int din = 6, h = 16, dout = 5;
    const auto w1 = RandomVec(rng, h * din), b1 = RandomVec(rng, h),
               w2 = RandomVec(rng, dout * h), b2 = RandomVec(rng, dout),
               x = RandomVec(rng, 100 * din);
    Permutation p = rng.Permutation(h);
    if (IsIdentity(p)) std::swap(p[0], p[1]);
    for (Activation a : {Activation::kRelu, Activation::kGelu}) {
      EXPECT_LT(VerifyMlpInvariance(w1, b1, w2, b2, din, h, dout, p, x, a), 1e-12);
      EXPECT_GT(VerifyMlpInvariance(w1, b1, w2, b2, din, h, dout, p, x, a, false), 1e-6);
    }
  }
}

TEST(MhaInvariance, HeadPermutation) {
  Rng rng(5);
  const int heads = 4, dh = 8, d = heads * dh;
  const auto wq = RandomVec(rng, d * d), wk = RandomVec(rng, d * d), wv = RandomVec(rng, d * d),
             wo = RandomVec(rng, d * d), x = RandomVec(rng, 10 * d);
  std::vector<double> wq_s = wq, wk_s = wk;
  for (double& v : wq_s) v *= 0.2;
  for (double& v : wk_s) v *= 0.2;
  EXPECT_EQ(VerifyMhaInvariance(wq_s, wk_s, wv, wo, heads, dh, IdentityPermutation(heads), x), 0.0);
  const Permutation p = FromOneBased({2, 4, 1, 3});
  EXPECT_LT(VerifyMhaInvariance(wq_s, wk_s, wv, wo, heads, dh, p, x), 1e-10);
  EXPECT_GT(VerifyMhaInvariance(wq_s, wk_s, wv, wo, heads, dh, p, x, false), 1e-3);
}

TEST(BreakEven, PresetScenario) {
  EXPECT_EQ(BreakEven(PythiaBreakEvenPreset()), 402u);
}

TEST(BreakEven, EqualSizesNeverBreakEven) {
  DeploymentScenario s = PythiaBreakEvenPreset();
  s.compressed_gb = s.baseline_gb;
  EXPECT_ERRC(BreakEven(s), Errc::kNoBreakEven);
}

TEST(BreakEven, DoublingBandwidthHalvesSaving) {
  DeploymentScenario s = PythiaBreakEvenPreset();
  const double base = LoadSaving(s);
  s.bandwidth_gbps *= 2.0;
  EXPECT_NEAR(LoadSaving(s), base / 2.0, 1e-12);
  EXPECT_NEAR(static_cast<double>(BreakEven(s)), 2.0 * 402.0, 2.0);
}

TEST(Size, Formula) {
  EXPECT_NEAR(BitstreamSizeBytes(1.4e9, 4.2), 7.35e8, 1.0);
  EXPECT_NEAR(BitstreamSizeBytes(1.4e9, 4.2) / 1e9, 0.74, 0.74 * 0.01);
  EXPECT_EQ(BitstreamSizeBytes(1000, 8.0), 1000.0);
  EXPECT_EQ(BitstreamSizeBytes(1000, 0.0), 0.0);
}

TEST(Histogram, MagnitudeBuckets) {
  const std::vector<double> v{-0.5, 0.1, 2.0, -3.0, 0.0};
  const std::string csv = MagnitudeHistogramCsv(v, {0.0, 1.0, 2.5});
  EXPECT_EQ(csv, "lo,hi,count\n0,1,3\n1,2.5,1\n2.5,inf,1\n");
}

}  // namespace
}  // namespace mcwc
