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

#include "mcwc/entropy.hpp"

#include <cmath>

#include "test_util.hpp"

namespace mcwc {
namespace {

double RefSigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(LogisticPmf, CentralBinMatchesSigmoidDifference) {
  // Small support keeps every bin above the floor, so no renormalization.
  EXPECT_NEAR(LogisticPmf(0, 0.0, 1.0, 8), RefSigmoid(0.5) - RefSigmoid(-0.5), 1e-12);
  EXPECT_NEAR(LogisticPmf(0, 0.0, 1.0, 8), 0.2450, 1e-4);
}

TEST(LogisticPmf, SymmetricAtZeroLocation) {
  const std::vector<double> p = LogisticPmfTable(0.0, 2.5, 127);
  for (int c = 1; c < 127; ++c) EXPECT_NEAR(p[127 + c], p[127 - c], 1e-15);
}

TEST(LogisticPmf, SumsToOneOverGrid) {
  for (double a = -300.0; a <= 300.0; a += 37.5) {
    for (double b : {1e-3, 0.01, 0.3, 1.0, 7.0, 60.0, 1000.0}) {
      for (int qmax : {1, 127, 255}) {
        double s = 0.0;
        for (double v : LogisticPmfTable(a, b, qmax)) s += v;
        ASSERT_NEAR(s, 1.0, 1e-9) << a << " " << b << " " << qmax;
      }
    }
  }
}

TEST(LogisticPmf, RejectsBadArguments) {
  EXPECT_ERRC(LogisticPmfTable(0.0, 1e-4, 10), Errc::kInvalidArgument);
  EXPECT_ERRC(LogisticPmf(11, 0.0, 1.0, 10), Errc::kOutOfSupport);
}

TEST(Context, KeyframeHasNoStatistics) {
  const SymbolContext c = BuildContext(3, 1, 0.5, {}, true);
  EXPECT_TRUE(c.keyframe);
  EXPECT_EQ(c.mu, 0.0);
  EXPECT_EQ(c.sigma, 0.0);
}

TEST(Context, PredictedStatistics) {
  const std::vector<double> pred(10, 2.0);
  const SymbolContext c = BuildContext(3, 1, 0.5, pred, false);
  EXPECT_FALSE(c.keyframe);
  EXPECT_EQ(c.mu, 2.0);
  EXPECT_EQ(c.sigma, 0.0);
  EXPECT_ERRC(BuildContext(3, 1, 0.5, {}, false), Errc::kMissingPrediction);
}

TEST(Context, BaselineStatistics) {
  const std::vector<float> v{-1.0f, 1.0f};
  const SymbolContext c = BuildBaselineContext(2, 0, 0.1, v);
  EXPECT_EQ(c.mu, 0.0);
  EXPECT_EQ(c.sigma, 1.0);
}

std::vector<ContextHistogram> RepeatedSymbol() {
  ContextHistogram h;
  h.ctx = BuildContext(2, 0, 0.05, std::vector<double>{0.1, -0.1}, false);
  h.qmax = 127;
  h.counts = {{0, 1000}};
  return {h};
}

EntropyDims SmallDims() {
  EntropyDims d;
  d.num_layers = 4;
  d.num_types = 2;
  d.d_emb = 4;
  d.hidden = 16;
  return d;
}

TEST(EntropyFit, RepeatedSymbolBecomesCheap) {
  EntropyModel m(SmallDims(), 1);
  EntropyFitConfig cfg;
  cfg.steps = 600;
  cfg.lr = 2e-2;
  const FitReport r = FitEntropyModel(&m, RepeatedSymbol(), cfg);
  EXPECT_LT(r.final_bits_per_symbol, 0.1);
  EXPECT_LT(CodelengthProxy(m, RepeatedSymbol()) / 1000.0, 0.1);
}

TEST(EntropyFit, ZeroStepsReportsInitialNll) {
  EntropyModel m(SmallDims(), 2);
  const std::vector<double> before = m.bank().values();
  EntropyFitConfig cfg;
  cfg.steps = 0;
  const FitReport r = FitEntropyModel(&m, RepeatedSymbol(), cfg);
  EXPECT_EQ(m.bank().values(), before);
  EXPECT_DOUBLE_EQ(r.initial_bits_per_symbol, r.final_bits_per_symbol);
  // The proxy uses the floored table, the fit loss the exact mass.
  EXPECT_NEAR(r.initial_bits_per_symbol, CodelengthProxy(m, RepeatedSymbol()) / 1000.0, 0.02);
}

TEST(EntropyFit, SameSeedIsBitIdentical) {
  EntropyFitConfig cfg;
  cfg.steps = 50;
  EntropyModel a(SmallDims(), 3), b(SmallDims(), 3);
  FitEntropyModel(&a, RepeatedSymbol(), cfg);
  FitEntropyModel(&b, RepeatedSymbol(), cfg);
  EXPECT_EQ(a.bank().values(), b.bank().values());
}

TEST(EntropyModel, GradientMatchesFiniteDifference) {
  EntropyModel m(SmallDims(), 4);
  Rng rng(5);
  for (double& v : m.bank().values()) v += 0.1 * rng.Normal();
  const SymbolContext ctx = BuildContext(3, 1, 0.02, std::vector<double>{0.3, -0.2, 0.5}, false);
  const int code = 3;
  auto nll = [&](const EntropyModel& mm) {
    double a, b, da, db;
    mm.Predict(ctx, &a, &b);
    return CodeNll(code, a, b, 127, &da, &db);
  };
  EntropyModel::Cache cache;
  double a, b, da, db;
  m.Forward(ctx, &cache, &a, &b);
  CodeNll(code, a, b, 127, &da, &db);
  std::vector<double> grad(m.bank().size(), 0.0);
  m.Backward(ctx, cache, da, db, &grad);
  const double eps = 1e-6;
  for (size_t k = 0; k < m.bank().size(); k += 7) {
    EntropyModel p = m;
    p.bank().values()[k] += eps;
    EntropyModel q = m;
    q.bank().values()[k] -= eps;
    const double num = (nll(p) - nll(q)) / (2 * eps);
    EXPECT_NEAR(grad[k], num, 1e-5 + 1e-4 * std::abs(num)) << "coordinate " << k;
  }
}

TEST(EntropyModel, RejectsOutOfRangeContext) {
  EntropyModel m(SmallDims(), 6);
  double a, b;
  SymbolContext c;
  c.layer = 5;
  EXPECT_ERRC(m.Predict(c, &a, &b), Errc::kLayerIndexOutOfRange);
  c.layer = 1;
  c.type = 2;
  EXPECT_ERRC(m.Predict(c, &a, &b), Errc::kUnknownType);
}

}  // namespace
}  // namespace mcwc
