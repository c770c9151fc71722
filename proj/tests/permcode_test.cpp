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

#include "mcwc/permcode.hpp"

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

namespace mcwc {
namespace {

PermTypeScales UniformScales(double abs, double delta) {
  PermTypeScales s;
  s.abs.fill(abs);
  s.delta.fill(delta);
  return s;
}

TEST(Lehmer, Examples) {
  EXPECT_EQ(LehmerEncode(IdentityPermutation(4)), (LehmerDigits{0, 0, 0, 0}));
  EXPECT_EQ(LehmerEncode(FromOneBased({3, 1, 2})), (LehmerDigits{2, 0, 0}));
  EXPECT_EQ(LehmerEncode(FromOneBased({3, 2, 1})), (LehmerDigits{2, 1, 0}));
  EXPECT_TRUE(IsIdentity(LehmerDecode({0, 0, 0})));
  EXPECT_EQ(ToOneBased(LehmerDecode({2, 1, 0})), (std::vector<int>{3, 2, 1}));
}

TEST(Lehmer, ExhaustiveFour) {
  Permutation p = IdentityPermutation(4);
  int n = 0;
  do {
    EXPECT_EQ(LehmerDecode(LehmerEncode(p)), p);
    ++n;
  } while (std::next_permutation(p.begin(), p.end()));
  EXPECT_EQ(n, 24);
}

TEST(Lehmer, DigitOutOfRange) {
  EXPECT_ERRC(LehmerDecode({3, 0, 0}), Errc::kDigitOutOfRange);
  EXPECT_ERRC(LehmerEncode(Permutation{0, 0}), Errc::kNotBijection);
}

TEST(ZigZag, Examples) {
  EXPECT_EQ(ZigZag(0), 0u);
  EXPECT_EQ(ZigZag(5), 10u);
  EXPECT_EQ(ZigZag(-3), 5u);
  for (int64_t x = -1000; x <= 1000; ++x) EXPECT_EQ(UnZigZag(ZigZag(x)), x);
}

TEST(Delta, Examples) {
  EXPECT_EQ(DeltaDigits({2, 1, 0}, {2, 1, 0}), (std::vector<int64_t>{0, 0, 0}));
  EXPECT_EQ(DeltaDigits({2, 1, 0}, {2, 0, 0}), (std::vector<int64_t>{0, 1, 0}));
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.Below(50);
    const LehmerDigits a = LehmerEncode(rng.Permutation(n));
    const LehmerDigits b = LehmerEncode(rng.Permutation(n));
    EXPECT_EQ(UndeltaDigits(b, DeltaDigits(a, b)), a);
  }
}

// Negative log-likelihood of the untruncated discrete model at `scale`.
double ModelNll(const std::vector<int64_t>& xs, double scale, bool two_sided) {
  const double q = std::exp(-1.0 / scale);
  const double z = two_sided ? (1.0 + q) / (1.0 - q) : 1.0 / (1.0 - q);
  double nll = 0.0;
  for (int64_t x : xs) nll += std::log(z) + static_cast<double>(std::llabs(x)) / scale;
  return nll;
}

TEST(PermModel, LaplaceScale) {
  EXPECT_NEAR(FitLaplaceScale({0, 0, 0}), 1e-3, 1e-6);
  EXPECT_EQ(FitLaplaceScale({}), 1.0);
  EXPECT_EQ(FitGeometricScale({}), 1.0);
  // m = 1: q = sqrt(2) - 1 two-sided, q = 1/2 one-sided.
  EXPECT_NEAR(FitLaplaceScale({-1, 1}), -1.0 / std::log(std::sqrt(2.0) - 1.0), 1e-3);
  EXPECT_NEAR(FitGeometricScale({0, 2}), 1.0 / std::log(2.0), 1e-3);
}

TEST(PermModel, FittedScalesMinimizeNll) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int64_t> xs(200);
    const double spread = rng.Uniform(0.05, 6.0);
    for (int64_t& x : xs) x = static_cast<int64_t>(std::llround(spread * rng.Normal()));
    xs[0] = 1;
    std::vector<int64_t> mags(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) mags[i] = std::llabs(xs[i]);
    for (bool two_sided : {true, false}) {
      const auto& data = two_sided ? xs : mags;
      const double s = two_sided ? FitLaplaceScale(data) : FitGeometricScale(data);
      const double at = ModelNll(data, s, two_sided);
      EXPECT_LE(at, ModelNll(data, s * 1.05, two_sided) + 1e-6);
      EXPECT_LE(at, ModelNll(data, s / 1.05, two_sided) + 1e-6);
    }
  }
}

TEST(PermModel, FitUsesDefaultsForEmptyBuckets) {
  PermSamples s;
  const LehmerDigits d = LehmerEncode(IdentityPermutation(8));
  AddPermSamples(d, &d, &s);
  const PermModelParams p = FitPermModel({s, PermSamples{}}, kPermThreshold);
  ASSERT_EQ(p.types.size(), 2u);
  for (double v : p.types[1].delta) EXPECT_EQ(v, 1.0);
  for (double v : p.types[0].delta) EXPECT_LT(v, 0.01);
}

TEST(PermStream, IdentityIsCheap) {
  const LehmerDigits d = LehmerEncode(IdentityPermutation(64));
  const PermTypeScales tight = UniformScales(1e-3, 1e-3);
  EXPECT_LT(PermStreamNll(d, &d, tight, kPermThreshold) / 64.0, 2.0);
  EXPECT_LT(PermStreamNll(d, nullptr, tight, kPermThreshold) / 64.0, 2.0);
}

TEST(PermStream, EscapeRoundTrips) {
  // Digit 0 of a size-64 permutation moves by 40 relative to identity.
  LehmerDigits prev(64, 0);
  LehmerDigits curr(64, 0);
  curr[0] = 40;
  const PermTypeScales s = UniformScales(1.0, 1.0);
  const Bytes b = EncodePermStream(curr, &prev, s, kPermThreshold);
  EXPECT_EQ(DecodePermStream(b.data(), b.size(), 64, &prev, s, kPermThreshold), curr);
  const Bytes a = EncodePermStream(curr, nullptr, s, kPermThreshold);
  EXPECT_EQ(DecodePermStream(a.data(), a.size(), 64, nullptr, s, kPermThreshold), curr);
}

TEST(PermStream, RandomSizeEightFuzz) {
  Rng rng(2);
  const PermTypeScales s = UniformScales(2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const LehmerDigits prev = LehmerEncode(rng.Permutation(8));
    const LehmerDigits curr = LehmerEncode(rng.Permutation(8));
    const bool delta = trial % 2 == 0;
    const Bytes b = EncodePermStream(curr, delta ? &prev : nullptr, s, kPermThreshold);
    ASSERT_EQ(DecodePermStream(b.data(), b.size(), 8, delta ? &prev : nullptr, s, kPermThreshold),
              curr);
  }
}

TEST(PermStream, FixedLengthRoundTrip) {
  Rng rng(3);
  for (size_t n : {1u, 2u, 7u, 100u, 513u}) {
    const Permutation p = rng.Permutation(n);
    const Bytes b = EncodePermFixed(p);
    EXPECT_EQ(DecodePermFixed(b.data(), b.size(), n), p);
    EXPECT_LE(b.size() * 8, n * static_cast<size_t>(FixedPermBits(n)) + 7);
  }
}

TEST(PermStream, PmfsSumToOne) {
  for (double scale : {1e-3, 0.5, 3.0, 100.0}) {
    for (const auto& pmf : {PermDeltaPmf(scale, kPermThreshold), PermAbsPmf(scale, kPermThreshold)}) {
      double sum = 0.0;
      for (double p : pmf) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_EQ(pmf.size(), static_cast<size_t>(2 * kPermThreshold + 2));
    }
  }
}

}  // namespace
}  // namespace mcwc
