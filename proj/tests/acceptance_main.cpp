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

// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mcwc/align.hpp"
#include "mcwc/codec.hpp"
#include "mcwc/diagnostics.hpp"
#include "mcwc/entropy.hpp"
#include "mcwc/error.hpp"
#include "mcwc/permcode.hpp"
#include "mcwc/predictor.hpp"
#include "mcwc/quant.hpp"
#include "mcwc/random.hpp"
#include "mcwc/range_coder.hpp"
#include "mcwc/synthetic.hpp"

namespace mcwc {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// Every bitstream produced by the suite is checked against criterion 10.
struct RateLedger {
  int streams = 0;
  int mismatches = 0;
  void Check(const EncodeResult& r) {
    ++streams;
    const RateBreakdown b = RateReport(r.bitstream);
    if (b.total() != 8 * static_cast<uint64_t>(r.bitstream.size()) ||
        r.rate.total() != b.total()) {
      ++mismatches;
    }
  }
} g_rate;

CodecConfig SuiteConfig() {
  CodecConfig c;
  c.d_lat = 32;
  c.d_emb = 8;
  c.entropy.d_emb = 4;
  c.entropy.hidden = 32;
  c.entropy_fit.steps = 30;
  c.train.steps = 40;
  c.train.warmup = 8;
  c.train.batch = 32;
  return c;
}

double Rms(const Checkpoint& ckpt) {
  double ss = 0.0;
  uint64_t n = 0;
  for (const Layer& l : ckpt.layers) {
    for (const Tensor& t : l.tensors) {
      for (float v : t.data) ss += static_cast<double>(v) * v;
      n += t.data.size();
    }
  }
  return std::sqrt(ss / static_cast<double>(n));
}

// Matched quantizer settings: fixed steps relative to the checkpoint rms.
CodecConfig FixedStepConfig(const Checkpoint& ckpt) {
  CodecConfig c = SuiteConfig();
  const double rms = Rms(ckpt);
  c.step_mode = StepMode::kFixed;
  c.fixed_step = 0.04 * rms;
  c.keyframe_fixed_step = 0.02 * rms;
  return c;
}

// 1. Round trip on randomized layouts.
Outcome RoundTrip() {
  const auto t0 = std::chrono::steady_clock::now();
  int failures = 0, n = 0;
  uint64_t max_params = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const SyntheticModel m = GenerateSynthetic(RandomSyntheticConfig(1000 + seed, 100000));
    max_params = std::max<uint64_t>(max_params, ParamCount(m.ckpt));
    CodecConfig c = SuiteConfig();
    c.keyframe_interval = 1 + static_cast<int>(seed % 6);
    c.learned_means = seed % 3 == 0;
    c.align.policy = seed % 2 ? SolverPolicy::kScreened : SolverPolicy::kAdaptive;
    try {
      const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
      g_rate.Check(r);
      if (!BitIdentical(DecodeCheckpoint(r.bitstream), r.reconstruction)) ++failures;
    } catch (const Error& e) {
      std::fprintf(stderr, "round trip seed %llu: %s\n", static_cast<unsigned long long>(seed), e.what());
      ++failures;
    }
    ++n;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {failures == 0 && secs < 60.0,
          Fmt("%d/%d checkpoints bit-exact (max %llu params), %.1f s (limit 60 s)", n - failures, n,
              static_cast<unsigned long long>(max_params), secs)};
}

std::vector<double> RandomVec(Rng& rng, size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.Normal();
  return v;
}

Permutation NonIdentity(Rng& rng, size_t n) {
  Permutation p = rng.Permutation(n);
  if (IsIdentity(p)) std::swap(p[0], p[1]);
  return p;
}

// 2. Symmetry verifiers.
Outcome Symmetry() {
  Rng rng(2);
  double mlp_max = 0.0, mlp_ctrl_min = 1e300, mha_max = 0.0, mha_ctrl_min = 1e300;
  for (int i = 0; i < 100; ++i) {
    const int din = 2 + static_cast<int>(rng.Below(15)), h = 2 + static_cast<int>(rng.Below(31)),
              dout = 1 + static_cast<int>(rng.Below(15));
    const auto w1 = RandomVec(rng, static_cast<size_t>(h) * din), b1 = RandomVec(rng, h),
               w2 = RandomVec(rng, static_cast<size_t>(dout) * h), b2 = RandomVec(rng, dout),
               x = RandomVec(rng, static_cast<size_t>(100) * din);
    const Permutation p = NonIdentity(rng, h);
    const Activation act = i % 2 ? Activation::kGelu : Activation::kRelu;
    mlp_max = std::max(mlp_max, VerifyMlpInvariance(w1, b1, w2, b2, din, h, dout, p, x, act));
    mlp_ctrl_min = std::min(mlp_ctrl_min,
                            VerifyMlpInvariance(w1, b1, w2, b2, din, h, dout, p, x, act, false));
  }
  for (int i = 0; i < 100; ++i) {
    const int heads = 2 + static_cast<int>(rng.Below(7)), dh = 2 + static_cast<int>(rng.Below(9));
    const int d = heads * dh;
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    const auto wq = RandomVec(rng, static_cast<size_t>(d) * d, s),
               wk = RandomVec(rng, static_cast<size_t>(d) * d, s),
               wv = RandomVec(rng, static_cast<size_t>(d) * d, s),
               wo = RandomVec(rng, static_cast<size_t>(d) * d, s),
               x = RandomVec(rng, static_cast<size_t>(8) * d);
    const Permutation p = NonIdentity(rng, heads);
    mha_max = std::max(mha_max, VerifyMhaInvariance(wq, wk, wv, wo, heads, dh, p, x));
    mha_ctrl_min =
        std::min(mha_ctrl_min, VerifyMhaInvariance(wq, wk, wv, wo, heads, dh, p, x, false));
  }
  const bool pass = mlp_max < 1e-10 && mha_max < 1e-10 && mlp_ctrl_min > 1e-3 && mha_ctrl_min > 1e-3;
  return {pass, Fmt("MLP max %.2e, MHA max %.2e (< 1e-10); controls min %.2e / %.2e (> 1e-3)",
                    mlp_max, mha_max, mlp_ctrl_min, mha_ctrl_min)};
}

// 3. Assignment optimality.
Outcome Assignment() {
  Rng rng(3);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    SimilarityMatrix s;
    s.n = 1 + static_cast<int>(rng.Below(7));
    s.s.resize(static_cast<size_t>(s.n) * s.n);
    for (double& v : s.s) v = rng.Uniform(-1.0, 1.0);
    const Permutation exact = SolveExact(s);
    Permutation p = IdentityPermutation(s.n), best = p;
    double best_score = -1e300;
    do {
      const double sc = AssignmentScore(s, p);
      if (sc > best_score) {
        best_score = sc;
        best = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
    if (exact != best || std::abs(AssignmentScore(s, exact) - best_score) > 1e-12) ++mismatches;
  }
  double worst_ratio = 1.0;
  for (int i = 0; i < 100; ++i) {
    SimilarityMatrix s;
    s.n = 64;
    s.s.resize(64 * 64);
    for (double& v : s.s) v = rng.Uniform(-0.5, 0.5);
    const Permutation planted = rng.Permutation(64);
    for (int r = 0; r < 64; ++r) s.at(r, static_cast<int>(planted[r])) = rng.Uniform(0.6, 1.0);
    const double exact = AssignmentScore(s, SolveExact(s));
    AlignConfig cfg;
    const double screened = AssignmentScore(s, SolveScreened(s, cfg.k_cand, cfg.refine_passes));
    worst_ratio = std::min(worst_ratio, screened / exact);
  }
  return {mismatches == 0 && worst_ratio >= 0.98,
          Fmt("exact vs brute force: %d/500 mismatches; screened/exact worst %.4f (>= 0.98)",
              mismatches, worst_ratio)};
}

double Log2Factorial(size_t n) {
  double s = 0.0;
  for (size_t k = 2; k <= n; ++k) s += std::log2(static_cast<double>(k));
  return s;
}

// 4. Permutation coding.
Outcome PermutationCoding() {
  int failures = 0;
  uint64_t exhaustive = 0;
  for (size_t b = 1; b <= 6; ++b) {
    Permutation p = IdentityPermutation(b);
    do {
      if (LehmerDecode(LehmerEncode(p)) != p) ++failures;
      ++exhaustive;
    } while (std::next_permutation(p.begin(), p.end()));
  }
  Rng rng(4);
  PermTypeScales scales;
  scales.abs.fill(8.0);
  scales.delta.fill(2.0);
  for (int i = 0; i < 10000; ++i) {
    const size_t b = 1 + rng.Below(512);
    const Permutation prev = rng.Permutation(b), curr = rng.Permutation(b);
    const LehmerDigits dp = LehmerEncode(prev), dc = LehmerEncode(curr);
    if (LehmerDecode(dc) != curr) ++failures;
    const bool delta = i % 2 == 0;
    const Bytes s = EncodePermStream(dc, delta ? &dp : nullptr, scales, kPermThreshold);
    if (DecodePermStream(s.data(), s.size(), b, delta ? &dp : nullptr, scales, kPermThreshold) != dc) {
      ++failures;
    }
  }
  // Near-identity streams: both the previous and the current order are the
  // identity with one random adjacent transposition per 32 blocks; the current
  // order is delta-coded against the previous one.
  double worst = 0.0;
  for (size_t b : {64u, 128u, 256u, 512u}) {
    auto near_identity = [&]() {
      Permutation q = IdentityPermutation(b);
      for (size_t k = 0; k < b / 32; ++k) {
        const size_t i = rng.Below(b - 1);
        std::swap(q[i], q[i + 1]);
      }
      return q;
    };
    PermSamples samples;
    std::vector<std::pair<LehmerDigits, LehmerDigits>> cases;
    for (int i = 0; i < 40; ++i) {
      const LehmerDigits dp = LehmerEncode(near_identity()), dc = LehmerEncode(near_identity());
      if (i < 20) {
        AddPermSamples(dc, &dp, &samples);
      } else {
        cases.emplace_back(dc, dp);
      }
    }
    const PermModelParams model = FitPermModel({samples}, kPermThreshold);
    for (const auto& [dc, dp] : cases) {
      const Bytes s = EncodePermStream(dc, &dp, model.types[0], model.threshold);
      worst = std::max(worst, 8.0 * static_cast<double>(s.size()) / Log2Factorial(b));
    }
  }
  return {failures == 0 && worst < 0.2,
          Fmt("%llu exhaustive + 10000 fuzz cases, %d failures; near-identity worst %.3f log2(B!) (< 0.2)",
              static_cast<unsigned long long>(exhaustive), failures, worst)};
}

// 5. Entropy coder.
Outcome EntropyCoder() {
  Rng rng(5);
  uint64_t symbols = 0;
  int failures = 0;
  double worst_excess = -1e300;
  while (symbols < 1000000) {
    const int n = 1000 + static_cast<int>(rng.Below(20000));
    const int tables = 1 + static_cast<int>(rng.Below(8));
    std::vector<Cdf> cdfs;
    for (int t = 0; t < tables; ++t) {
      const int qmax = 1 + static_cast<int>(rng.Below(255));
      cdfs.push_back(LogisticCdf(rng.Uniform(-20, 20), std::exp(rng.Uniform(-5, 5)), qmax));
    }
    std::vector<std::pair<int, int>> seq(n);
    double proxy = 0.0;
    RangeEncoder enc;
    for (auto& [t, s] : seq) {
      t = static_cast<int>(rng.Below(tables));
      const Cdf& c = cdfs[t];
      const uint32_t u = static_cast<uint32_t>(rng.Below(kCdfTotal));
      s = static_cast<int>(std::upper_bound(c.begin(), c.end(), u) - c.begin()) - 1;
      proxy -= std::log2(static_cast<double>(c[s + 1] - c[s]) / kCdfTotal);
      enc.EncodeSymbol(c, s);
    }
    const Bytes b = enc.Finish();
    worst_excess = std::max(worst_excess, 8.0 * static_cast<double>(b.size()) - proxy);
    RangeDecoder dec(b.data(), b.size());
    for (const auto& [t, s] : seq) {
      if (dec.DecodeSymbol(cdfs[t]) != s) {
        ++failures;
        break;
      }
    }
    symbols += static_cast<uint64_t>(n);
  }
  double worst_sum = 0.0;
  for (double a = -200.0; a <= 200.0; a += 12.5) {
    for (double lb = -3.0; lb <= 3.0; lb += 0.25) {
      for (int qmax : {1, 16, 127, 255}) {
        double s = 0.0;
        for (double p : LogisticPmfTable(a, std::max(kBetaFloor, std::pow(10.0, lb)), qmax)) s += p;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
  }
  return {failures == 0 && worst_excess <= 40.0 && worst_sum <= 1e-9,
          Fmt("%llu symbols, %d stream failures; worst realized - proxy %.1f bits (<= 40); "
              "pmf |sum-1| max %.1e (<= 1e-9)",
              static_cast<unsigned long long>(symbols), failures, worst_excess, worst_sum)};
}

// 6. Quantizer.
Outcome Quantizer() {
  Rng rng(6);
  uint64_t violations = 0, in_range = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double s = std::exp(rng.Uniform(-10, 2));
    const double m = rng.Uniform(-1, 1) * s * 10;
    const double r = m + s * rng.Uniform(-200, 200);
    const int qmax = i % 2 ? kResidualQmax : kKeyframeQmax;
    bool clipped = false;
    const int c = QuantizeValue(r, s, m, qmax, &clipped);
    if (clipped) continue;
    ++in_range;
    if (std::abs(r - DequantizeValue(c, s, m)) > 0.5 * s * (1.0 + 1e-12)) ++violations;
  }
  uint64_t fixed_point_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double s = std::exp(rng.Uniform(-15, 3));
    const double m = rng.Uniform(-1, 1);
    for (int qmax : {kResidualQmax, kKeyframeQmax}) {
      for (int c = -qmax; c <= qmax; ++c) {
        bool clipped = false;
        if (QuantizeValue(DequantizeValue(c, s, m), s, m, qmax, &clipped) != c || clipped) {
          ++fixed_point_failures;
        }
      }
    }
  }
  return {violations == 0 && fixed_point_failures == 0,
          Fmt("%llu in-range samples, %llu half-step violations; fixed-point failures %llu",
              static_cast<unsigned long long>(in_range), static_cast<unsigned long long>(violations),
              static_cast<unsigned long long>(fixed_point_failures))};
}

// 7. Alignment benefit on smooth-drift sequences.
Outcome AlignmentBenefit() {
  double nre_before = 0.0, nre_after = 0.0;
  int pairs = 0, recovered = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(24, 64, 64, 0.05, 700 + seed));
    std::vector<std::vector<Permutation>> perms;
    const PredictabilityReport r = Diagnose(m.ckpt, m.specs, DiagnoseConfig{}, &perms);
    nre_before += r.nre_before / 20.0;
    nre_after += r.nre_after / 20.0;
    for (int l = 1; l < 24; ++l) {
      ++pairs;
      if (perms[0][l] == InvertPermutation(m.planted[0][l])) ++recovered;
    }
  }
  const double frac = static_cast<double>(recovered) / pairs;
  return {nre_after < 0.5 * nre_before && frac >= 0.95,
          Fmt("mean NRE %.4f -> %.4f (ratio %.4f < 0.5); planted order recovered in %d/%d pairs "
              "(%.1f%% >= 95%%)",
              nre_before, nre_after, nre_after / nre_before, recovered, pairs, 100.0 * frac)};
}

SyntheticConfig SuiteModel(int layers, uint64_t seed) {
  SyntheticConfig c = SmoothDriftConfig(layers, 32, 16, 0.05, seed);
  c.decay = 0.9;
  return c;
}

// 8. Ablation ordering at matched quantizer settings.
Outcome AblationOrdering() {
  int ok_align = 0, ok_pred = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticModel m = GenerateSynthetic(SuiteModel(12, 800 + seed));
    CodecConfig full = FixedStepConfig(m.ckpt);
    full.train.steps = 150;
    full.train.lr = 3e-3;
    CodecConfig no_align = full, no_pred = full;
    no_align.no_alignment = true;
    no_pred.no_predictor = true;
    const EncodeResult a = EncodeCheckpoint(m.ckpt, m.specs, full);
    const EncodeResult b = EncodeCheckpoint(m.ckpt, m.specs, no_align);
    const EncodeResult c = EncodeCheckpoint(m.ckpt, m.specs, no_pred);
    for (const EncodeResult* r : {&a, &b, &c}) g_rate.Check(*r);
    ok_align += a.stats.proxy_code_bits <= b.stats.proxy_code_bits;
    ok_pred += a.stats.proxy_code_bits <= c.stats.proxy_code_bits;
  }
  return {ok_align >= 18 && ok_pred >= 18,
          Fmt("full <= no-alignment in %d/20 seeds, full <= no-predictor in %d/20 seeds (>= 18)",
              ok_align, ok_pred)};
}

// 9. Keyframe sweep.
Outcome KeyframeSweep() {
  int ok = 0;
  uint64_t clips = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    // No decay: a single fixed step then suits every layer without clipping.
    const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(32, 32, 16, 0.05, 900 + seed));
    std::vector<uint64_t> bits;
    std::vector<double> dist;
    for (int k : {2, 4, 8, 16}) {
      CodecConfig c = FixedStepConfig(m.ckpt);
      c.keyframe_interval = k;
      const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
      g_rate.Check(r);
      bits.push_back(r.rate.total());
      dist.push_back(r.stats.distortion);
      clips += r.stats.clips;
    }
    bool good = true;
    for (size_t i = 1; i < bits.size(); ++i) good &= bits[i] < bits[i - 1] && dist[i] >= dist[i - 1];
    ok += good;
  }
  return {ok >= 18, Fmt("bits strictly decreasing and distortion nondecreasing over K=2,4,8,16 in "
                        "%d/20 seeds (>= 18); %llu clipped values",
                        ok, static_cast<unsigned long long>(clips))};
}

// 10. Rate accounting.
Outcome RateAccounting() {
  RateBreakdown b;
  b.codes_keyframe = 620000000;
  b.codes_residual = 1550000000;
  b.perm = 130000000;
  b.qparam = 60000000;
  b.meta_header = 40000000;
  const std::vector<double> f = RateFractions(b);
  const double expect[5] = {25.8, 64.6, 5.4, 2.5, 1.7};
  bool table_ok = b.total() == 2400000000u;
  std::string shown;
  for (int i = 0; i < 5; ++i) {
    table_ok &= std::round(f[i] * 10.0) / 10.0 == expect[i];
    shown += Fmt("%s%.1f", i ? "/" : "", f[i]);
  }
  return {g_rate.mismatches == 0 && g_rate.streams > 0 && table_ok,
          Fmt("%d/%d bitstreams sum to 8 x file bytes; reference fractions %s %%",
              g_rate.streams - g_rate.mismatches, g_rate.streams, shown.c_str())};
}

// 11. Segment-parallel decode.
Outcome SegmentParallel() {
  bool ok = SegmentCount(24, 4) == 6 && SegmentCount(32, 16) == 2;
  std::string detail;
  for (auto [layers, k] : {std::pair{24, 4}, std::pair{32, 16}}) {
    const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(layers, 16, 8, 0.05, 1100 + layers));
    CodecConfig c = SuiteConfig();
    c.keyframe_interval = k;
    const EncodeResult r = EncodeCheckpoint(m.ckpt, m.specs, c);
    g_rate.Check(r);
    DecodeStats s1, s8;
    const Checkpoint one = DecodeSegmentsParallel(r.bitstream, 1, &s1);
    const Checkpoint eight = DecodeSegmentsParallel(r.bitstream, 8, &s8);
    const bool same = BitIdentical(one, eight) && BitIdentical(one, r.reconstruction);
    ok &= same && s8.segments == SegmentCount(layers, k);
    detail += Fmt("%s%d/%d -> %d segments, 1 vs 8 workers %s", detail.empty() ? "" : "; ", layers,
                  k, s8.segments, same ? "identical" : "DIFFER");
  }
  return {ok, detail};
}

// 12. Break-even and size formula.
Outcome BreakEvenCheck() {
  const uint64_t n = BreakEven(PythiaBreakEvenPreset());
  const double gb = BitstreamSizeBytes(1.4e9, 4.2) / 1e9;
  return {n == 402 && std::abs(gb - 0.74) <= 0.0074,
          Fmt("N_break = %llu (expect 402); size %.4f GB (0.74 within 1%%)",
              static_cast<unsigned long long>(n), gb)};
}

// 13. Predictor gradients and training determinism.
Outcome PredictorGradients() {
  double worst = 0.0;
  std::vector<std::vector<float>> store;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(1300 + seed);
    PredictorDims d;
    d.num_layers = 5;
    d.type_dims = {4 + static_cast<int>(rng.Below(8)), 2 + static_cast<int>(rng.Below(6))};
    d.d_lat = 6 + static_cast<int>(rng.Below(10));
    d.d_emb = 3;
    d.hidden = 8 + static_cast<int>(rng.Below(16));
    const Predictor p(d, seed, false);
    std::vector<TrainPair> pairs;
    store.clear();
    store.reserve(32);
    for (int i = 0; i < 12; ++i) {
      const int t = i % 2;
      std::vector<float> a(d.type_dims[t]), b(d.type_dims[t]);
      for (float& v : a) v = static_cast<float>(rng.Normal());
      for (float& v : b) v = static_cast<float>(rng.Normal());
      store.push_back(std::move(a));
      store.push_back(std::move(b));
      TrainPair tp;
      tp.prev = store[store.size() - 2].data();
      tp.target = store.back().data();
      tp.layer = 2 + static_cast<int>(rng.Below(4));
      tp.type = t;
      pairs.push_back(tp);
    }
    worst = std::max(worst, GradientCheck(p, pairs, 1e-4, 300, seed));
  }
  const SyntheticModel m = GenerateSynthetic(SuiteModel(6, 1400));
  CodecConfig c = SuiteConfig();
  c.train.steps = 60;
  const EncodeResult a = EncodeCheckpoint(m.ckpt, m.specs, c);
  const EncodeResult b = EncodeCheckpoint(m.ckpt, m.specs, c);
  g_rate.Check(a);
  g_rate.Check(b);
  const bool same = a.bitstream == b.bitstream;
  return {worst < 1e-4 && same, Fmt("max relative FD error %.2e over 10 parameterizations (< 1e-4); "
                                    "same-seed encodes %s",
                                    worst, same ? "bit-identical" : "DIFFER")};
}

}  // namespace
}  // namespace mcwc

int main() {
  using mcwc::Outcome;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  // Rate accounting runs after every criterion that produces bitstreams.
  const std::vector<Criterion> criteria = {
      {"bit-exact round trip", mcwc::RoundTrip},
      {"symmetry correctness", mcwc::Symmetry},
      {"assignment optimality", mcwc::Assignment},
      {"permutation coding", mcwc::PermutationCoding},
      {"entropy coder", mcwc::EntropyCoder},
      {"quantizer", mcwc::Quantizer},
      {"alignment benefit", mcwc::AlignmentBenefit},
      {"ablation ordering", mcwc::AblationOrdering},
      {"keyframe sweep", mcwc::KeyframeSweep},
      {"segment-parallel decode", mcwc::SegmentParallel},
      {"break-even", mcwc::BreakEvenCheck},
      {"predictor gradients", mcwc::PredictorGradients},
      {"rate accounting", mcwc::RateAccounting},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-24s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
