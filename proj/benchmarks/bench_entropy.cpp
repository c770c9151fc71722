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

#include <benchmark/benchmark.h>

#include "mcwc/entropy.hpp"
#include "mcwc/permcode.hpp"
#include "mcwc/random.hpp"
#include "mcwc/range_coder.hpp"

namespace mcwc {
namespace {

void BM_RangeEncode(benchmark::State& state) {
  const Cdf cdf = LogisticCdf(0.0, 3.0, 127);
  Rng rng(1);
  std::vector<int> syms(1 << 16);
  for (int& s : syms) s = static_cast<int>(rng.Below(cdf.size() - 1));
  for (auto _ : state) {
    RangeEncoder enc;
    for (int s : syms) enc.EncodeSymbol(cdf, s);
    benchmark::DoNotOptimize(enc.Finish());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(syms.size()));
}

void BM_RangeDecode(benchmark::State& state) {
  const Cdf cdf = LogisticCdf(0.0, 3.0, 127);
  Rng rng(2);
  std::vector<int> syms(1 << 16);
  for (int& s : syms) s = static_cast<int>(rng.Below(cdf.size() - 1));
  RangeEncoder enc;
  for (int s : syms) enc.EncodeSymbol(cdf, s);
  const Bytes b = enc.Finish();
  for (auto _ : state) {
    RangeDecoder dec(b.data(), b.size());
    for (size_t i = 0; i < syms.size(); ++i) benchmark::DoNotOptimize(dec.DecodeSymbol(cdf));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(syms.size()));
}

void BM_LogisticCdf(benchmark::State& state) {
  double a = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(LogisticCdf(a, 2.5, static_cast<int>(state.range(0))));
    a += 0.01;
  }
}

void BM_PermStream(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(3);
  const LehmerDigits prev = LehmerEncode(rng.Permutation(n));
  const LehmerDigits curr = LehmerEncode(rng.Permutation(n));
  PermTypeScales scales;
  scales.abs.fill(static_cast<double>(n) / 4);
  scales.delta.fill(static_cast<double>(n) / 4);
  for (auto _ : state) benchmark::DoNotOptimize(EncodePermStream(curr, &prev, scales, kPermThreshold));
}

BENCHMARK(BM_RangeEncode);
BENCHMARK(BM_RangeDecode);
BENCHMARK(BM_LogisticCdf)->Arg(127)->Arg(255);
BENCHMARK(BM_PermStream)->Arg(64)->Arg(512)->Arg(4096);

}  // namespace
}  // namespace mcwc
