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

#include "mcwc/align.hpp"
#include "mcwc/random.hpp"

namespace mcwc {
namespace {

SimilarityMatrix RandomMatrix(int n, uint64_t seed) {
  Rng rng(seed);
  SimilarityMatrix s;
  s.n = n;
  s.s.resize(static_cast<size_t>(n) * n);
  for (double& v : s.s) v = rng.Uniform(-1.0, 1.0);
  return s;
}

void BM_SolveExact(benchmark::State& state) {
  const SimilarityMatrix s = RandomMatrix(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(SolveExact(s));
}
BENCHMARK(BM_SolveExact)->RangeMultiplier(2)->Range(16, 512);

void BM_SolveScreened(benchmark::State& state) {
  const SimilarityMatrix s = RandomMatrix(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(SolveScreened(s, 16, 1));
}
BENCHMARK(BM_SolveScreened)->RangeMultiplier(2)->Range(16, 1024);

void BM_WeightSimilarity(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  BlockSet a, b;
  a.count = b.count = n;
  a.dim = b.dim = 256;
  a.data.resize(static_cast<size_t>(n) * 256);
  b.data.resize(a.data.size());
  for (float& v : a.data) v = static_cast<float>(rng.Normal());
  for (float& v : b.data) v = static_cast<float>(rng.Normal());
  for (auto _ : state) benchmark::DoNotOptimize(WeightSimilarity(a, b));
}
BENCHMARK(BM_WeightSimilarity)->Arg(64)->Arg(256);

}  // namespace
}  // namespace mcwc
