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

#include "mcwc/codec.hpp"
#include "mcwc/synthetic.hpp"

namespace mcwc {
namespace {

CodecConfig BenchConfig(int k) {
  CodecConfig c;
  c.keyframe_interval = k;
  c.d_lat = 32;
  c.d_emb = 8;
  c.entropy.d_emb = 4;
  c.entropy.hidden = 32;
  c.entropy_fit.steps = 30;
  c.train.steps = 40;
  c.train.warmup = 8;
  return c;
}

void BM_Encode(benchmark::State& state) {
  const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(16, 32, 32, 0.05, 1));
  for (auto _ : state) benchmark::DoNotOptimize(EncodeCheckpoint(m.ckpt, m.specs, BenchConfig(4)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ParamCount(m.ckpt)));
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);

void BM_Decode(benchmark::State& state) {
  const SyntheticModel m = GenerateSynthetic(SmoothDriftConfig(32, 64, 64, 0.05, 2));
  const int k = static_cast<int>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  const Bytes b = EncodeCheckpoint(m.ckpt, m.specs, BenchConfig(k)).bitstream;
  for (auto _ : state) benchmark::DoNotOptimize(DecodeSegmentsParallel(b, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ParamCount(m.ckpt)));
}
BENCHMARK(BM_Decode)->Args({4, 1})->Args({4, 4})->Args({16, 1})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mcwc
