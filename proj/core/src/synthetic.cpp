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

#include "mcwc/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "mcwc/error.hpp"
#include "mcwc/random.hpp"

namespace mcwc {
namespace {

std::string MemberName(const SyntheticType& t, const SyntheticMember& m) {
  return t.name + "." + m.suffix;
}

int BlockWidth(const SyntheticType& t) {
  int w = 0;
  for (const SyntheticMember& m : t.members) w += m.width;
  return w;
}

uint64_t LayerParams(const SyntheticConfig& c, int layer) {
  uint64_t n = static_cast<uint64_t>(c.raw_per_layer) * c.raw_size;
  for (const SyntheticType& t : c.types) {
    n += static_cast<uint64_t>(t.counts[layer]) * BlockWidth(t);
  }
  return n;
}

}  // namespace

SyntheticModel GenerateSynthetic(const SyntheticConfig& cfg) {
  if (cfg.num_layers < 1) Fail(Errc::kInvalidArgument, "synthetic model needs >= 1 layer");
  Rng rng(cfg.seed);
  SyntheticModel out;
  out.ckpt.arch_id = cfg.arch_id;
  out.ckpt.layers.resize(cfg.num_layers);
  for (int l = 0; l < cfg.num_layers; ++l) out.ckpt.layers[l].index = l + 1;

  for (size_t ti = 0; ti < cfg.types.size(); ++ti) {
    const SyntheticType& t = cfg.types[ti];
    if (static_cast<int>(t.counts.size()) != cfg.num_layers) {
      Fail(Errc::kInvalidArgument, "type '" + t.name + "' needs one block count per layer");
    }
    BlockTypeSpec spec;
    spec.type_id = static_cast<uint16_t>(ti);
    spec.name = t.name;
    spec.group_mode = t.group_mode;
    for (const SyntheticMember& m : t.members) spec.members.push_back({MemberName(t, m), m.axis});
    out.specs.push_back(spec);

    const int width = BlockWidth(t);
    const double scale = 0.05 + rng.Uniform();
    std::vector<float> v;  // chain state in chain order
    int chain_count = 0;
    std::vector<Permutation> planted(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l) {
      const int b = t.counts[l];
      if (b <= 0) {
        chain_count = 0;
        continue;
      }
      const bool restart = b != chain_count;
      if (restart) {
        v.resize(static_cast<size_t>(b) * width);
        for (float& x : v) x = static_cast<float>(scale * rng.Normal());
        chain_count = b;
      } else {
        double ss = 0.0;
        for (float x : v) ss += static_cast<double>(x) * x;
        const double sd = cfg.noise * std::sqrt(ss / static_cast<double>(v.size()));
        for (float& x : v) x = static_cast<float>(cfg.decay * x + sd * rng.Normal());
      }
      Permutation rho = IdentityPermutation(b);
      if (cfg.plant_permutations && !restart) rho = rng.Permutation(b);
      planted[l] = rho;

      BlockSet chain;
      chain.layer = l + 1;
      chain.count = b;
      chain.dim = width;
      for (const SyntheticMember& m : t.members) chain.member_sizes.push_back(m.width);
      chain.data = v;
      const BlockSet stored = ApplyPermutation(chain, rho);

      Layer& layer = out.ckpt.layers[l];
      for (const SyntheticMember& m : t.members) {
        Tensor tensor;
        tensor.name = MemberName(t, m);
        tensor.shape = m.axis == 0 ? Shape{b, m.width} : Shape{m.width, b};
        tensor.data.assign(static_cast<size_t>(b) * m.width, 0.0f);
        layer.tensors.push_back(std::move(tensor));
      }
      ScatterBlocks(stored, spec, &layer);
    }
    out.planted.push_back(std::move(planted));
  }

  for (int l = 0; l < cfg.num_layers; ++l) {
    for (int k = 0; k < cfg.raw_per_layer; ++k) {
      Tensor tensor;
      tensor.name = "raw" + std::to_string(k);
      tensor.shape = {cfg.raw_size};
      tensor.data.resize(cfg.raw_size);
      for (float& x : tensor.data) x = static_cast<float>(0.1 * rng.Normal());
      out.ckpt.layers[l].tensors.push_back(std::move(tensor));
    }
    if (out.ckpt.layers[l].tensors.empty()) {
      Tensor tensor{"pad", {1}, {0.0f}};
      out.ckpt.layers[l].tensors.push_back(std::move(tensor));
    }
  }
  return out;
}

SyntheticConfig SmoothDriftConfig(int num_layers, int blocks, int width, double noise,
                                  uint64_t seed) {
  SyntheticConfig c;
  c.num_layers = num_layers;
  c.noise = noise;
  c.seed = seed;
  SyntheticType t;
  t.name = "ffn";
  t.members = {{"w", width, 0}};
  t.counts.assign(num_layers, blocks);
  c.types.push_back(t);
  return c;
}

SyntheticConfig RandomSyntheticConfig(uint64_t seed, uint64_t max_params) {
  Rng rng(seed ^ 0x5A5A5A5A5A5A5A5Aull);
  SyntheticConfig c;
  c.seed = seed;
  c.arch_id = static_cast<uint32_t>(rng.Below(1u << 16));
  c.num_layers = 2 + static_cast<int>(rng.Below(31));
  const int nt = 1 + static_cast<int>(rng.Below(4));
  std::vector<int> base_counts;
  for (int t = 0; t < nt; ++t) {
    SyntheticType ty;
    ty.name = "t" + std::to_string(t);
    const int nm = 1 + static_cast<int>(rng.Below(3));
    for (int m = 0; m < nm; ++m) {
      ty.members.push_back({"m" + std::to_string(m), 1 + static_cast<int>(rng.Below(12)),
                            static_cast<int>(rng.Below(2))});
    }
    ty.group_mode = static_cast<GroupMode>(rng.Below(3));
    c.types.push_back(ty);
    base_counts.push_back(1 + static_cast<int>(rng.Below(32)));
  }
  c.raw_per_layer = static_cast<int>(rng.Below(3));
  c.raw_size = 1 + static_cast<int>(rng.Below(40));
  c.noise = rng.Uniform(0.01, 0.2);
  c.decay = rng.Uniform(0.9, 1.0);

  // Layout events, decided before the layer count is capped.
  std::vector<int> gap(nt, -1), change(nt, -1), changed_count(nt, 0);
  for (int t = 0; t < nt; ++t) {
    if (rng.Uniform() < 0.2) gap[t] = static_cast<int>(rng.Below(c.num_layers));
    if (rng.Uniform() < 0.2) {
      change[t] = 1 + static_cast<int>(rng.Below(c.num_layers));
      changed_count[t] = 1 + static_cast<int>(rng.Below(32));
    }
  }
  auto fill_counts = [&]() {
    for (int t = 0; t < nt; ++t) {
      std::vector<int>& counts = c.types[t].counts;
      counts.assign(c.num_layers, base_counts[t]);
      for (int l = 0; l < c.num_layers; ++l) {
        if (change[t] >= 0 && l >= change[t]) counts[l] = changed_count[t];
        if (l == gap[t]) counts[l] = 0;
      }
    }
  };
  fill_counts();
  for (;;) {
    uint64_t total = 0;
    for (int l = 0; l < c.num_layers; ++l) total += LayerParams(c, l);
    if (total <= max_params) break;
    if (c.num_layers > 2) {
      c.num_layers = std::max(2, c.num_layers * 3 / 4);
    } else {
      for (int& b : base_counts) b = std::max(1, b / 2);
      for (int& b : changed_count) b = std::max(1, b / 2);
      c.raw_size = std::max(1, c.raw_size / 2);
    }
    fill_counts();
  }
  return c;
}

}  // namespace mcwc
