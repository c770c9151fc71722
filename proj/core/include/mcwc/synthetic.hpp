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

#ifndef MCWC_SYNTHETIC_HPP_
#define MCWC_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mcwc/blocks.hpp"
#include "mcwc/container.hpp"

namespace mcwc {

// A member tensor of a synthetic block type: shape [B, width] when axis is 0,
// [width, B] when axis is 1.
struct SyntheticMember {
  std::string suffix;
  int width = 1;
  int axis = 0;
};

struct SyntheticType {
  std::string name;
  std::vector<SyntheticMember> members;
  GroupMode group_mode = GroupMode::kBlock;
  // Block count per layer; 0 means the type is absent there. A count change
  // restarts the drift chain.
  std::vector<int> counts;
};

struct SyntheticConfig {
  int num_layers = 24;
  std::vector<SyntheticType> types;
  int raw_per_layer = 0;
  int raw_size = 16;
  double decay = 1.0;
  double noise = 0.05;  // per-step drift std relative to the block rms
  bool plant_permutations = true;
  uint32_t arch_id = 0;
  uint64_t seed = 0;
};

// Layer l of each type is V_l = decay * V_{l-1} + N(0, (noise * rms)^2),
// stored in the order rho_l (rho at a chain start is the identity).
struct SyntheticModel {
  Checkpoint ckpt;
  std::vector<BlockTypeSpec> specs;
  // planted[t][l - 1] = rho; empty where the type is absent. The alignment
  // that restores chain order is its inverse.
  std::vector<std::vector<Permutation>> planted;
};

SyntheticModel GenerateSynthetic(const SyntheticConfig& cfg);

// One block type with `blocks` blocks of `width` floats (a single member,
// axis 0), present in every layer.
SyntheticConfig SmoothDriftConfig(int num_layers, int blocks, int width, double noise,
                                  uint64_t seed);

// Randomized layouts for round-trip testing: 2-32 layers, 1-4 block types,
// mixed member axes and group modes, occasional absent layers and block
// count changes, raw tensors, at most `max_params` parameters.
SyntheticConfig RandomSyntheticConfig(uint64_t seed, uint64_t max_params = 100000);

}  // namespace mcwc

#endif  // MCWC_SYNTHETIC_HPP_
