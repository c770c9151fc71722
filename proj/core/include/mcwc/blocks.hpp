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

#ifndef MCWC_BLOCKS_HPP_
#define MCWC_BLOCKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mcwc/container.hpp"

namespace mcwc {

// Quantizer channel grouping for a block type.
//   kBlock:  one group per block.
//   kMember: one group per (block, member tensor).
//   kTensor: one group per member tensor, shared by all blocks.
enum class GroupMode : uint8_t { kBlock = 0, kMember = 1, kTensor = 2 };

struct BlockMember {
  std::string tensor;
  int axis = 0;
};

struct BlockTypeSpec {
  uint16_t type_id = 0;
  std::string name;
  std::vector<BlockMember> members;
  GroupMode group_mode = GroupMode::kBlock;
};

// B blocks of d floats each, stored contiguously. A block is the
// concatenation of its member slices, each flattened row-major with the
// block axis removed.
struct BlockSet {
  int layer = 0;
  int type = 0;
  int count = 0;  // B
  int dim = 0;    // d
  std::vector<int> member_sizes;
  std::vector<float> data;

  float* block(int i) { return data.data() + static_cast<size_t>(i) * dim; }
  const float* block(int i) const { return data.data() + static_cast<size_t>(i) * dim; }
};

// 0-based: perm[i] is the input index placed at output slot i.
using Permutation = std::vector<uint32_t>;

// Returns true when every member tensor of `spec` exists in `layer`.
bool LayerHasType(const Layer& layer, const BlockTypeSpec& spec);

// Block count and member slice sizes implied by tensor shapes. Throws
// MissingTensor, AxisOutOfRange or BlockCountMismatch.
void BlockGeometry(const Layer& layer, const BlockTypeSpec& spec, int* count,
                   std::vector<int>* member_sizes);

BlockSet ExtractBlocks(const Layer& layer, const BlockTypeSpec& spec);

// Writes the blocks back into the member tensors of `layer`.
void ScatterBlocks(const BlockSet& bs, const BlockTypeSpec& spec, Layer* layer);

struct TensorShapeEntry {
  std::string name;
  Shape shape;
};

// Allocates tensors from `shapes`, scatters every block set and copies raw
// tensors. Every element must be written exactly once.
Layer AssembleLayer(int index, const std::vector<TensorShapeEntry>& shapes,
                    const std::vector<const BlockSet*>& sets,
                    const std::vector<const BlockTypeSpec*>& specs,
                    const std::vector<Tensor>& raw);

void ValidatePermutation(const Permutation& perm);
Permutation IdentityPermutation(size_t n);
BlockSet ApplyPermutation(const BlockSet& bs, const Permutation& perm);
Permutation InvertPermutation(const Permutation& perm);
// (p o q)(i) = p[q[i]].
Permutation ComposePermutations(const Permutation& p, const Permutation& q);
bool IsIdentity(const Permutation& perm);

Permutation FromOneBased(const std::vector<int>& one_based);
std::vector<int> ToOneBased(const Permutation& perm);

}  // namespace mcwc

#endif  // MCWC_BLOCKS_HPP_
