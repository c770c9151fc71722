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

#include "mcwc/blocks.hpp"

#include <algorithm>
#include <numeric>

#include "mcwc/error.hpp"

namespace mcwc {
namespace {

// Row-major strides split around the block axis: outer (dims before axis)
// and inner (dims after axis).
struct AxisSplit {
  int64_t outer = 1;
  int64_t axis_len = 1;
  int64_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  AxisSplit s;
  for (int k = 0; k < axis; ++k) s.outer *= shape[k];
  s.axis_len = shape[axis];
  for (size_t k = axis + 1; k < shape.size(); ++k) s.inner *= shape[k];
  return s;
}

const Tensor& MemberTensor(const Layer& layer, const BlockMember& m) {
  const Tensor* t = layer.Find(m.tensor);
  if (!t) {
    Fail(Errc::kMissingTensor, "tensor '" + m.tensor + "' missing in layer " +
                                   std::to_string(layer.index));
  }
  if (m.axis < 0 || m.axis >= static_cast<int>(t->shape.size())) {
    Fail(Errc::kAxisOutOfRange, "axis " + std::to_string(m.axis) + " for tensor '" + m.tensor +
                                    "' of rank " + std::to_string(t->shape.size()));
  }
  return *t;
}

}  // namespace

bool LayerHasType(const Layer& layer, const BlockTypeSpec& spec) {
  for (const BlockMember& m : spec.members) {
    if (!layer.Find(m.tensor)) return false;
  }
  return !spec.members.empty();
}

void BlockGeometry(const Layer& layer, const BlockTypeSpec& spec, int* count,
                   std::vector<int>* member_sizes) {
  if (spec.members.empty()) Fail(Errc::kInvalidArgument, "block type '" + spec.name + "' has no members");
  member_sizes->clear();
  int64_t b = -1;
  for (const BlockMember& m : spec.members) {
    const Tensor& t = MemberTensor(layer, m);
    const AxisSplit s = SplitAt(t.shape, m.axis);
    if (b >= 0 && s.axis_len != b) {
      Fail(Errc::kBlockCountMismatch, "type '" + spec.name + "': tensor '" + m.tensor + "' has " +
                                          std::to_string(s.axis_len) + " blocks, expected " +
                                          std::to_string(b));
    }
    b = s.axis_len;
    member_sizes->push_back(static_cast<int>(s.outer * s.inner));
  }
  *count = static_cast<int>(b);
}

BlockSet ExtractBlocks(const Layer& layer, const BlockTypeSpec& spec) {
  BlockSet bs;
  bs.layer = layer.index;
  BlockGeometry(layer, spec, &bs.count, &bs.member_sizes);
  bs.dim = std::accumulate(bs.member_sizes.begin(), bs.member_sizes.end(), 0);
  bs.data.resize(static_cast<size_t>(bs.count) * bs.dim);
  int base = 0;
  for (size_t mi = 0; mi < spec.members.size(); ++mi) {
    const Tensor& t = MemberTensor(layer, spec.members[mi]);
    const AxisSplit s = SplitAt(t.shape, spec.members[mi].axis);
    for (int64_t i = 0; i < s.axis_len; ++i) {
      float* dst = bs.block(static_cast<int>(i)) + base;
      for (int64_t o = 0; o < s.outer; ++o) {
        const float* src = t.data.data() + (o * s.axis_len + i) * s.inner;
        std::copy(src, src + s.inner, dst + o * s.inner);
      }
    }
    base += bs.member_sizes[mi];
  }
  return bs;
}

void ScatterBlocks(const BlockSet& bs, const BlockTypeSpec& spec, Layer* layer) {
  int base = 0;
  for (size_t mi = 0; mi < spec.members.size(); ++mi) {
    Tensor* t = layer->Find(spec.members[mi].tensor);
    if (!t) Fail(Errc::kMissingTensor, "tensor '" + spec.members[mi].tensor + "'");
    const AxisSplit s = SplitAt(t->shape, spec.members[mi].axis);
    if (s.axis_len != bs.count) {
      Fail(Errc::kIncompleteBlockSet, "type '" + spec.name + "' has " + std::to_string(bs.count) +
                                          " blocks, tensor axis has " +
                                          std::to_string(s.axis_len));
    }
    if (mi >= bs.member_sizes.size() || s.outer * s.inner != bs.member_sizes[mi]) {
      Fail(Errc::kShapeMismatch, "member slice size for '" + spec.members[mi].tensor + "'");
    }
    for (int64_t i = 0; i < s.axis_len; ++i) {
      const float* src = bs.block(static_cast<int>(i)) + base;
      for (int64_t o = 0; o < s.outer; ++o) {
        float* dst = t->data.data() + (o * s.axis_len + i) * s.inner;
        std::copy(src + o * s.inner, src + (o + 1) * s.inner, dst);
      }
    }
    base += bs.member_sizes[mi];
  }
}

Layer AssembleLayer(int index, const std::vector<TensorShapeEntry>& shapes,
                    const std::vector<const BlockSet*>& sets,
                    const std::vector<const BlockTypeSpec*>& specs,
                    const std::vector<Tensor>& raw) {
  if (sets.size() != specs.size()) Fail(Errc::kInvalidArgument, "sets/specs size mismatch");
  Layer layer;
  layer.index = index;
  for (const TensorShapeEntry& e : shapes) {
    Tensor t;
    t.name = e.name;
    t.shape = e.shape;
    t.data.assign(static_cast<size_t>(t.numel()), 0.0f);
    layer.tensors.push_back(std::move(t));
  }
  std::vector<int> written(shapes.size(), 0);
  auto mark = [&](const std::string& name) {
    for (size_t k = 0; k < shapes.size(); ++k) {
      if (shapes[k].name == name) {
        ++written[k];
        return;
      }
    }
    Fail(Errc::kShapeMismatch, "tensor '" + name + "' not in layer shapes");
  };
  for (size_t s = 0; s < sets.size(); ++s) {
    const BlockSet& bs = *sets[s];
    int expected = 0;
    std::vector<int> sizes;
    BlockGeometry(layer, *specs[s], &expected, &sizes);
    if (bs.count != expected || static_cast<int64_t>(bs.data.size()) !=
                                    static_cast<int64_t>(bs.count) * bs.dim) {
      Fail(Errc::kIncompleteBlockSet, "type '" + specs[s]->name + "' in layer " +
                                          std::to_string(index) + ": " +
                                          std::to_string(bs.count) + " of " +
                                          std::to_string(expected) + " blocks");
    }
    ScatterBlocks(bs, *specs[s], &layer);
    for (const BlockMember& m : specs[s]->members) mark(m.tensor);
  }
  for (const Tensor& r : raw) {
    Tensor* t = layer.Find(r.name);
    if (!t) Fail(Errc::kShapeMismatch, "raw tensor '" + r.name + "' not in layer shapes");
    if (t->shape != r.shape) Fail(Errc::kShapeMismatch, "raw tensor '" + r.name + "' shape");
    t->data = r.data;
    mark(r.name);
  }
  for (size_t k = 0; k < shapes.size(); ++k) {
    if (written[k] != 1) {
      Fail(Errc::kIncompleteBlockSet, "tensor '" + shapes[k].name + "' written " +
                                          std::to_string(written[k]) + " times");
    }
  }
  return layer;
}

void ValidatePermutation(const Permutation& perm) {
  std::vector<uint8_t> seen(perm.size(), 0);
  for (uint32_t v : perm) {
    if (v >= perm.size() || seen[v]) Fail(Errc::kNotBijection, "permutation is not a bijection");
    seen[v] = 1;
  }
}

Permutation IdentityPermutation(size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0u);
  return p;
}

BlockSet ApplyPermutation(const BlockSet& bs, const Permutation& perm) {
  if (static_cast<int>(perm.size()) != bs.count) {
    Fail(Errc::kLengthMismatch, "permutation length " + std::to_string(perm.size()) + " vs " +
                                    std::to_string(bs.count) + " blocks");
  }
  ValidatePermutation(perm);
  BlockSet out = bs;
  for (int i = 0; i < bs.count; ++i) {
    std::copy(bs.block(static_cast<int>(perm[i])), bs.block(static_cast<int>(perm[i])) + bs.dim,
              out.block(i));
  }
  return out;
}

Permutation InvertPermutation(const Permutation& perm) {
  ValidatePermutation(perm);
  Permutation inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<uint32_t>(i);
  return inv;
}

Permutation ComposePermutations(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size()) Fail(Errc::kLengthMismatch, "compose length mismatch");
  Permutation r(p.size());
  for (size_t i = 0; i < p.size(); ++i) r[i] = p[q[i]];
  return r;
}

bool IsIdentity(const Permutation& perm) {
  for (size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != i) return false;
  }
  return true;
}

Permutation FromOneBased(const std::vector<int>& one_based) {
  Permutation p(one_based.size());
  for (size_t i = 0; i < one_based.size(); ++i) {
    if (one_based[i] < 1) Fail(Errc::kNotBijection, "one-based entry below 1");
    p[i] = static_cast<uint32_t>(one_based[i] - 1);
  }
  ValidatePermutation(p);
  return p;
}

std::vector<int> ToOneBased(const Permutation& perm) {
  std::vector<int> v(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) v[i] = static_cast<int>(perm[i]) + 1;
  return v;
}

}  // namespace mcwc
