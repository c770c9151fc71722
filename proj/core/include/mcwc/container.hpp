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

#ifndef MCWC_CONTAINER_HPP_
#define MCWC_CONTAINER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mcwc/bytes.hpp"

namespace mcwc {

using Shape = std::vector<int64_t>;

int64_t ShapeNumel(const Shape& shape);
std::string ShapeString(const Shape& shape);

struct Tensor {
  std::string name;
  Shape shape;
  std::vector<float> data;  // row-major

  int64_t numel() const { return ShapeNumel(shape); }
};

struct Layer {
  int index = 0;  // 1-based
  std::vector<Tensor> tensors;

  const Tensor* Find(const std::string& name) const;
  Tensor* Find(const std::string& name);
};

struct Checkpoint {
  uint32_t arch_id = 0;
  std::vector<Layer> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
};

// Throws InvalidCheckpoint on structural violations and NonFiniteValue on
// NaN/Inf entries.
void ValidateCheckpoint(const Checkpoint& ckpt);

Bytes SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(const uint8_t* data, size_t size);

Checkpoint LoadCheckpoint(const std::string& path);
void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);

uint64_t ParamCount(const Checkpoint& ckpt);

// Whole-file helpers shared with the codec and CLI. WriteFileAtomic writes a
// sibling temporary file and renames it over the target.
Bytes ReadFile(const std::string& path);
void WriteFileAtomic(const std::string& path, const Bytes& bytes);

}  // namespace mcwc

#endif  // MCWC_CONTAINER_HPP_
