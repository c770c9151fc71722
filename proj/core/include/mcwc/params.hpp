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

#ifndef MCWC_PARAMS_HPP_
#define MCWC_PARAMS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mcwc/bytes.hpp"

namespace mcwc {

// Flat parameter vector partitioned into named row-major matrices.
class ParamBank {
 public:
  struct Segment {
    std::string name;
    size_t offset = 0;
    int rows = 0;
    int cols = 0;
  };

  // Returns the offset of the new segment.
  size_t Add(const std::string& name, int rows, int cols);

  double* ptr(size_t offset) { return values_.data() + offset; }
  const double* ptr(size_t offset) const { return values_.data() + offset; }
  const Segment& segment(const std::string& name) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Segment>& segments() const { return segments_; }
  size_t size() const { return values_.size(); }

  // Rounds every value to the nearest f32, the precision stored on disk.
  void RoundToF32();

  // u32 count followed by f32 values. The layout is implied by the owner.
  void Write(ByteWriter* w) const;
  void Read(ByteReader* r);

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

// Adaptive moment estimation with decoupled weight decay. `mask` selects
// which coordinates receive weight decay (empty means all).
class Adam {
 public:
  Adam(size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void Step(std::vector<double>* params, const std::vector<double>& grad, double lr,
            const std::vector<uint8_t>* decay_mask = nullptr);

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  int64_t t_ = 0;
};

// Scales `grad` so its L2 norm is at most `max_norm`; returns the pre-clip
// norm.
double ClipGradNorm(std::vector<double>* grad, double max_norm);

// Linear warmup then cosine decay to zero.
double WarmupCosineLr(double base_lr, int step, int warmup, int total);

}  // namespace mcwc

#endif  // MCWC_PARAMS_HPP_
