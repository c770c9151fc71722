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

#ifndef MCWC_QUANT_HPP_
#define MCWC_QUANT_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mcwc/bytes.hpp"

namespace mcwc {

constexpr int kResidualQmax = 127;
constexpr int kKeyframeQmax = 255;
constexpr double kStepFloor = 1e-8;

struct QuantizerParams {
  std::vector<float> step;   // per group, > 0
  std::vector<float> mean;   // per group
  std::vector<uint32_t> group_of;  // element -> group
  int qmax = kResidualQmax;

  size_t groups() const { return step.size(); }
};

// s = gamma * population std per group (floored), m = per-group mean when
// `learned_means`, else 0. Throws EmptyGroup for a group with no elements.
QuantizerParams InitQuantizer(std::span<const double> values, std::vector<uint32_t> group_of,
                              size_t num_groups, double gamma, int qmax, bool learned_means);

// Groups with caller-supplied steps (fixed-step mode and shared tables).
QuantizerParams FixedQuantizer(std::vector<float> steps, std::vector<float> means,
                               std::vector<uint32_t> group_of, int qmax);

// Round half away from zero, then clamp to [-qmax, qmax].
inline int QuantizeValue(double r, double step, double mean, int qmax, bool* clipped) {
  const double q = std::round((r - mean) / step);
  if (q > qmax) {
    *clipped = true;
    return qmax;
  }
  if (q < -qmax) {
    *clipped = true;
    return -qmax;
  }
  return static_cast<int>(q);
}

inline double DequantizeValue(int c, double step, double mean) { return step * c + mean; }

// Returns codes; `clips` receives the number of clamped elements.
std::vector<int> Quantize(std::span<const double> r, const QuantizerParams& q, uint64_t* clips);
// Throws CodeOutOfRange for |c| > qmax.
std::vector<double> Dequantize(std::span<const int> c, const QuantizerParams& q);

// QInfo record: flag byte (bit0 shared table, bit1 means present), then
// either a u16 table id, or a u32 group count and f32 arrays.
void WriteQInfoInline(const QuantizerParams& q, bool with_means, ByteWriter* w);
void WriteQInfoShared(uint16_t table_id, ByteWriter* w);

}  // namespace mcwc

#endif  // MCWC_QUANT_HPP_
