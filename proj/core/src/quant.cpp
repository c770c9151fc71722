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

#include "mcwc/quant.hpp"

#include <cmath>

#include "mcwc/error.hpp"

namespace mcwc {

QuantizerParams InitQuantizer(std::span<const double> values, std::vector<uint32_t> group_of,
                              size_t num_groups, double gamma, int qmax, bool learned_means) {
  if (!(gamma > 0.0)) Fail(Errc::kInvalidArgument, "gamma must be positive");
  if (qmax < 1) Fail(Errc::kInvalidArgument, "qmax must be >= 1");
  if (group_of.size() != values.size()) Fail(Errc::kLengthMismatch, "group map size");
  std::vector<double> sum(num_groups, 0.0), ss(num_groups, 0.0);
  std::vector<uint64_t> count(num_groups, 0);
  for (size_t k = 0; k < values.size(); ++k) {
    const uint32_t g = group_of[k];
    if (g >= num_groups) Fail(Errc::kInvalidArgument, "group index out of range");
    sum[g] += values[k];
    ++count[g];
  }
  std::vector<double> mean(num_groups);
  for (size_t g = 0; g < num_groups; ++g) {
    if (count[g] == 0) Fail(Errc::kEmptyGroup, "group " + std::to_string(g) + " has no elements");
    mean[g] = sum[g] / static_cast<double>(count[g]);
  }
  for (size_t k = 0; k < values.size(); ++k) {
    const double d = values[k] - mean[group_of[k]];
    ss[group_of[k]] += d * d;
  }
  QuantizerParams q;
  q.qmax = qmax;
  q.group_of = std::move(group_of);
  q.step.resize(num_groups);
  q.mean.assign(num_groups, 0.0f);
  for (size_t g = 0; g < num_groups; ++g) {
    const double sd = std::sqrt(ss[g] / static_cast<double>(count[g]));
    const double s = gamma * sd;
    q.step[g] = static_cast<float>(s < kStepFloor ? kStepFloor : s);
    if (learned_means) q.mean[g] = static_cast<float>(mean[g]);
  }
  return q;
}

QuantizerParams FixedQuantizer(std::vector<float> steps, std::vector<float> means,
                               std::vector<uint32_t> group_of, int qmax) {
  if (means.empty()) means.assign(steps.size(), 0.0f);
  if (means.size() != steps.size()) Fail(Errc::kLengthMismatch, "steps and means");
  for (float s : steps) {
    if (!(s > 0.0f) || !std::isfinite(s)) Fail(Errc::kInvalidArgument, "step must be positive");
  }
  for (uint32_t g : group_of) {
    if (g >= steps.size()) Fail(Errc::kInvalidArgument, "group index out of range");
  }
  QuantizerParams q;
  q.step = std::move(steps);
  q.mean = std::move(means);
  q.group_of = std::move(group_of);
  q.qmax = qmax;
  return q;
}

std::vector<int> Quantize(std::span<const double> r, const QuantizerParams& q, uint64_t* clips) {
  if (r.size() != q.group_of.size()) Fail(Errc::kLengthMismatch, "values vs group map");
  std::vector<int> c(r.size());
  uint64_t n = 0;
  for (size_t k = 0; k < r.size(); ++k) {
    const uint32_t g = q.group_of[k];
    bool clipped = false;
    c[k] = QuantizeValue(r[k], q.step[g], q.mean[g], q.qmax, &clipped);
    n += clipped;
  }
  if (clips) *clips = n;
  return c;
}

std::vector<double> Dequantize(std::span<const int> c, const QuantizerParams& q) {
  if (c.size() != q.group_of.size()) Fail(Errc::kLengthMismatch, "codes vs group map");
  std::vector<double> r(c.size());
  for (size_t k = 0; k < c.size(); ++k) {
    if (c[k] > q.qmax || c[k] < -q.qmax) {
      Fail(Errc::kCodeOutOfRange, "code " + std::to_string(c[k]));
    }
    const uint32_t g = q.group_of[k];
    r[k] = DequantizeValue(c[k], q.step[g], q.mean[g]);
  }
  return r;
}

void WriteQInfoInline(const QuantizerParams& q, bool with_means, ByteWriter* w) {
  w->U8(with_means ? 0x2 : 0x0);
  w->U32(static_cast<uint32_t>(q.step.size()));
  for (float s : q.step) w->F32(s);
  if (with_means) {
    for (float m : q.mean) w->F32(m);
  }
}

void WriteQInfoShared(uint16_t table_id, ByteWriter* w) {
  w->U8(0x1);
  w->U16(table_id);
}

}  // namespace mcwc
