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

#include "mcwc/params.hpp"

#include <cmath>

#include "mcwc/error.hpp"

namespace mcwc {

size_t ParamBank::Add(const std::string& name, int rows, int cols) {
  Segment s;
  s.name = name;
  s.offset = values_.size();
  s.rows = rows;
  s.cols = cols;
  segments_.push_back(s);
  values_.resize(values_.size() + static_cast<size_t>(rows) * cols, 0.0);
  return s.offset;
}

const ParamBank::Segment& ParamBank::segment(const std::string& name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return s;
  }
  Fail(Errc::kInvalidArgument, "no parameter segment '" + name + "'");
}

void ParamBank::RoundToF32() {
  for (double& v : values_) v = static_cast<double>(static_cast<float>(v));
}

void ParamBank::Write(ByteWriter* w) const {
  w->U32(static_cast<uint32_t>(values_.size()));
  for (double v : values_) w->F32(static_cast<float>(v));
}

void ParamBank::Read(ByteReader* r) {
  const uint32_t n = r->U32();
  if (n != values_.size()) {
    Fail(Errc::kCorruptStream, "parameter count " + std::to_string(n) + ", expected " +
                                   std::to_string(values_.size()));
  }
  for (double& v : values_) {
    const float f = r->F32();
    if (!std::isfinite(f)) Fail(Errc::kCorruptStream, "non-finite model parameter");
    v = f;
  }
}

void Adam::Step(std::vector<double>* params, const std::vector<double>& grad, double lr,
                const std::vector<uint8_t>* decay_mask) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::vector<double>& p = *params;
  for (size_t k = 0; k < p.size(); ++k) {
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
    const double mh = m_[k] / bc1;
    const double vh = v_[k] / bc2;
    if (cfg_.weight_decay > 0.0 && (!decay_mask || (*decay_mask)[k])) {
      p[k] -= lr * cfg_.weight_decay * p[k];
    }
    p[k] -= lr * mh / (std::sqrt(vh) + cfg_.eps);
  }
}

double ClipGradNorm(std::vector<double>* grad, double max_norm) {
  double ss = 0.0;
  for (double g : *grad) ss += g * g;
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : *grad) g *= scale;
  }
  return norm;
}

double WarmupCosineLr(double base_lr, int step, int warmup, int total) {
  if (warmup > 0 && step < warmup) return base_lr * (step + 1) / warmup;
  const int span = total - warmup;
  if (span <= 0) return base_lr;
  const double t = static_cast<double>(step - warmup) / span;
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

}  // namespace mcwc
