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

#ifndef MCWC_DIAGNOSTICS_HPP_
#define MCWC_DIAGNOSTICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcwc/align.hpp"
#include "mcwc/blocks.hpp"
#include "mcwc/container.hpp"
#include "mcwc/predictor.hpp"

namespace mcwc {

struct CosineStats {
  double mean = 0.0;
  double std = 0.0;
};

// Cosines between block i of `prev` and block i of `curr`.
CosineStats CosineProfile(const BlockSet& prev, const BlockSet& curr);

// 1 - sum ||t - p||^2 / sum ||t - mean block||^2 over blocks of length
// `dim`. Throws ZeroVariance with fewer than two blocks or equal targets.
double PredictorR2(std::span<const double> targets, std::span<const double> preds, int dim);
// sum ||t - p||^2 / sum ||t||^2; throws ZeroEnergy.
double NormalizedResidualEnergy(std::span<const double> targets, std::span<const double> preds);

struct PredictabilityRow {
  int layer = 0;
  int type = 0;
  CosineStats cos_before, cos_after;
  double r2_before = 0.0, r2_after = 0.0;
  double nre_before = 0.0, nre_after = 0.0;
};

struct PredictabilityReport {
  std::vector<PredictabilityRow> rows;
  // Aggregates pooled over all rows (cosines: mean of row means).
  double cos_before = 0.0, cos_after = 0.0;
  double r2_before = 0.0, r2_after = 0.0;
  double nre_before = 0.0, nre_after = 0.0;
  double recovered_fraction = -1.0;  // set by callers that know the planted order

  std::string ToCsv() const;
  std::string ToJson() const;
};

enum class DiagnosePredictor { kCopy, kTrained };

struct DiagnoseConfig {
  AlignConfig align;
  DiagnosePredictor predictor = DiagnosePredictor::kCopy;
  TrainConfig train;
  int d_lat = 64;
  int d_emb = 16;
  int hidden = 0;
  uint64_t seed = 0;
};

// Before: canonical order. After: chained alignment. Each side gets its own
// predictor when `predictor` is kTrained.
PredictabilityReport Diagnose(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                              const DiagnoseConfig& cfg,
                              std::vector<std::vector<Permutation>>* perms = nullptr);

enum class Activation { kRelu, kGelu };

// Two-layer MLP y = W2 f(W1 x + b1) + b2 against its hidden-permuted copy.
// Row-major: W1 is h x d_in, W2 is d_out x h, probes is n x d_in. With
// `compensate` false the W2 columns are left unpermuted (negative control).
double VerifyMlpInvariance(const std::vector<double>& w1, const std::vector<double>& b1,
                           const std::vector<double>& w2, const std::vector<double>& b2,
                           int d_in, int hidden, int d_out, const Permutation& perm,
                           const std::vector<double>& probes, Activation act,
                           bool compensate = true);

// Single-sequence softmax attention with H heads of width d_h (d = H * d_h).
// W_Q, W_K, W_V map d -> d (rows are output features grouped by head), W_O
// maps d -> d. Tokens is n x d. With `compensate` false only W_Q is permuted.
double VerifyMhaInvariance(const std::vector<double>& wq, const std::vector<double>& wk,
                           const std::vector<double>& wv, const std::vector<double>& wo,
                           int heads, int d_head, const Permutation& head_perm,
                           const std::vector<double>& tokens, bool compensate = true);

struct DeploymentScenario {
  double baseline_gb = 0.0;
  double compressed_gb = 0.0;
  double bandwidth_gbps = 1.0;
  double decode_s = 0.0;
  double materialize_s = 0.0;  // baseline materialization time
  double encode_s = 0.0;       // extra one-time encode cost
};

// The 16-bit 1.4B-parameter preset with materialization time equal to the
// decode time.
DeploymentScenario PythiaBreakEvenPreset();

// Per-deployment load-time saving in seconds.
double LoadSaving(const DeploymentScenario& s);
// ceil(encode_s / LoadSaving); throws NoBreakEven when the saving is <= 0.
uint64_t BreakEven(const DeploymentScenario& s);
double BitstreamSizeBytes(double num_params, double bits_per_param);

// CSV of |value| counts in buckets [edge_k, edge_{k+1}), last bucket open.
std::string MagnitudeHistogramCsv(std::span<const double> values, const std::vector<double>& edges);

}  // namespace mcwc

#endif  // MCWC_DIAGNOSTICS_HPP_
