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

#ifndef MCWC_ENTROPY_HPP_
#define MCWC_ENTROPY_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mcwc/params.hpp"
#include "mcwc/range_coder.hpp"

namespace mcwc {

constexpr double kBetaFloor = 1e-3;
constexpr double kPmfFloor = 1.0 / 65536.0;

// Discretized logistic over [-qmax, qmax]: CDF differences at half-integer
// edges, edge bins absorbing the tails, floored at kPmfFloor and
// renormalized. Index k holds code k - qmax.
std::vector<double> LogisticPmfTable(double alpha, double beta, int qmax);
double LogisticPmf(int c, double alpha, double beta, int qmax);
Cdf LogisticCdf(double alpha, double beta, int qmax);

struct SymbolContext {
  int layer = 1;  // 1-based
  int type = 0;   // block type index; the raw-tensor type is the last index
  double step = 1.0;
  double mu = 0.0;
  double sigma = 0.0;
  bool keyframe = false;
};

// Predictive contexts carry population stats of the predicted values;
// keyframe contexts zero them. Throws MissingPrediction for a predictive
// context without values.
SymbolContext BuildContext(int layer, int type, double step, std::span<const double> predicted,
                           bool keyframe);
// No-prediction baseline: stats of the pre-quantization values themselves.
SymbolContext BuildBaselineContext(int layer, int type, double step,
                                   std::span<const float> values);

struct EntropyDims {
  int num_layers = 1;
  int num_types = 1;  // including the raw-tensor type
  int d_emb = 8;
  int hidden = 128;
};

// Context MLP h_psi: features -> hidden (GELU) -> (alpha, raw beta).
class EntropyModel {
 public:
  static constexpr int kExtraFeatures = 4;

  EntropyModel() = default;
  EntropyModel(const EntropyDims& dims, uint64_t seed);

  const EntropyDims& dims() const { return dims_; }
  ParamBank& bank() { return bank_; }
  const ParamBank& bank() const { return bank_; }

  void Predict(const SymbolContext& ctx, double* alpha, double* beta) const;

  struct Cache {
    std::vector<double> feat, pre, act;
    double out1 = 0.0;
  };
  void Forward(const SymbolContext& ctx, Cache* cache, double* alpha, double* beta) const;
  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(alpha, beta).
  void Backward(const SymbolContext& ctx, const Cache& cache, double d_alpha, double d_beta,
                std::vector<double>* grad) const;

 private:
  int in_dim() const { return 2 * dims_.d_emb + kExtraFeatures; }
  void Features(const SymbolContext& ctx, double* f) const;

  EntropyDims dims_;
  ParamBank bank_;
  size_t e_layer_ = 0, e_type_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

// Natural-log likelihood of code c under the unfloored discretized logistic,
// with gradients. Used for fitting.
double CodeNll(int c, double alpha, double beta, int qmax, double* d_alpha, double* d_beta);

// Sparse code histogram for one context.
struct ContextHistogram {
  SymbolContext ctx;
  int qmax = 127;
  std::vector<std::pair<int, uint32_t>> counts;  // (code, count)
};

struct EntropyFitConfig {
  int steps = 200;
  double lr = 1e-2;
  uint64_t seed = 0;
};

struct FitReport {
  double initial_bits_per_symbol = 0.0;
  double final_bits_per_symbol = 0.0;
  std::vector<double> history;  // bits/symbol per step
};

FitReport FitEntropyModel(EntropyModel* model, const std::vector<ContextHistogram>& data,
                          const EntropyFitConfig& cfg);

// Sum of -log2 p over all histogram entries using the floored pmf.
double CodelengthProxy(const EntropyModel& model, const std::vector<ContextHistogram>& data);
double CodelengthProxy(std::span<const int> codes, std::span<const double> alphas,
                       std::span<const double> betas, int qmax);

}  // namespace mcwc

#endif  // MCWC_ENTROPY_HPP_
