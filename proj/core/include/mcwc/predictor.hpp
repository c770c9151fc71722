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

#ifndef MCWC_PREDICTOR_HPP_
#define MCWC_PREDICTOR_HPP_

#include <cstdint>
#include <vector>

#include "mcwc/entropy.hpp"
#include "mcwc/params.hpp"
#include "mcwc/quant.hpp"
#include "mcwc/random.hpp"

namespace mcwc {

struct PredictorDims {
  int num_layers = 1;
  std::vector<int> type_dims;  // d_t per block type
  int d_lat = 256;
  int d_emb = 64;
  int hidden = 0;  // 0 means 4 * d_lat
};

// g_theta: z = P_t u + p_t + A_l e_l + A_t e_t; h = z + W2 gelu(W1 z + b1) + b2;
// y = O_t h + o_t.
class Predictor {
 public:
  Predictor() = default;
  // copy_init: P_t/O_t an orthonormal pair, A = 0 and W2 = 0, so the initial
  // prediction reproduces the input on the span of P_t.
  Predictor(const PredictorDims& dims, uint64_t seed, bool copy_init = true);

  const PredictorDims& dims() const { return dims_; }
  int hidden() const { return dims_.hidden; }
  ParamBank& bank() { return bank_; }
  const ParamBank& bank() const { return bank_; }

  // `layer` is the 1-based index of the layer being predicted.
  void Predict(const float* prev, int layer, int type, double* out) const;

  struct Cache {
    std::vector<double> u, z, pre, act, h;
  };
  void Forward(const float* prev, int layer, int type, Cache* cache, double* out) const;
  void Backward(int layer, int type, const Cache& cache, const double* d_out,
                std::vector<double>* grad) const;

 private:
  void CheckArgs(int layer, int type) const;

  struct TypeOffsets {
    size_t p, pb, o, ob;
  };
  PredictorDims dims_;
  ParamBank bank_;
  std::vector<TypeOffsets> types_;
  size_t a_l_ = 0, a_t_ = 0, e_l_ = 0, e_t_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

struct TrainPair {
  const float* prev = nullptr;
  const float* target = nullptr;
  int layer = 2;
  int type = 0;
  // Element -> local quantizer group within the block (rate phase only).
  const std::vector<uint32_t>* local_group = nullptr;
  int local_groups = 1;
};

struct TrainConfig {
  int steps = 2000;       // predictor-only phase
  int joint_steps = 0;    // rate-distortion phase, used when lambda > 0
  double lr = 1e-3;
  double weight_decay = 1e-2;
  int warmup = 500;
  double clip_norm = 1.0;
  int batch = 64;
  uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> loss;  // per step
};

// Mean squared residual per element over `pairs`, and its gradient.
double ResidualLoss(const Predictor& pred, const std::vector<TrainPair>& pairs,
                    std::vector<double>* grad);

// Stateful trainer so callers can interleave re-alignment between chunks.
class PredictorTrainer {
 public:
  PredictorTrainer(Predictor* pred, const TrainConfig& cfg, int total_steps);
  // Runs `n` residual-energy steps on mini-batches drawn from `pairs`.
  void Run(const std::vector<TrainPair>& pairs, int n, TrainReport* report);
  int step() const { return step_; }

 private:
  Predictor* pred_;
  TrainConfig cfg_;
  int total_;
  int step_ = 0;
  Adam adam_;
  Rng rng_;
};

struct RateTrainSetup {
  double lambda = 0.0;
  bool fixed_step = false;
  double gamma = 0.8;        // std-mode step scale
  double fixed_step_value = 0.0;
  int qmax = kResidualQmax;
  int num_types = 1;
};

struct RateTrainResult {
  std::vector<double> log_step_scale;  // kappa_t per type
  TrainReport report;
};

// Joint phase: loss = D + lambda * bits with uniform-noise quantization.
// Trains theta, psi and per-type log step multipliers (frozen in fixed-step
// mode). Contexts are computed from the current prediction without gradient.
RateTrainResult TrainRateDistortion(Predictor* pred, EntropyModel* psi,
                                    const std::vector<TrainPair>& pairs,
                                    const RateTrainSetup& setup, const TrainConfig& cfg);

// Central-difference check of ResidualLoss gradients over `coords` random
// coordinates; returns the max relative error. `fault_scale` multiplies the
// analytic gradient (negative controls).
double GradientCheck(const Predictor& pred, const std::vector<TrainPair>& probe, double eps,
                     int coords, uint64_t seed, double fault_scale = 1.0);

}  // namespace mcwc

#endif  // MCWC_PREDICTOR_HPP_
