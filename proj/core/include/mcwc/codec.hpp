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

#ifndef MCWC_CODEC_HPP_
#define MCWC_CODEC_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcwc/align.hpp"
#include "mcwc/blocks.hpp"
#include "mcwc/bytes.hpp"
#include "mcwc/container.hpp"
#include "mcwc/entropy.hpp"
#include "mcwc/predictor.hpp"

namespace mcwc {

constexpr uint16_t kFormatVersion = 1;
constexpr uint16_t kRawType = 0xFFFF;

inline bool IsKeyframe(int layer, int k) { return (layer - 1) % k == 0; }
inline int SegmentCount(int num_layers, int k) { return (num_layers + k - 1) / k; }

enum class StepMode : uint8_t { kStd = 0, kFixed = 1 };

struct CodecConfig {
  int keyframe_interval = 4;
  double lambda = 0.0;
  AlignConfig align;
  TrainConfig train;
  int recompute_period = 500;

  int d_lat = 256;
  int d_emb = 64;
  int hidden = 0;  // 0 means 4 * d_lat
  EntropyDims entropy;  // num_layers/num_types are filled in by the encoder
  EntropyFitConfig entropy_fit;

  double gamma = 0.8;
  double keyframe_gamma = 0.8;
  StepMode step_mode = StepMode::kStd;
  double fixed_step = 0.0;
  double keyframe_fixed_step = 0.0;
  double raw_fixed_step = 0.0;  // 0 means keyframe_fixed_step
  bool learned_means = false;
  int qmax_residual = kResidualQmax;
  int qmax_keyframe = kKeyframeQmax;

  bool no_alignment = false;
  bool random_alignment = false;
  bool no_predictor = false;
  bool fixed_length_codes = false;
  bool fixed_length_perms = false;
  bool residual_energy_alignment = false;
  bool delta_perm_coding = true;
  bool alignment_gating = true;

  uint64_t seed = 0;
};

void ValidateConfig(const CodecConfig& cfg);

// Activation summaries keyed by (1-based layer, block type index).
using ActivationSet = std::map<std::pair<int, int>, ActivationSummary>;

struct RateBreakdown {
  uint64_t codes_keyframe = 0;
  uint64_t codes_residual = 0;
  uint64_t perm = 0;
  uint64_t qparam = 0;
  uint64_t meta_header = 0;
  uint64_t meta_models = 0;
  uint64_t meta_framing = 0;
  uint64_t meta_trailer = 0;
  uint64_t param_count = 0;

  uint64_t codes() const { return codes_keyframe + codes_residual; }
  uint64_t meta() const { return meta_header + meta_models + meta_framing + meta_trailer; }
  uint64_t total() const { return codes() + perm + qparam + meta(); }
  double bits_per_param() const {
    return param_count ? static_cast<double>(total()) / static_cast<double>(param_count) : 0.0;
  }
};

// Percentages of the total for (codes_keyframe, codes_residual, perm,
// qparam, meta).
std::vector<double> RateFractions(const RateBreakdown& r);

struct EncodeStats {
  uint64_t records = 0;
  uint64_t clips = 0;
  uint64_t predictor_calls_keyframe = 0;  // must stay 0
  uint64_t predictor_calls_residual = 0;
  uint64_t perms_gated = 0;
  double proxy_code_bits = 0.0;  // model NLL of all coded symbols
  double distortion = 0.0;       // sum of squared reconstruction errors
  double mse = 0.0;
  double predictor_loss_initial = 0.0;
  double predictor_loss_final = 0.0;
  FitReport entropy_fit;
};

struct EncodeResult {
  Bytes bitstream;
  Checkpoint reconstruction;  // the encoder's own decoded reference
  RateBreakdown rate;
  EncodeStats stats;
};

EncodeResult EncodeCheckpoint(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                              const CodecConfig& cfg, const ActivationSet* activations = nullptr);

struct DecodeStats {
  uint64_t predictor_calls_keyframe = 0;
  uint64_t predictor_calls_residual = 0;
  int segments = 0;
};

Checkpoint DecodeCheckpoint(const uint8_t* data, size_t size, DecodeStats* stats = nullptr);
inline Checkpoint DecodeCheckpoint(const Bytes& b, DecodeStats* stats = nullptr) {
  return DecodeCheckpoint(b.data(), b.size(), stats);
}
// Decodes keyframe segments concurrently; output is identical to
// DecodeCheckpoint.
Checkpoint DecodeSegmentsParallel(const uint8_t* data, size_t size, int workers,
                                  DecodeStats* stats = nullptr);
inline Checkpoint DecodeSegmentsParallel(const Bytes& b, int workers, DecodeStats* stats = nullptr) {
  return DecodeSegmentsParallel(b.data(), b.size(), workers, stats);
}

// Walks the bitstream without decoding symbols.
RateBreakdown RateReport(const uint8_t* data, size_t size);
inline RateBreakdown RateReport(const Bytes& b) { return RateReport(b.data(), b.size()); }

// Sweeps lambda; picks the lowest-distortion result whose total rate is at
// most `target_bpp`, or the lowest-rate result when none qualifies.
struct OperatingPoint {
  std::vector<double> lambdas;
  std::vector<double> bits_per_param;
  std::vector<double> mse;
  int chosen = -1;
  EncodeResult result;
};
OperatingPoint SelectOperatingPoint(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                                    const CodecConfig& cfg, const std::vector<double>& lambdas,
                                    double target_bpp, const ActivationSet* activations = nullptr);

// Sum of squared differences over all tensors; shapes must match.
double SquaredError(const Checkpoint& a, const Checkpoint& b);
// True when every tensor value is bit-identical.
bool BitIdentical(const Checkpoint& a, const Checkpoint& b);

}  // namespace mcwc

#endif  // MCWC_CODEC_HPP_
