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

#ifndef MCWC_PERMCODE_HPP_
#define MCWC_PERMCODE_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "mcwc/blocks.hpp"
#include "mcwc/bytes.hpp"
#include "mcwc/range_coder.hpp"

namespace mcwc {

using LehmerDigits = std::vector<uint32_t>;

// digits[k] = |{ j > k : perm[j] < perm[k] }|, O(B log B).
LehmerDigits LehmerEncode(const Permutation& perm);
// Throws DigitOutOfRange unless digits[k] <= B - 1 - k.
Permutation LehmerDecode(const LehmerDigits& digits);

inline uint64_t ZigZag(int64_t x) {
  return x >= 0 ? static_cast<uint64_t>(x) << 1 : (static_cast<uint64_t>(-(x + 1)) << 1) | 1u;
}
inline int64_t UnZigZag(uint64_t z) {
  return (z & 1u) ? -static_cast<int64_t>(z >> 1) - 1 : static_cast<int64_t>(z >> 1);
}

std::vector<int64_t> DeltaDigits(const LehmerDigits& curr, const LehmerDigits& prev);
LehmerDigits UndeltaDigits(const LehmerDigits& prev, const std::vector<int64_t>& delta);

constexpr int kPermBuckets = 8;
constexpr int kPermThreshold = 16;
constexpr double kPermScaleFloor = 1e-3;

// Position k of a length-B stream falls in bucket floor(k * 8 / B).
inline int PermBucket(size_t k, size_t b) {
  return static_cast<int>(k * kPermBuckets / (b == 0 ? 1 : b));
}

// Laplace scales for one block type, per position bucket, for absolute
// digits and for digit deltas. Values are held at f16 precision.
struct PermTypeScales {
  std::array<double, kPermBuckets> abs{};
  std::array<double, kPermBuckets> delta{};
};

struct PermModelParams {
  int threshold = kPermThreshold;
  std::vector<PermTypeScales> types;
};

// Per-position samples for one type: absolute digits and signed deltas.
struct PermSamples {
  std::array<std::vector<int64_t>, kPermBuckets> abs;
  std::array<std::vector<int64_t>, kPermBuckets> delta;
};

void AddPermSamples(const LehmerDigits& digits, const LehmerDigits* prev, PermSamples* out);

// Maximum-likelihood scales (q = exp(-1/scale)) of the untruncated discrete
// models: two-sided for deltas, one-sided for absolute digits. All-zero
// buckets get 1e-3, empty buckets 1.0. Results are rounded to f16.
double FitLaplaceScale(const std::vector<int64_t>& samples);
double FitGeometricScale(const std::vector<int64_t>& samples);
PermModelParams FitPermModel(const std::vector<PermSamples>& per_type, int threshold);

// Symbol tables. Delta mode: symbol zz(d) for |d| <= T, escape 2T+1, with
// p(d) proportional to q^|d|. Absolute mode: symbol v for v <= 2T, escape
// 2T+1, with p(v) proportional to q^v. q = exp(-1/scale).
Cdf PermDeltaCdf(double scale, int threshold);
Cdf PermAbsCdf(double scale, int threshold);
std::vector<double> PermDeltaPmf(double scale, int threshold);
std::vector<double> PermAbsPmf(double scale, int threshold);

constexpr int kEscapePayloadBits = 16;

// Stream: uniform flag symbol (1 = delta), then one symbol per position with
// inline escape payloads. Requires B <= 65536.
Bytes EncodePermStream(const LehmerDigits& digits, const LehmerDigits* prev,
                       const PermTypeScales& scales, int threshold);
LehmerDigits DecodePermStream(const uint8_t* data, size_t size, size_t count,
                              const LehmerDigits* prev, const PermTypeScales& scales,
                              int threshold);

// Ideal bits of a stream under the model, excluding the flag.
double PermStreamNll(const LehmerDigits& digits, const LehmerDigits* prev,
                     const PermTypeScales& scales, int threshold);

// Fixed-length ablation: ceil(log2 B) bits per mapping entry.
int FixedPermBits(size_t b);
Bytes EncodePermFixed(const Permutation& perm);
Permutation DecodePermFixed(const uint8_t* data, size_t size, size_t count);

}  // namespace mcwc

#endif  // MCWC_PERMCODE_HPP_
