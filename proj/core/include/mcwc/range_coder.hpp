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

#ifndef MCWC_RANGE_CODER_HPP_
#define MCWC_RANGE_CODER_HPP_

#include <cstdint>
#include <vector>

#include "mcwc/bytes.hpp"

namespace mcwc {

constexpr int kCdfBits = 16;
constexpr uint32_t kCdfTotal = 1u << kCdfBits;

// A cumulative table: cdf[0] = 0, cdf[n] = kCdfTotal, strictly increasing.
using Cdf = std::vector<uint32_t>;

// Throws CdfInvalid unless `cdf` is a valid table with at least one symbol.
void ValidateCdf(const Cdf& cdf);

// Quantizes probabilities to a table by rounding, keeping every frequency
// >= 1. A surplus goes to the most probable symbol (lowest index on ties); a
// deficit is taken from the largest bins.
Cdf QuantizePmf(const std::vector<double>& pmf);

// Byte-oriented range encoder with a 56-bit window and carry propagation
// through a cached byte plus a run of pending 0xFF bytes.
class RangeEncoder {
 public:
  RangeEncoder();

  void Encode(uint32_t start, uint32_t freq);
  void EncodeSymbol(const Cdf& cdf, int symbol);
  // Uniform value of nbits <= 16.
  void EncodeBits(uint32_t value, int nbits);

  // Terminates the stream. The decoder reads zeros past the end.
  Bytes Finish();

 private:
  void ShiftLow();

  uint64_t low_ = 0;
  uint64_t range_;
  uint8_t cache_ = 0;
  bool have_cache_ = false;
  uint64_t pending_ = 0;
  Bytes out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  // Returns the symbol and updates the state; CorruptStream on
  // out-of-range values.
  int DecodeSymbol(const Cdf& cdf);
  uint32_t DecodeBits(int nbits);

 private:
  uint32_t Peek();
  void Consume(uint32_t start, uint32_t freq);
  uint8_t NextByte() { return pos_ < size_ ? data_[pos_++] : (++pos_, uint8_t{0}); }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint64_t code_ = 0;
  uint64_t range_;
  uint64_t r_ = 0;
};

}  // namespace mcwc

#endif  // MCWC_RANGE_CODER_HPP_
