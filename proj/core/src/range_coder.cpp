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

#include "mcwc/range_coder.hpp"

#include <algorithm>
#include <cmath>

#include "mcwc/error.hpp"

namespace mcwc {
namespace {

constexpr uint64_t kTop = 1ull << 56;
constexpr uint64_t kMask = kTop - 1;
constexpr uint64_t kBottom = 1ull << 48;

}  // namespace

void ValidateCdf(const Cdf& cdf) {
  if (cdf.size() < 2) Fail(Errc::kCdfInvalid, "table needs at least one symbol");
  if (cdf.front() != 0 || cdf.back() != kCdfTotal) Fail(Errc::kCdfInvalid, "bad table endpoints");
  for (size_t k = 1; k < cdf.size(); ++k) {
    if (cdf[k] <= cdf[k - 1]) Fail(Errc::kCdfInvalid, "zero-width or decreasing bin");
  }
}

Cdf QuantizePmf(const std::vector<double>& pmf) {
  const size_t n = pmf.size();
  if (n == 0 || n > kCdfTotal) Fail(Errc::kCdfInvalid, "alphabet size out of range");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) Fail(Errc::kCdfInvalid, "invalid probability");
    total += p;
  }
  if (!(total > 0.0)) Fail(Errc::kCdfInvalid, "probabilities sum to zero");
  std::vector<int64_t> freq(n);
  int64_t used = 0;
  size_t best = 0;
  for (size_t k = 0; k < n; ++k) {
    freq[k] = std::max<int64_t>(1, std::llround(pmf[k] / total * kCdfTotal));
    used += freq[k];
    if (pmf[k] > pmf[best]) best = k;
  }
  int64_t diff = static_cast<int64_t>(kCdfTotal) - used;
  if (diff >= 0) {
    freq[best] += diff;
  }
  while (diff < 0) {
    size_t top = 0;
    for (size_t k = 1; k < n; ++k) {
      if (freq[k] > freq[top]) top = k;
    }
    const int64_t take = std::min(freq[top] - 1, -diff);
    freq[top] -= take;
    diff += take;
  }
  Cdf cdf(n + 1, 0);
  for (size_t k = 0; k < n; ++k) cdf[k + 1] = cdf[k] + static_cast<uint32_t>(freq[k]);
  return cdf;
}

RangeEncoder::RangeEncoder() : range_(kMask) {}

void RangeEncoder::ShiftLow() {
  if (low_ < 0xFFull << 48 || low_ >= kTop) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 56);
    if (have_cache_) out_.push_back(static_cast<uint8_t>(cache_ + carry));
    for (; pending_; --pending_) out_.push_back(static_cast<uint8_t>(0xFF + carry));
    cache_ = static_cast<uint8_t>(low_ >> 48);
    have_cache_ = true;
  } else {
    ++pending_;
  }
  low_ = (low_ << 8) & kMask;
}

void RangeEncoder::Encode(uint32_t start, uint32_t freq) {
  const uint64_t r = range_ >> kCdfBits;
  low_ += r * start;
  range_ = r * freq;
  while (range_ < kBottom) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::EncodeSymbol(const Cdf& cdf, int symbol) {
  if (symbol < 0 || static_cast<size_t>(symbol) + 1 >= cdf.size()) {
    Fail(Errc::kOutOfSupport, "symbol " + std::to_string(symbol) + " outside table");
  }
  const uint32_t start = cdf[symbol];
  const uint32_t freq = cdf[symbol + 1] - start;
  if (freq == 0) Fail(Errc::kCdfInvalid, "zero-width bin");
  Encode(start, freq);
}

void RangeEncoder::EncodeBits(uint32_t value, int nbits) {
  if (nbits <= 0) return;
  const int shift = kCdfBits - nbits;
  Encode(value << shift, 1u << shift);
}

Bytes RangeEncoder::Finish() {
  // Any value in [low, low + range) identifies the stream; pick the one
  // with the most trailing zero bits below the top byte.
  low_ = (low_ + kBottom - 1) & ~(kBottom - 1);
  ShiftLow();
  ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size)
    : data_(data), size_(size), range_(kMask) {
  for (int k = 0; k < 7; ++k) code_ = (code_ << 8) | NextByte();
}

uint32_t RangeDecoder::Peek() {
  r_ = range_ >> kCdfBits;
  const uint64_t v = code_ / r_;
  if (v >= kCdfTotal) Fail(Errc::kCorruptStream, "range decoder state out of bounds");
  return static_cast<uint32_t>(v);
}

void RangeDecoder::Consume(uint32_t start, uint32_t freq) {
  code_ -= r_ * start;
  range_ = r_ * freq;
  while (range_ < kBottom) {
    code_ = ((code_ << 8) | NextByte()) & kMask;
    range_ <<= 8;
  }
}

int RangeDecoder::DecodeSymbol(const Cdf& cdf) {
  const uint32_t v = Peek();
  // Largest s with cdf[s] <= v.
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
  const int s = static_cast<int>(it - cdf.begin()) - 1;
  if (s < 0 || static_cast<size_t>(s) + 1 >= cdf.size()) {
    Fail(Errc::kCorruptStream, "decoded value outside table");
  }
  Consume(cdf[s], cdf[s + 1] - cdf[s]);
  return s;
}

uint32_t RangeDecoder::DecodeBits(int nbits) {
  if (nbits <= 0) return 0;
  const int shift = kCdfBits - nbits;
  const uint32_t v = Peek() >> shift;
  Consume(v << shift, 1u << shift);
  return v;
}

}  // namespace mcwc
