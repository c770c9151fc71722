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

#include "mcwc/permcode.hpp"

#include <cmath>
#include <cstdlib>

#include "mcwc/detmath.hpp"
#include "mcwc/error.hpp"

namespace mcwc {
namespace {

// Fenwick tree over counts of values 0..n-1.
class Fenwick {
 public:
  explicit Fenwick(size_t n) : tree_(n + 1, 0) {}
  void Add(size_t i, int v) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += v;
  }
  // Sum of counts over [0, i).
  int Prefix(size_t i) const {
    int s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }
  // Smallest index whose prefix sum (inclusive) exceeds k.
  size_t FindKth(int k) const {
    size_t pos = 0;
    size_t mask = 1;
    while (mask * 2 < tree_.size()) mask *= 2;
    for (; mask; mask >>= 1) {
      const size_t next = pos + mask;
      if (next < tree_.size() && tree_[next] <= k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos;
  }

 private:
  std::vector<int> tree_;
};

std::vector<double> NormalizedPmf(std::vector<double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

struct TableSet {
  std::array<Cdf, kPermBuckets> abs, delta;
};

TableSet BuildTables(const PermTypeScales& scales, int threshold) {
  TableSet t;
  for (int b = 0; b < kPermBuckets; ++b) {
    t.abs[b] = PermAbsCdf(scales.abs[b], threshold);
    t.delta[b] = PermDeltaCdf(scales.delta[b], threshold);
  }
  return t;
}

void CheckStreamArgs(size_t b, int threshold) {
  if (b > 65536) Fail(Errc::kInvalidArgument, "permutation streams support B <= 65536");
  if (threshold < 1 || threshold > 4096) Fail(Errc::kInvalidArgument, "escape threshold");
}

}  // namespace

LehmerDigits LehmerEncode(const Permutation& perm) {
  ValidatePermutation(perm);
  const size_t n = perm.size();
  LehmerDigits d(n);
  Fenwick fw(n);
  for (size_t k = n; k-- > 0;) {
    d[k] = static_cast<uint32_t>(fw.Prefix(perm[k]));
    fw.Add(perm[k], 1);
  }
  return d;
}

Permutation LehmerDecode(const LehmerDigits& digits) {
  const size_t n = digits.size();
  for (size_t k = 0; k < n; ++k) {
    if (digits[k] > n - 1 - k) {
      Fail(Errc::kDigitOutOfRange, "digit " + std::to_string(digits[k]) + " at position " +
                                       std::to_string(k));
    }
  }
  Fenwick fw(n);
  for (size_t i = 0; i < n; ++i) fw.Add(i, 1);
  Permutation p(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t v = fw.FindKth(static_cast<int>(digits[k]));
    p[k] = static_cast<uint32_t>(v);
    fw.Add(v, -1);
  }
  return p;
}

std::vector<int64_t> DeltaDigits(const LehmerDigits& curr, const LehmerDigits& prev) {
  if (curr.size() != prev.size()) Fail(Errc::kLengthMismatch, "digit streams differ in length");
  std::vector<int64_t> d(curr.size());
  for (size_t k = 0; k < curr.size(); ++k) {
    d[k] = static_cast<int64_t>(curr[k]) - static_cast<int64_t>(prev[k]);
  }
  return d;
}

LehmerDigits UndeltaDigits(const LehmerDigits& prev, const std::vector<int64_t>& delta) {
  if (delta.size() != prev.size()) Fail(Errc::kLengthMismatch, "digit streams differ in length");
  LehmerDigits d(prev.size());
  for (size_t k = 0; k < prev.size(); ++k) {
    const int64_t v = static_cast<int64_t>(prev[k]) + delta[k];
    if (v < 0 || v > 0xFFFFFFFFll) Fail(Errc::kDigitOutOfRange, "reconstructed digit");
    d[k] = static_cast<uint32_t>(v);
  }
  return d;
}

void AddPermSamples(const LehmerDigits& digits, const LehmerDigits* prev, PermSamples* out) {
  const size_t n = digits.size();
  for (size_t k = 0; k < n; ++k) {
    const int b = PermBucket(k, n);
    if (prev) {
      out->delta[b].push_back(static_cast<int64_t>(digits[k]) - static_cast<int64_t>((*prev)[k]));
    } else {
      out->abs[b].push_back(digits[k]);
    }
  }
}

namespace {

double MeanAbs(const std::vector<int64_t>& samples) {
  double s = 0.0;
  for (int64_t x : samples) s += static_cast<double>(std::llabs(x));
  return s / static_cast<double>(samples.size());
}

// Scale 1/ln(1/q), floored and rounded to f16.
double ScaleFromRatio(double q) {
  if (!(q > 0.0)) return kPermScaleFloor;
  const double scale = -1.0 / det::Log(q);
  return det::RoundToHalf(scale < kPermScaleFloor ? kPermScaleFloor : scale);
}

}  // namespace

double FitLaplaceScale(const std::vector<int64_t>& samples) {
  if (samples.empty()) return 1.0;
  const double m = MeanAbs(samples);
  if (m <= 0.0) return kPermScaleFloor;
  // E|x| = 2q / (1 - q^2) solved for q.
  return ScaleFromRatio((std::sqrt(1.0 + m * m) - 1.0) / m);
}

double FitGeometricScale(const std::vector<int64_t>& samples) {
  if (samples.empty()) return 1.0;
  const double m = MeanAbs(samples);
  if (m <= 0.0) return kPermScaleFloor;
  // E x = q / (1 - q) solved for q.
  return ScaleFromRatio(m / (1.0 + m));
}

PermModelParams FitPermModel(const std::vector<PermSamples>& per_type, int threshold) {
  PermModelParams m;
  m.threshold = threshold;
  for (const PermSamples& s : per_type) {
    PermTypeScales t;
    for (int b = 0; b < kPermBuckets; ++b) {
      t.abs[b] = FitGeometricScale(s.abs[b]);
      t.delta[b] = FitLaplaceScale(s.delta[b]);
    }
    m.types.push_back(t);
  }
  return m;
}

std::vector<double> PermDeltaPmf(double scale, int threshold) {
  const int n = 2 * threshold + 2;
  std::vector<double> w(n);
  for (int s = 0; s <= 2 * threshold; ++s) {
    w[s] = det::Exp(-static_cast<double>(std::llabs(UnZigZag(s))) / scale);
  }
  const double one_minus_q = -det::Expm1(-1.0 / scale);
  w[n - 1] = 2.0 * det::Exp(-(threshold + 1.0) / scale) / one_minus_q;
  return NormalizedPmf(std::move(w));
}

std::vector<double> PermAbsPmf(double scale, int threshold) {
  const int n = 2 * threshold + 2;
  std::vector<double> w(n);
  for (int s = 0; s <= 2 * threshold; ++s) w[s] = det::Exp(-static_cast<double>(s) / scale);
  const double one_minus_q = -det::Expm1(-1.0 / scale);
  w[n - 1] = det::Exp(-(2.0 * threshold + 1.0) / scale) / one_minus_q;
  return NormalizedPmf(std::move(w));
}

Cdf PermDeltaCdf(double scale, int threshold) {
  return QuantizePmf(PermDeltaPmf(scale, threshold));
}

Cdf PermAbsCdf(double scale, int threshold) { return QuantizePmf(PermAbsPmf(scale, threshold)); }

Bytes EncodePermStream(const LehmerDigits& digits, const LehmerDigits* prev,
                       const PermTypeScales& scales, int threshold) {
  const size_t n = digits.size();
  CheckStreamArgs(n, threshold);
  if (prev && prev->size() != n) Fail(Errc::kLengthMismatch, "previous digits length");
  const TableSet tables = BuildTables(scales, threshold);
  const int escape = 2 * threshold + 1;
  RangeEncoder enc;
  enc.EncodeBits(prev ? 1u : 0u, 1);
  for (size_t k = 0; k < n; ++k) {
    const int b = PermBucket(k, n);
    if (prev) {
      const int64_t d = static_cast<int64_t>(digits[k]) - static_cast<int64_t>((*prev)[k]);
      const int64_t mag = std::llabs(d);
      if (mag <= threshold) {
        enc.EncodeSymbol(tables.delta[b], static_cast<int>(ZigZag(d)));
      } else {
        enc.EncodeSymbol(tables.delta[b], escape);
        enc.EncodeBits(static_cast<uint32_t>(mag - threshold - 1), kEscapePayloadBits);
        enc.EncodeBits(d < 0 ? 1u : 0u, 1);
      }
    } else {
      const int64_t v = digits[k];
      if (v <= 2 * threshold) {
        enc.EncodeSymbol(tables.abs[b], static_cast<int>(v));
      } else {
        enc.EncodeSymbol(tables.abs[b], escape);
        enc.EncodeBits(static_cast<uint32_t>(v - 2 * threshold - 1), kEscapePayloadBits);
      }
    }
  }
  return enc.Finish();
}

LehmerDigits DecodePermStream(const uint8_t* data, size_t size, size_t count,
                              const LehmerDigits* prev, const PermTypeScales& scales,
                              int threshold) {
  CheckStreamArgs(count, threshold);
  const TableSet tables = BuildTables(scales, threshold);
  const int escape = 2 * threshold + 1;
  RangeDecoder dec(data, size);
  const bool delta = dec.DecodeBits(1) != 0;
  if (delta && (!prev || prev->size() != count)) {
    Fail(Errc::kCorruptStream, "delta-coded permutation without matching predecessor");
  }
  LehmerDigits d(count);
  for (size_t k = 0; k < count; ++k) {
    const int b = PermBucket(k, count);
    int64_t v;
    if (delta) {
      const int s = dec.DecodeSymbol(tables.delta[b]);
      int64_t dv;
      if (s == escape) {
        const int64_t mag = static_cast<int64_t>(dec.DecodeBits(kEscapePayloadBits)) + threshold + 1;
        dv = dec.DecodeBits(1) ? -mag : mag;
      } else {
        dv = UnZigZag(static_cast<uint64_t>(s));
      }
      v = static_cast<int64_t>((*prev)[k]) + dv;
    } else {
      const int s = dec.DecodeSymbol(tables.abs[b]);
      v = (s == escape) ? static_cast<int64_t>(dec.DecodeBits(kEscapePayloadBits)) + escape : s;
    }
    if (v < 0 || v > static_cast<int64_t>(count - 1 - k)) {
      Fail(Errc::kCorruptStream, "permutation digit out of range at position " + std::to_string(k));
    }
    d[k] = static_cast<uint32_t>(v);
  }
  return d;
}

double PermStreamNll(const LehmerDigits& digits, const LehmerDigits* prev,
                     const PermTypeScales& scales, int threshold) {
  const size_t n = digits.size();
  CheckStreamArgs(n, threshold);
  const TableSet tables = BuildTables(scales, threshold);
  const int escape = 2 * threshold + 1;
  auto bits = [](const Cdf& cdf, int s) {
    return -std::log2(static_cast<double>(cdf[s + 1] - cdf[s]) / kCdfTotal);
  };
  double total = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const int b = PermBucket(k, n);
    if (prev) {
      const int64_t d = static_cast<int64_t>(digits[k]) - static_cast<int64_t>((*prev)[k]);
      if (std::llabs(d) <= threshold) {
        total += bits(tables.delta[b], static_cast<int>(ZigZag(d)));
      } else {
        total += bits(tables.delta[b], escape) + kEscapePayloadBits + 1;
      }
    } else {
      const int64_t v = digits[k];
      if (v <= 2 * threshold) {
        total += bits(tables.abs[b], static_cast<int>(v));
      } else {
        total += bits(tables.abs[b], escape) + kEscapePayloadBits;
      }
    }
  }
  return total;
}

int FixedPermBits(size_t b) {
  int bits = 0;
  while ((static_cast<size_t>(1) << bits) < b) ++bits;
  return bits;
}

Bytes EncodePermFixed(const Permutation& perm) {
  ValidatePermutation(perm);
  const int nb = FixedPermBits(perm.size());
  BitWriter w;
  for (uint32_t v : perm) w.Write(v, nb);
  return w.bytes();
}

Permutation DecodePermFixed(const uint8_t* data, size_t size, size_t count) {
  const int nb = FixedPermBits(count);
  BitReader r(data, size);
  Permutation p(count);
  for (size_t k = 0; k < count; ++k) p[k] = r.Read(nb);
  try {
    ValidatePermutation(p);
  } catch (const Error&) {
    Fail(Errc::kCorruptStream, "fixed-length permutation is not a bijection");
  }
  return p;
}

}  // namespace mcwc
