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

#ifndef MCWC_BYTES_HPP_
#define MCWC_BYTES_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "mcwc/error.hpp"

namespace mcwc {

using Bytes = std::vector<uint8_t>;

// Little-endian serializer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes* out) : out_(out) {}

  void U8(uint8_t v) { out_->push_back(v); }
  void U16(uint16_t v) { PutLE(v, 2); }
  void U32(uint32_t v) { PutLE(v, 4); }
  void U64(uint64_t v) { PutLE(v, 8); }
  void F32(float v) { U32(std::bit_cast<uint32_t>(v)); }
  void Raw(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    out_->insert(out_->end(), p, p + n);
  }
  void Raw(const Bytes& b) { out_->insert(out_->end(), b.begin(), b.end()); }
  // u16 length prefix.
  void Str(std::string_view s) {
    if (s.size() > 0xFFFF) Fail(Errc::kInvalidArgument, "string too long");
    U16(static_cast<uint16_t>(s.size()));
    Raw(s.data(), s.size());
  }
  size_t size() const { return out_->size(); }

 private:
  void PutLE(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_->push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  Bytes* out_;
};

// Bounds-checked little-endian reader. Overruns raise CorruptStream.
class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

  uint8_t U8() { return static_cast<uint8_t>(GetLE(1)); }
  uint16_t U16() { return static_cast<uint16_t>(GetLE(2)); }
  uint32_t U32() { return static_cast<uint32_t>(GetLE(4)); }
  uint64_t U64() { return GetLE(8); }
  float F32() { return std::bit_cast<float>(U32()); }
  const uint8_t* Take(size_t n) {
    Need(n);
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::string Str() {
    const uint16_t n = U16();
    const uint8_t* p = Take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  size_t pos() const { return pos_; }
  size_t size() const { return size_; }
  size_t remaining() const { return size_ - pos_; }
  void Seek(size_t pos) {
    if (pos > size_) Fail(Errc::kCorruptStream, "seek past end");
    pos_ = pos;
  }

 private:
  void Need(size_t n) {
    if (n > size_ - pos_) Fail(Errc::kCorruptStream, "unexpected end of stream");
  }
  uint64_t GetLE(int n) {
    Need(static_cast<size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<size_t>(n);
    return v;
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

// LSB-first bit packer.
class BitWriter {
 public:
  void Write(uint32_t value, int nbits) {
    for (int i = 0; i < nbits; ++i) {
      if (fill_ == 0) bytes_.push_back(0);
      if ((value >> i) & 1u) bytes_.back() |= static_cast<uint8_t>(1u << fill_);
      fill_ = (fill_ + 1) & 7;
    }
  }
  const Bytes& bytes() const { return bytes_; }

 private:
  Bytes bytes_;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  uint32_t Read(int nbits) {
    uint32_t v = 0;
    for (int i = 0; i < nbits; ++i) {
      const size_t byte = bit_ >> 3;
      if (byte >= size_) Fail(Errc::kCorruptStream, "bit stream exhausted");
      v |= static_cast<uint32_t>((data_[byte] >> (bit_ & 7)) & 1u) << i;
      ++bit_;
    }
    return v;
  }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t bit_ = 0;
};

}  // namespace mcwc

#endif  // MCWC_BYTES_HPP_
