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

#include "mcwc/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mcwc {
namespace {

constexpr char kMagic[4] = {'M', 'C', 'T', 'C'};

void ValidateShape(const Shape& shape, const std::string& name) {
  if (shape.empty()) Fail(Errc::kInvalidCheckpoint, "tensor '" + name + "' has empty shape");
  for (int64_t d : shape) {
    if (d <= 0) Fail(Errc::kInvalidCheckpoint, "tensor '" + name + "' has non-positive dim");
  }
}

}  // namespace

int64_t ShapeNumel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

const Tensor* Layer::Find(const std::string& name) const {
  for (const Tensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Tensor* Layer::Find(const std::string& name) {
  for (Tensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void ValidateCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.layers.empty()) Fail(Errc::kInvalidCheckpoint, "checkpoint has no layers");
  for (size_t l = 0; l < ckpt.layers.size(); ++l) {
    const Layer& layer = ckpt.layers[l];
    if (layer.index != static_cast<int>(l) + 1) {
      Fail(Errc::kInvalidCheckpoint, "layer index " + std::to_string(layer.index) +
                                         " at position " + std::to_string(l + 1));
    }
    if (layer.tensors.empty()) {
      Fail(Errc::kInvalidCheckpoint, "layer " + std::to_string(layer.index) + " is empty");
    }
    std::set<std::string> names;
    for (const Tensor& t : layer.tensors) {
      ValidateShape(t.shape, t.name);
      if (!names.insert(t.name).second) {
        Fail(Errc::kInvalidCheckpoint, "duplicate tensor name '" + t.name + "'");
      }
      if (static_cast<int64_t>(t.data.size()) != t.numel()) {
        Fail(Errc::kShapeMismatch, "tensor '" + t.name + "' data size does not match shape");
      }
      for (float v : t.data) {
        if (!std::isfinite(v)) {
          Fail(Errc::kNonFiniteValue, "tensor '" + t.name + "' in layer " +
                                          std::to_string(layer.index));
        }
      }
    }
  }
}

Bytes SerializeCheckpoint(const Checkpoint& ckpt) {
  ValidateCheckpoint(ckpt);
  nlohmann::json manifest;
  manifest["arch_id"] = ckpt.arch_id;
  nlohmann::json layers = nlohmann::json::array();
  uint64_t offset = 0;
  for (const Layer& layer : ckpt.layers) {
    nlohmann::json jl;
    jl["index"] = layer.index;
    nlohmann::json tensors = nlohmann::json::array();
    for (const Tensor& t : layer.tensors) {
      nlohmann::json jt;
      jt["name"] = t.name;
      jt["shape"] = t.shape;
      jt["dtype"] = "f32";
      jt["offset"] = offset;
      offset += static_cast<uint64_t>(t.numel()) * 4;
      tensors.push_back(std::move(jt));
    }
    jl["tensors"] = std::move(tensors);
    layers.push_back(std::move(jl));
  }
  manifest["layers"] = std::move(layers);
  const std::string text = manifest.dump();

  Bytes out;
  out.reserve(8 + text.size() + offset);
  ByteWriter w(&out);
  w.Raw(kMagic, 4);
  w.U32(static_cast<uint32_t>(text.size()));
  w.Raw(text.data(), text.size());
  for (const Layer& layer : ckpt.layers) {
    for (const Tensor& t : layer.tensors) {
      for (float v : t.data) w.F32(v);
    }
  }
  return out;
}

Checkpoint ParseCheckpoint(const uint8_t* data, size_t size) {
  if (size < 8 || std::memcmp(data, kMagic, 4) != 0) {
    Fail(Errc::kManifestParse, "missing MCTC magic");
  }
  ByteReader r(data, size);
  r.Take(4);
  const uint32_t mlen = r.U32();
  if (mlen > r.remaining()) Fail(Errc::kManifestParse, "manifest length exceeds file");
  const uint8_t* mtext = r.Take(mlen);
  const size_t data_begin = r.pos();
  const size_t data_size = size - data_begin;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext, mtext + mlen);
  } catch (const nlohmann::json::exception& e) {
    Fail(Errc::kManifestParse, e.what());
  }

  Checkpoint ckpt;
  uint64_t expected_end = 0;
  try {
    ckpt.arch_id = manifest.at("arch_id").get<uint32_t>();
    for (const auto& jl : manifest.at("layers")) {
      Layer layer;
      layer.index = jl.at("index").get<int>();
      for (const auto& jt : jl.at("tensors")) {
        Tensor t;
        t.name = jt.at("name").get<std::string>();
        t.shape = jt.at("shape").get<Shape>();
        const std::string dtype = jt.at("dtype").get<std::string>();
        if (dtype != "f32") Fail(Errc::kUnsupportedDtype, "dtype '" + dtype + "'");
        ValidateShape(t.shape, t.name);
        const uint64_t off = jt.at("offset").get<uint64_t>();
        if (off < expected_end) {
          Fail(Errc::kManifestParse, "tensor offsets overlap or are unsorted at '" + t.name + "'");
        }
        const uint64_t nbytes = static_cast<uint64_t>(t.numel()) * 4;
        if (off + nbytes > data_size) {
          Fail(Errc::kShapeMismatch, "tensor '" + t.name + "' extends past data region");
        }
        t.data.resize(static_cast<size_t>(t.numel()));
        std::memcpy(t.data.data(), data + data_begin + off, nbytes);
        expected_end = off + nbytes;
        layer.tensors.push_back(std::move(t));
      }
      ckpt.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(Errc::kManifestParse, e.what());
  }
  if (expected_end != data_size) {
    Fail(Errc::kShapeMismatch, "declared " + std::to_string(expected_end) + " data bytes, found " +
                                   std::to_string(data_size));
  }
  if (std::endian::native != std::endian::little) {
    for (Layer& layer : ckpt.layers) {
      for (Tensor& t : layer.tensors) {
        for (float& v : t.data) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<uint32_t>(v)));
      }
    }
  }
  ValidateCheckpoint(ckpt);
  return ckpt;
}

Bytes ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(Errc::kMissingFile, path);
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) Fail(Errc::kIoFailure, "read failed: " + path);
  return bytes;
}

void WriteFileAtomic(const std::string& path, const Bytes& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(Errc::kIoFailure, "cannot open " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      Fail(Errc::kIoFailure, "write failed: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    Fail(Errc::kIoFailure, "rename failed: " + ec.message());
  }
}

Checkpoint LoadCheckpoint(const std::string& path) {
  const Bytes bytes = ReadFile(path);
  return ParseCheckpoint(bytes.data(), bytes.size());
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  WriteFileAtomic(path, SerializeCheckpoint(ckpt));
}

uint64_t ParamCount(const Checkpoint& ckpt) {
  uint64_t n = 0;
  for (const Layer& layer : ckpt.layers) {
    for (const Tensor& t : layer.tensors) n += static_cast<uint64_t>(t.numel());
  }
  return n;
}

}  // namespace mcwc
