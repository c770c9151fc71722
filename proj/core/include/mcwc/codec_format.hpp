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

#ifndef MCWC_CODEC_FORMAT_HPP_
#define MCWC_CODEC_FORMAT_HPP_

#include <cstdint>
#include <vector>

#include "mcwc/blocks.hpp"
#include "mcwc/bytes.hpp"
#include "mcwc/entropy.hpp"
#include "mcwc/permcode.hpp"
#include "mcwc/predictor.hpp"
#include "mcwc/quant.hpp"

namespace mcwc {

constexpr uint16_t kFlagFixedLengthCodes = 1u << 0;
constexpr uint16_t kFlagFixedLengthPerms = 1u << 1;
constexpr uint16_t kFlagLearnedMeans = 1u << 2;

enum class EntropyModelId : uint16_t { kFixedLength = 0, kLogistic = 1 };
enum class PredictorKind : uint8_t { kIdentity = 0, kMlp = 1 };
enum class RecordMode : uint8_t { kAbsolute = 0, kPredicted = 1 };

struct SharedQTable {
  uint16_t id = 0;
  bool has_means = false;
  std::vector<float> step;
  std::vector<float> mean;
};

struct BitstreamHeader {
  uint16_t version = 1;
  uint16_t flags = 0;
  uint32_t num_layers = 0;
  uint32_t keyframe_interval = 1;
  uint32_t arch_id = 0;
  std::vector<std::vector<TensorShapeEntry>> shapes;  // per layer
  std::vector<BlockTypeSpec> specs;
  uint16_t qmax_residual = kResidualQmax;
  uint16_t qmax_keyframe = kKeyframeQmax;
  EntropyModelId entropy_model = EntropyModelId::kLogistic;
  EntropyModel psi;
  PredictorKind predictor_kind = PredictorKind::kMlp;
  Predictor theta;
  PermModelParams perm;
  std::vector<SharedQTable> qtables;
  uint32_t record_count = 0;

  bool fixed_length_codes() const { return flags & kFlagFixedLengthCodes; }
  bool fixed_length_perms() const { return flags & kFlagFixedLengthPerms; }
};

// Byte counts of the header regions, for rate accounting.
struct HeaderLayout {
  size_t total = 0;
  size_t models = 0;   // psi, theta and permutation-model arrays
  size_t qtables = 0;  // shared quantizer tables
};

void WriteHeader(const BitstreamHeader& h, ByteWriter* w, HeaderLayout* layout = nullptr);
// Throws BadMagic, UnsupportedVersion, ManifestParse or CorruptStream.
BitstreamHeader ParseHeader(ByteReader* r, HeaderLayout* layout = nullptr);

// One entry of the traversal order: layers ascending; within a layer, block
// types in BlockSpec order, then tensors no present type covers.
struct RecordPlan {
  int layer = 1;          // 1-based
  int type = -1;          // index into specs, -1 for a raw tensor
  uint32_t tensor = 0;    // raw: tensor index within the layer
  bool absolute = true;   // keyframe pathway
  int prev = -1;          // record of the same type at layer - 1 with equal geometry
  int count = 1;          // B (1 for raw)
  int dim = 0;            // d (numel for raw)
  std::vector<int> member_sizes;
  // Quantizer grouping.
  GroupMode group_mode = GroupMode::kTensor;
  int groups = 1;                      // groups in the record
  int local_groups = 1;                // groups within one block
  std::vector<uint32_t> local_group;   // element of a block -> local group

  bool raw() const { return type < 0; }
  uint32_t group(int block, int local) const;
  std::vector<uint32_t> GroupMap() const;
};

struct TraversalPlan {
  std::vector<RecordPlan> records;
  std::vector<int> type_dims;  // first-occurrence block dimension per type
};

Layer SkeletonLayer(int index, const std::vector<TensorShapeEntry>& shapes);
TraversalPlan BuildTraversalPlan(const std::vector<std::vector<TensorShapeEntry>>& shapes,
                                 const std::vector<BlockTypeSpec>& specs, int keyframe_interval);

// Throws Config on duplicate ids/names or empty member lists.
void ValidateSpecs(const std::vector<BlockTypeSpec>& specs);

// QInfo record body.
struct QInfo {
  bool shared = false;
  uint16_t table = 0;
  QuantizerParams params;
};
QInfo ReadQInfo(ByteReader* r, const BitstreamHeader& h, const RecordPlan& plan, int qmax);

// Trailer: "MCST", u32 record count, per record (u64 byte length, u32 clip
// count), then the u64 trailer offset as the last 8 bytes of the file.
struct Trailer {
  size_t offset = 0;
  std::vector<uint64_t> lengths;
  std::vector<uint32_t> clips;
};
void WriteTrailer(const Trailer& t, ByteWriter* w);
Trailer ReadTrailer(const uint8_t* data, size_t size);

}  // namespace mcwc

#endif  // MCWC_CODEC_FORMAT_HPP_
