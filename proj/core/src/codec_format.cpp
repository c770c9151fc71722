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

#include "mcwc/codec_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "mcwc/codec.hpp"
#include "mcwc/detmath.hpp"
#include "mcwc/error.hpp"

namespace mcwc {
namespace {

constexpr char kMagic[4] = {'M', 'C', 'W', 'C'};
constexpr char kTrailerMagic[4] = {'M', 'C', 'S', 'T'};
constexpr uint32_t kMaxDim = 1u << 24;

uint32_t ReadBounded(ByteReader* r, uint32_t lo, uint32_t hi, const char* what) {
  const uint32_t v = r->U32();
  if (v < lo || v > hi) Fail(Errc::kManifestParse, std::string(what) + " out of range: " + std::to_string(v));
  return v;
}

// Refuses parameter arrays larger than the rest of the stream before any
// allocation happens.
void CheckArraySize(const ByteReader& r, uint64_t count) {
  if (count * 4 + 4 > r.remaining()) Fail(Errc::kCorruptStream, "model arrays exceed stream size");
}

uint64_t PredictorParamCount(const PredictorDims& d) {
  const uint64_t dl = d.d_lat, de = d.d_emb, h = d.hidden > 0 ? d.hidden : 4 * d.d_lat;
  uint64_t n = 0;
  for (int dt : d.type_dims) n += 2 * dl * dt + dl + dt;
  n += 2 * dl * de + (d.num_layers + d.type_dims.size()) * de + 2 * h * dl + h + dl;
  return n;
}

uint64_t EntropyParamCount(const EntropyDims& d) {
  const uint64_t in = 2 * d.d_emb + EntropyModel::kExtraFeatures;
  return static_cast<uint64_t>(d.num_layers + d.num_types) * d.d_emb + d.hidden * in + d.hidden +
         2 * d.hidden + 2;
}

}  // namespace

uint32_t RecordPlan::group(int block, int local) const {
  switch (group_mode) {
    case GroupMode::kBlock: return static_cast<uint32_t>(block);
    case GroupMode::kMember: return static_cast<uint32_t>(block * local_groups + local);
    case GroupMode::kTensor: return static_cast<uint32_t>(local);
  }
  return 0;
}

std::vector<uint32_t> RecordPlan::GroupMap() const {
  std::vector<uint32_t> g(static_cast<size_t>(count) * dim);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < dim; ++k) g[static_cast<size_t>(i) * dim + k] = group(i, local_group[k]);
  }
  return g;
}

Layer SkeletonLayer(int index, const std::vector<TensorShapeEntry>& shapes) {
  Layer l;
  l.index = index;
  for (const TensorShapeEntry& e : shapes) l.tensors.push_back(Tensor{e.name, e.shape, {}});
  return l;
}

void ValidateSpecs(const std::vector<BlockTypeSpec>& specs) {
  std::set<uint16_t> ids;
  std::set<std::string> names, members;
  for (const BlockTypeSpec& s : specs) {
    if (s.type_id == kRawType) Fail(Errc::kConfig, "type id 65535 is reserved");
    if (!ids.insert(s.type_id).second) Fail(Errc::kConfig, "duplicate type id " + std::to_string(s.type_id));
    if (!names.insert(s.name).second) Fail(Errc::kConfig, "duplicate type name '" + s.name + "'");
    if (s.members.empty() || s.members.size() > 255) {
      Fail(Errc::kConfig, "type '" + s.name + "' needs 1..255 member tensors");
    }
    for (const BlockMember& m : s.members) {
      if (!members.insert(m.tensor).second) {
        Fail(Errc::kConfig, "tensor '" + m.tensor + "' belongs to more than one block type");
      }
      if (m.axis < 0 || m.axis > 255) Fail(Errc::kConfig, "axis out of range for '" + m.tensor + "'");
    }
  }
}

TraversalPlan BuildTraversalPlan(const std::vector<std::vector<TensorShapeEntry>>& shapes,
                                 const std::vector<BlockTypeSpec>& specs, int keyframe_interval) {
  if (keyframe_interval < 1) Fail(Errc::kConfig, "keyframe interval must be >= 1");
  TraversalPlan plan;
  const int nt = static_cast<int>(specs.size());
  plan.type_dims.assign(nt, 0);
  std::vector<int> last(nt, -1);
  for (size_t li = 0; li < shapes.size(); ++li) {
    const int layer = static_cast<int>(li) + 1;
    const Layer skel = SkeletonLayer(layer, shapes[li]);
    std::set<std::string> covered;
    std::vector<int> present(nt, -1);
    for (int t = 0; t < nt; ++t) {
      if (!LayerHasType(skel, specs[t])) continue;
      RecordPlan r;
      r.layer = layer;
      r.type = t;
      BlockGeometry(skel, specs[t], &r.count, &r.member_sizes);
      r.dim = std::accumulate(r.member_sizes.begin(), r.member_sizes.end(), 0);
      if (plan.type_dims[t] == 0) plan.type_dims[t] = r.dim;
      const int p = last[t];
      if (p >= 0 && plan.records[p].layer == layer - 1 && plan.records[p].count == r.count &&
          plan.records[p].dim == r.dim) {
        r.prev = p;
      }
      r.absolute = IsKeyframe(layer, keyframe_interval) || r.prev < 0 || r.dim != plan.type_dims[t];
      r.group_mode = specs[t].group_mode;
      const int m = static_cast<int>(specs[t].members.size());
      r.local_group.resize(r.dim);
      int base = 0;
      for (int mi = 0; mi < m; ++mi) {
        for (int k = 0; k < r.member_sizes[mi]; ++k) r.local_group[base + k] = static_cast<uint32_t>(mi);
        base += r.member_sizes[mi];
      }
      switch (r.group_mode) {
        case GroupMode::kBlock:
          std::fill(r.local_group.begin(), r.local_group.end(), 0u);
          r.local_groups = 1;
          r.groups = r.count;
          break;
        case GroupMode::kMember:
          r.local_groups = m;
          r.groups = r.count * m;
          break;
        case GroupMode::kTensor:
          r.local_groups = m;
          r.groups = m;
          break;
      }
      for (const BlockMember& mem : specs[t].members) covered.insert(mem.tensor);
      present[t] = static_cast<int>(plan.records.size());
      plan.records.push_back(std::move(r));
    }
    for (int t = 0; t < nt; ++t) last[t] = present[t];
    for (size_t ti = 0; ti < shapes[li].size(); ++ti) {
      if (covered.count(shapes[li][ti].name)) continue;
      RecordPlan r;
      r.layer = layer;
      r.type = -1;
      r.tensor = static_cast<uint32_t>(ti);
      r.absolute = true;
      r.count = 1;
      const int64_t n = ShapeNumel(shapes[li][ti].shape);
      if (n > INT32_MAX) Fail(Errc::kInvalidArgument, "tensor too large");
      r.dim = static_cast<int>(n);
      r.member_sizes = {r.dim};
      r.group_mode = GroupMode::kTensor;
      r.groups = 1;
      r.local_groups = 1;
      r.local_group.assign(r.dim, 0u);
      plan.records.push_back(std::move(r));
    }
  }
  return plan;
}

void WriteHeader(const BitstreamHeader& h, ByteWriter* w, HeaderLayout* layout) {
  const size_t start = w->size();
  size_t models = 0;
  w->Raw(kMagic, 4);
  w->U16(h.version);
  w->U16(h.flags);
  w->U32(h.num_layers);
  w->U32(h.keyframe_interval);
  w->U32(h.arch_id);

  for (const auto& layer : h.shapes) {
    w->U32(static_cast<uint32_t>(layer.size()));
    for (const TensorShapeEntry& e : layer) {
      w->Str(e.name);
      w->U8(static_cast<uint8_t>(e.shape.size()));
      for (int64_t d : e.shape) w->U32(static_cast<uint32_t>(d));
    }
  }

  w->U32(static_cast<uint32_t>(h.specs.size()));
  for (const BlockTypeSpec& s : h.specs) {
    w->U16(s.type_id);
    w->Str(s.name);
    w->U8(static_cast<uint8_t>(s.group_mode));
    w->U8(static_cast<uint8_t>(s.members.size()));
    for (const BlockMember& m : s.members) {
      w->Str(m.tensor);
      w->U8(static_cast<uint8_t>(m.axis));
    }
  }

  w->U16(h.qmax_residual);
  w->U16(h.qmax_keyframe);

  w->U16(static_cast<uint16_t>(h.entropy_model));
  w->U8(kCdfBits);
  if (h.entropy_model == EntropyModelId::kLogistic) {
    const EntropyDims& d = h.psi.dims();
    w->U32(static_cast<uint32_t>(d.num_layers));
    w->U32(static_cast<uint32_t>(d.num_types));
    w->U32(static_cast<uint32_t>(d.d_emb));
    w->U32(static_cast<uint32_t>(d.hidden));
    const size_t before = w->size();
    h.psi.bank().Write(w);
    models += w->size() - before;
  }

  w->U8(static_cast<uint8_t>(h.predictor_kind));
  if (h.predictor_kind == PredictorKind::kMlp) {
    const PredictorDims& d = h.theta.dims();
    w->U32(static_cast<uint32_t>(d.num_layers));
    w->U32(static_cast<uint32_t>(d.type_dims.size()));
    for (int dt : d.type_dims) w->U32(static_cast<uint32_t>(dt));
    w->U32(static_cast<uint32_t>(d.d_lat));
    w->U32(static_cast<uint32_t>(d.d_emb));
    w->U32(static_cast<uint32_t>(h.theta.hidden()));
    const size_t before = w->size();
    h.theta.bank().Write(w);
    models += w->size() - before;
  }

  w->U8(h.fixed_length_perms() ? 1 : 0);
  w->U16(static_cast<uint16_t>(h.perm.threshold));
  if (!h.fixed_length_perms()) {
    const size_t before = w->size();
    for (const PermTypeScales& s : h.perm.types) {
      for (double v : s.abs) w->U16(det::FloatToHalf(static_cast<float>(v)));
      for (double v : s.delta) w->U16(det::FloatToHalf(static_cast<float>(v)));
    }
    models += w->size() - before;
  }

  const size_t qt_start = w->size();
  w->U32(static_cast<uint32_t>(h.qtables.size()));
  for (const SharedQTable& t : h.qtables) {
    w->U16(t.id);
    w->U8(t.has_means ? 1 : 0);
    w->U32(static_cast<uint32_t>(t.step.size()));
    for (float s : t.step) w->F32(s);
    if (t.has_means) {
      for (float m : t.mean) w->F32(m);
    }
  }
  const size_t qt_bytes = w->size() - qt_start;

  w->U32(h.record_count);
  if (layout) {
    layout->total = w->size() - start;
    layout->models = models;
    layout->qtables = qt_bytes;
  }
}

BitstreamHeader ParseHeader(ByteReader* r, HeaderLayout* layout) {
  const size_t start = r->pos();
  size_t models = 0;
  BitstreamHeader h;
  if (r->remaining() < 4 || std::memcmp(r->Take(4), kMagic, 4) != 0) {
    Fail(Errc::kBadMagic, "not an mcwc bitstream");
  }
  h.version = r->U16();
  if (h.version != kFormatVersion) {
    Fail(Errc::kUnsupportedVersion, "bitstream version " + std::to_string(h.version));
  }
  h.flags = r->U16();
  if (h.flags & ~(kFlagFixedLengthCodes | kFlagFixedLengthPerms | kFlagLearnedMeans)) {
    Fail(Errc::kManifestParse, "unknown header flags");
  }
  h.num_layers = ReadBounded(r, 1, kMaxDim, "layer count");
  h.keyframe_interval = ReadBounded(r, 1, UINT32_MAX, "keyframe interval");
  h.arch_id = r->U32();

  h.shapes.resize(h.num_layers);
  for (auto& layer : h.shapes) {
    const uint32_t n = ReadBounded(r, 1, kMaxDim, "tensor count");
    if (n > r->remaining()) Fail(Errc::kCorruptStream, "tensor table exceeds stream size");
    std::set<std::string> seen;
    for (uint32_t i = 0; i < n; ++i) {
      TensorShapeEntry e;
      e.name = r->Str();
      if (!seen.insert(e.name).second) Fail(Errc::kManifestParse, "duplicate tensor '" + e.name + "'");
      const uint8_t rank = r->U8();
      if (rank == 0) Fail(Errc::kManifestParse, "rank-0 tensor '" + e.name + "'");
      for (uint8_t k = 0; k < rank; ++k) e.shape.push_back(ReadBounded(r, 1, UINT32_MAX, "dimension"));
      if (ShapeNumel(e.shape) > INT32_MAX) Fail(Errc::kManifestParse, "tensor too large");
      layer.push_back(std::move(e));
    }
  }

  const uint32_t nt = ReadBounded(r, 0, 0xFFFE, "block type count");
  for (uint32_t t = 0; t < nt; ++t) {
    BlockTypeSpec s;
    s.type_id = r->U16();
    s.name = r->Str();
    const uint8_t gm = r->U8();
    if (gm > 2) Fail(Errc::kManifestParse, "unknown group mode");
    s.group_mode = static_cast<GroupMode>(gm);
    const uint8_t nm = r->U8();
    for (uint8_t m = 0; m < nm; ++m) {
      BlockMember mem;
      mem.tensor = r->Str();
      mem.axis = r->U8();
      s.members.push_back(std::move(mem));
    }
    h.specs.push_back(std::move(s));
  }
  try {
    ValidateSpecs(h.specs);
  } catch (const Error& e) {
    Fail(Errc::kManifestParse, e.detail());
  }

  h.qmax_residual = r->U16();
  h.qmax_keyframe = r->U16();
  if (h.qmax_residual < 1 || h.qmax_keyframe < 1 || h.qmax_residual > 32767 ||
      h.qmax_keyframe > 32767) {
    Fail(Errc::kManifestParse, "quantizer range");
  }

  const uint16_t model = r->U16();
  if (model > 1) Fail(Errc::kManifestParse, "unknown entropy model id " + std::to_string(model));
  h.entropy_model = static_cast<EntropyModelId>(model);
  if (r->U8() != kCdfBits) Fail(Errc::kManifestParse, "unsupported coder precision");
  if (h.entropy_model == EntropyModelId::kLogistic) {
    EntropyDims d;
    d.num_layers = static_cast<int>(ReadBounded(r, 1, kMaxDim, "entropy layers"));
    d.num_types = static_cast<int>(ReadBounded(r, 1, 0x10000, "entropy types"));
    d.d_emb = static_cast<int>(ReadBounded(r, 1, 4096, "entropy embedding"));
    d.hidden = static_cast<int>(ReadBounded(r, 1, 65536, "entropy hidden"));
    if (static_cast<uint32_t>(d.num_layers) != h.num_layers ||
        static_cast<uint32_t>(d.num_types) != nt + 1) {
      Fail(Errc::kManifestParse, "entropy model dimensions disagree with header");
    }
    CheckArraySize(*r, EntropyParamCount(d));
    h.psi = EntropyModel(d, 0);
    const size_t before = r->pos();
    h.psi.bank().Read(r);
    models += r->pos() - before;
  }

  const uint8_t kind = r->U8();
  if (kind > 1) Fail(Errc::kManifestParse, "unknown predictor kind");
  h.predictor_kind = static_cast<PredictorKind>(kind);
  if (h.predictor_kind == PredictorKind::kMlp) {
    PredictorDims d;
    d.num_layers = static_cast<int>(ReadBounded(r, 1, kMaxDim, "predictor layers"));
    const uint32_t ntypes = ReadBounded(r, 1, 0xFFFE, "predictor types");
    if (d.num_layers != static_cast<int>(h.num_layers) || ntypes != nt) {
      Fail(Errc::kManifestParse, "predictor dimensions disagree with header");
    }
    for (uint32_t t = 0; t < ntypes; ++t) d.type_dims.push_back(static_cast<int>(ReadBounded(r, 1, kMaxDim, "block dim")));
    d.d_lat = static_cast<int>(ReadBounded(r, 1, 65536, "latent width"));
    d.d_emb = static_cast<int>(ReadBounded(r, 1, 65536, "embedding width"));
    d.hidden = static_cast<int>(ReadBounded(r, 1, 1u << 20, "hidden width"));
    CheckArraySize(*r, PredictorParamCount(d));
    h.theta = Predictor(d, 0, false);
    const size_t before = r->pos();
    h.theta.bank().Read(r);
    models += r->pos() - before;
  }

  const uint8_t coding = r->U8();
  if (coding > 1 || (coding == 1) != h.fixed_length_perms()) {
    Fail(Errc::kManifestParse, "permutation coding mode");
  }
  h.perm.threshold = r->U16();
  if (h.perm.threshold < 1 || h.perm.threshold > 4096) Fail(Errc::kManifestParse, "escape threshold");
  if (coding == 0) {
    const size_t before = r->pos();
    for (uint32_t t = 0; t < nt; ++t) {
      PermTypeScales s;
      for (double& v : s.abs) v = det::HalfToFloat(r->U16());
      for (double& v : s.delta) v = det::HalfToFloat(r->U16());
      for (int b = 0; b < kPermBuckets; ++b) {
        if (!(s.abs[b] > 0.0) || !(s.delta[b] > 0.0) || !std::isfinite(s.abs[b]) ||
            !std::isfinite(s.delta[b])) {
          Fail(Errc::kManifestParse, "permutation model scale");
        }
      }
      h.perm.types.push_back(s);
    }
    models += r->pos() - before;
  }

  const size_t qt_start = r->pos();
  const uint32_t nq = r->U32();
  if (nq > 0x10000) Fail(Errc::kManifestParse, "shared table count");
  for (uint32_t i = 0; i < nq; ++i) {
    SharedQTable t;
    t.id = r->U16();
    const uint8_t f = r->U8();
    if (f > 1) Fail(Errc::kManifestParse, "shared table flags");
    t.has_means = f == 1;
    const uint32_t g = r->U32();
    CheckArraySize(*r, static_cast<uint64_t>(g) * (t.has_means ? 2 : 1));
    for (uint32_t k = 0; k < g; ++k) t.step.push_back(r->F32());
    if (t.has_means) {
      for (uint32_t k = 0; k < g; ++k) t.mean.push_back(r->F32());
    } else {
      t.mean.assign(g, 0.0f);
    }
    for (size_t k = 0; k < t.step.size(); ++k) {
      if (!(t.step[k] > 0.0f) || !std::isfinite(t.step[k]) || !std::isfinite(t.mean[k])) {
        Fail(Errc::kCorruptStream, "shared quantizer table entry");
      }
    }
    if (t.id != i) Fail(Errc::kManifestParse, "shared tables out of order");
    h.qtables.push_back(std::move(t));
  }
  const size_t qt_bytes = r->pos() - qt_start;

  h.record_count = r->U32();
  if (layout) {
    layout->total = r->pos() - start;
    layout->models = models;
    layout->qtables = qt_bytes;
  }
  return h;
}

QInfo ReadQInfo(ByteReader* r, const BitstreamHeader& h, const RecordPlan& plan, int qmax) {
  QInfo q;
  const uint8_t flag = r->U8();
  if (flag & ~0x3u) Fail(Errc::kCorruptStream, "QInfo flags");
  std::vector<float> steps, means;
  if (flag & 0x1u) {
    q.shared = true;
    q.table = r->U16();
    if (q.table >= h.qtables.size()) Fail(Errc::kCorruptStream, "unknown shared table");
    steps = h.qtables[q.table].step;
    means = h.qtables[q.table].mean;
  } else {
    const uint32_t g = r->U32();
    if (g != static_cast<uint32_t>(plan.groups)) Fail(Errc::kCorruptStream, "QInfo group count");
    steps.resize(g);
    for (float& s : steps) s = r->F32();
    means.assign(g, 0.0f);
    if (flag & 0x2u) {
      for (float& m : means) m = r->F32();
    }
  }
  if (steps.size() != static_cast<size_t>(plan.groups)) Fail(Errc::kCorruptStream, "QInfo group count");
  for (size_t k = 0; k < steps.size(); ++k) {
    if (!(steps[k] > 0.0f) || !std::isfinite(steps[k]) || !std::isfinite(means[k])) {
      Fail(Errc::kCorruptStream, "invalid quantizer step");
    }
  }
  q.params = FixedQuantizer(std::move(steps), std::move(means), plan.GroupMap(), qmax);
  return q;
}

void WriteTrailer(const Trailer& t, ByteWriter* w) {
  w->Raw(kTrailerMagic, 4);
  w->U32(static_cast<uint32_t>(t.lengths.size()));
  for (size_t i = 0; i < t.lengths.size(); ++i) {
    w->U64(t.lengths[i]);
    w->U32(t.clips[i]);
  }
  w->U64(t.offset);
}

Trailer ReadTrailer(const uint8_t* data, size_t size) {
  if (size < 8) Fail(Errc::kCorruptStream, "stream too short for trailer");
  ByteReader tail(data + size - 8, 8);
  Trailer t;
  t.offset = static_cast<size_t>(tail.U64());
  if (t.offset > size - 8) Fail(Errc::kCorruptStream, "trailer offset out of range");
  ByteReader r(data + t.offset, size - 8 - t.offset);
  if (std::memcmp(r.Take(4), kTrailerMagic, 4) != 0) Fail(Errc::kCorruptStream, "trailer magic");
  const uint32_t n = r.U32();
  if (static_cast<uint64_t>(n) * 12 != r.remaining()) Fail(Errc::kCorruptStream, "trailer size");
  for (uint32_t i = 0; i < n; ++i) {
    t.lengths.push_back(r.U64());
    t.clips.push_back(r.U32());
  }
  return t;
}

}  // namespace mcwc
