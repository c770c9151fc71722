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

#include "mcwc/codec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <map>
#include <thread>

#include "mcwc/codec_format.hpp"
#include "mcwc/error.hpp"
#include "mcwc/permcode.hpp"
#include "mcwc/quant.hpp"
#include "mcwc/random.hpp"
#include "mcwc/range_coder.hpp"

namespace mcwc {
namespace {

uint64_t Mix(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int FixedCodeBits(int qmax) {
  int bits = 0;
  while ((1 << bits) < 2 * qmax + 1) ++bits;
  return bits;
}

std::vector<std::vector<TensorShapeEntry>> ShapesOf(const Checkpoint& c) {
  std::vector<std::vector<TensorShapeEntry>> s(c.layers.size());
  for (size_t l = 0; l < c.layers.size(); ++l) {
    for (const Tensor& t : c.layers[l].tensors) s[l].push_back(TensorShapeEntry{t.name, t.shape});
  }
  return s;
}

std::string RecordName(const std::vector<BlockTypeSpec>& specs,
                       const std::vector<std::vector<TensorShapeEntry>>& shapes,
                       const RecordPlan& r) {
  std::string s = "layer " + std::to_string(r.layer);
  if (r.raw()) return s + " tensor '" + shapes[r.layer - 1][r.tensor].name + "'";
  return s + " type '" + specs[r.type].name + "'";
}

// ---------------------------------------------------------------------------
// Steps shared by the encoder's decode loop and the decoder. Both sides must
// run exactly these functions so their floating-point results agree.

void PredictRecord(const Predictor* pred, const float* prev, const RecordPlan& r,
                   std::vector<double>* out, uint64_t* calls) {
  const size_t d = static_cast<size_t>(r.dim);
  out->resize(static_cast<size_t>(r.count) * d);
  for (int i = 0; i < r.count; ++i) {
    const float* src = prev + i * d;
    double* dst = out->data() + i * d;
    if (pred) {
      pred->Predict(src, r.layer, r.type, dst);
      ++*calls;
    } else {
      for (size_t k = 0; k < d; ++k) dst[k] = src[k];
    }
  }
}

// One context per (block, local group), indexed block * local_groups + g.
std::vector<SymbolContext> RecordContexts(const RecordPlan& r, int num_block_types,
                                          const QuantizerParams& q,
                                          const std::vector<double>* predicted) {
  const int type = r.raw() ? num_block_types : r.type;
  std::vector<SymbolContext> ctx;
  ctx.reserve(static_cast<size_t>(r.count) * r.local_groups);
  std::vector<double> vals;
  for (int i = 0; i < r.count; ++i) {
    for (int g = 0; g < r.local_groups; ++g) {
      const double step = q.step[r.group(i, g)];
      if (r.absolute) {
        ctx.push_back(BuildContext(r.layer, type, step, {}, true));
        continue;
      }
      vals.clear();
      const double* p = predicted->data() + static_cast<size_t>(i) * r.dim;
      for (int k = 0; k < r.dim; ++k) {
        if (static_cast<int>(r.local_group[k]) == g) vals.push_back(p[k]);
      }
      ctx.push_back(BuildContext(r.layer, type, step, vals, false));
    }
  }
  return ctx;
}

void Reconstruct(const std::vector<int>& codes, const QuantizerParams& q,
                 const std::vector<double>* predicted, std::vector<float>* out) {
  out->resize(codes.size());
  for (size_t e = 0; e < codes.size(); ++e) {
    const uint32_t g = q.group_of[e];
    double v = DequantizeValue(codes[e], q.step[g], q.mean[g]);
    if (predicted) v = (*predicted)[e] + v;
    (*out)[e] = static_cast<float>(v);
  }
}

std::vector<Cdf> ContextTables(const std::vector<SymbolContext>& ctx, const EntropyModel& psi,
                               int qmax) {
  std::vector<Cdf> t;
  t.reserve(ctx.size());
  for (const SymbolContext& c : ctx) {
    double alpha, beta;
    psi.Predict(c, &alpha, &beta);
    t.push_back(LogisticCdf(alpha, beta, qmax));
  }
  return t;
}

Bytes EncodeCodes(const std::vector<int>& codes, const RecordPlan& r, int qmax,
                  const std::vector<SymbolContext>& ctx, const EntropyModel* psi) {
  if (!psi) {
    const int nb = FixedCodeBits(qmax);
    BitWriter w;
    for (int c : codes) w.Write(static_cast<uint32_t>(c + qmax), nb);
    return w.bytes();
  }
  const std::vector<Cdf> tables = ContextTables(ctx, *psi, qmax);
  RangeEncoder enc;
  for (int i = 0; i < r.count; ++i) {
    const int* c = codes.data() + static_cast<size_t>(i) * r.dim;
    const Cdf* base = tables.data() + static_cast<size_t>(i) * r.local_groups;
    for (int k = 0; k < r.dim; ++k) enc.EncodeSymbol(base[r.local_group[k]], c[k] + qmax);
  }
  return enc.Finish();
}

std::vector<int> DecodeCodes(const uint8_t* data, size_t size, const RecordPlan& r, int qmax,
                             const std::vector<SymbolContext>& ctx, const EntropyModel* psi) {
  std::vector<int> codes(static_cast<size_t>(r.count) * r.dim);
  if (!psi) {
    const int nb = FixedCodeBits(qmax);
    BitReader rd(data, size);
    for (int& c : codes) {
      const uint32_t v = rd.Read(nb);
      if (v > static_cast<uint32_t>(2 * qmax)) Fail(Errc::kCorruptStream, "fixed-length code out of range");
      c = static_cast<int>(v) - qmax;
    }
    return codes;
  }
  const std::vector<Cdf> tables = ContextTables(ctx, *psi, qmax);
  RangeDecoder dec(data, size);
  for (int i = 0; i < r.count; ++i) {
    int* c = codes.data() + static_cast<size_t>(i) * r.dim;
    const Cdf* base = tables.data() + static_cast<size_t>(i) * r.local_groups;
    for (int k = 0; k < r.dim; ++k) c[k] = dec.DecodeSymbol(base[r.local_group[k]]) - qmax;
  }
  return codes;
}

Checkpoint AssembleDecoded(uint32_t arch_id, const std::vector<std::vector<TensorShapeEntry>>& shapes,
                           const std::vector<BlockTypeSpec>& specs, const TraversalPlan& plan,
                           const std::vector<std::vector<float>>& dec,
                           const std::vector<Permutation>& perms) {
  Checkpoint out;
  out.arch_id = arch_id;
  size_t r = 0;
  for (size_t li = 0; li < shapes.size(); ++li) {
    const int layer = static_cast<int>(li) + 1;
    std::vector<BlockSet> sets;
    std::vector<const BlockTypeSpec*> set_specs;
    std::vector<Tensor> raw;
    for (; r < plan.records.size() && plan.records[r].layer == layer; ++r) {
      const RecordPlan& rp = plan.records[r];
      if (rp.raw()) {
        const TensorShapeEntry& e = shapes[li][rp.tensor];
        raw.push_back(Tensor{e.name, e.shape, dec[r]});
        continue;
      }
      BlockSet bs;
      bs.layer = layer;
      bs.type = rp.type;
      bs.count = rp.count;
      bs.dim = rp.dim;
      bs.member_sizes = rp.member_sizes;
      bs.data = dec[r];
      sets.push_back(ApplyPermutation(bs, InvertPermutation(perms[r])));
      set_specs.push_back(&specs[rp.type]);
    }
    std::vector<const BlockSet*> set_ptrs;
    for (const BlockSet& s : sets) set_ptrs.push_back(&s);
    out.layers.push_back(AssembleLayer(layer, shapes[li], set_ptrs, set_specs, raw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoder.

double EmpiricalBits(const std::vector<int>& codes, int qmax) {
  std::vector<uint64_t> hist(2 * qmax + 1, 0);
  for (int c : codes) ++hist[c + qmax];
  const double n = static_cast<double>(codes.size());
  double bits = 0.0;
  for (uint64_t h : hist) {
    if (h) bits += static_cast<double>(h) * std::log2(n / static_cast<double>(h));
  }
  return bits;
}

double PermSelfCost(const Permutation& p, int threshold) {
  const LehmerDigits d = LehmerEncode(p);
  PermSamples s;
  AddPermSamples(d, nullptr, &s);
  const PermModelParams m = FitPermModel({s}, threshold);
  return PermStreamNll(d, nullptr, m.types[0], threshold);
}

class Encoder {
 public:
  Encoder(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs, const CodecConfig& cfg,
          const ActivationSet* acts)
      : ckpt_(ckpt), specs_(specs), cfg_(cfg), acts_(acts) {}

  EncodeResult Run();

 private:
  void AlignChain(const Predictor* pred);
  bool GateKeeps(int r, const Permutation& pi, const BlockSet& ref);
  std::vector<TrainPair> BuildPairs() const;
  QuantizerParams MakeQuantizer(const std::vector<double>& v, const RecordPlan& rp, double gamma,
                                double fixed_step, int qmax) const;
  const ActivationSummary* FindActs(const RecordPlan& rp) const {
    if (!acts_) return nullptr;
    auto it = acts_->find({rp.layer, rp.type});
    return it == acts_->end() ? nullptr : &it->second;
  }

  const Checkpoint& ckpt_;
  const std::vector<BlockTypeSpec>& specs_;
  CodecConfig cfg_;
  const ActivationSet* acts_;

  std::vector<std::vector<TensorShapeEntry>> shapes_;
  TraversalPlan plan_;
  std::vector<BlockSet> canon_, aligned_;
  std::vector<Permutation> perms_;
  std::vector<ActivationSummary> aligned_acts_;
  std::vector<uint8_t> has_acts_;
  EncodeStats stats_;
};

bool Encoder::GateKeeps(int r, const Permutation& pi, const BlockSet& ref) {
  const RecordPlan& rp = plan_.records[r];
  double saving = 0.0;
  if (!rp.absolute) {
    const BlockSet moved = ApplyPermutation(canon_[r], pi);
    const size_t n = moved.data.size();
    std::vector<double> r_id(n), r_al(n);
    double mean = 0.0;
    for (size_t k = 0; k < n; ++k) {
      r_id[k] = static_cast<double>(canon_[r].data[k]) - ref.data[k];
      r_al[k] = static_cast<double>(moved.data[k]) - ref.data[k];
      mean += r_al[k];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : r_al) ss += (v - mean) * (v - mean);
    double step = cfg_.step_mode == StepMode::kFixed
                      ? cfg_.fixed_step
                      : cfg_.gamma * std::sqrt(ss / static_cast<double>(n));
    step = std::max(step, kStepFloor);
    const int qmax = cfg_.qmax_residual;
    std::vector<int> c_id(n), c_al(n);
    bool clipped = false;
    for (size_t k = 0; k < n; ++k) {
      c_id[k] = QuantizeValue(r_id[k], step, 0.0, qmax, &clipped);
      c_al[k] = QuantizeValue(r_al[k], step, 0.0, qmax, &clipped);
    }
    saving = EmpiricalBits(c_id, qmax) - EmpiricalBits(c_al, qmax);
  }
  double cost = 0.0;
  if (!cfg_.fixed_length_perms) {
    cost = PermSelfCost(pi, kPermThreshold) -
           PermSelfCost(IdentityPermutation(pi.size()), kPermThreshold);
  }
  return saving >= cost;
}

void Encoder::AlignChain(const Predictor* pred) {
  const size_t n = plan_.records.size();
  perms_.assign(n, {});
  aligned_.assign(n, {});
  aligned_acts_.assign(n, {});
  has_acts_.assign(n, 0);
  stats_.perms_gated = 0;
  for (size_t r = 0; r < n; ++r) {
    const RecordPlan& rp = plan_.records[r];
    if (rp.raw()) continue;
    Permutation pi = IdentityPermutation(rp.count);
    const ActivationSummary* cand_act = FindActs(rp);
    const int p = rp.prev;
    if (p >= 0 && !cfg_.no_alignment && rp.count > 1) {
      AlignConfig ac = cfg_.align;
      if (cfg_.random_alignment) ac.policy = SolverPolicy::kRandom;
      ac.seed = Mix(cfg_.seed, r);
      BlockSet ref;
      if (pred && cfg_.residual_energy_alignment && !rp.absolute && !cfg_.random_alignment) {
        ref = aligned_[p];
        std::vector<double> y(rp.dim);
        for (int i = 0; i < rp.count; ++i) {
          pred->Predict(aligned_[p].block(i), rp.layer, rp.type, y.data());
          for (int k = 0; k < rp.dim; ++k) ref.block(i)[k] = static_cast<float>(y[k]);
        }
        pi = SolveAssignment(ResidualEnergyCosts(canon_[r], ref), ac);
      } else {
        const bool use_acts = cand_act && has_acts_[p];
        pi = AlignLayerPair(aligned_[p], canon_[r], use_acts ? &aligned_acts_[p] : nullptr,
                            use_acts ? cand_act : nullptr, ac)
                 .perm;
        ref = aligned_[p];
      }
      if (cfg_.alignment_gating && !cfg_.random_alignment && !IsIdentity(pi) &&
          !GateKeeps(static_cast<int>(r), pi, ref)) {
        pi = IdentityPermutation(rp.count);
        ++stats_.perms_gated;
      }
    }
    aligned_[r] = ApplyPermutation(canon_[r], pi);
    if (cand_act) {
      aligned_acts_[r] = PermuteSummary(*cand_act, pi);
      has_acts_[r] = 1;
    }
    perms_[r] = std::move(pi);
  }
}

std::vector<TrainPair> Encoder::BuildPairs() const {
  std::vector<TrainPair> pairs;
  for (size_t r = 0; r < plan_.records.size(); ++r) {
    const RecordPlan& rp = plan_.records[r];
    if (rp.raw() || rp.absolute) continue;
    for (int i = 0; i < rp.count; ++i) {
      TrainPair tp;
      tp.prev = aligned_[rp.prev].block(i);
      tp.target = aligned_[r].block(i);
      tp.layer = rp.layer;
      tp.type = rp.type;
      tp.local_group = &rp.local_group;
      tp.local_groups = rp.local_groups;
      pairs.push_back(tp);
    }
  }
  return pairs;
}

QuantizerParams Encoder::MakeQuantizer(const std::vector<double>& v, const RecordPlan& rp,
                                       double gamma, double fixed_step, int qmax) const {
  QuantizerParams q = InitQuantizer(v, rp.GroupMap(), static_cast<size_t>(rp.groups), gamma, qmax,
                                    cfg_.learned_means);
  if (cfg_.step_mode == StepMode::kFixed) {
    q.step.assign(q.step.size(), static_cast<float>(std::max(fixed_step, kStepFloor)));
  }
  return q;
}

EncodeResult Encoder::Run() {
  ValidateCheckpoint(ckpt_);
  ValidateConfig(cfg_);
  ValidateSpecs(specs_);
  const int num_layers = ckpt_.num_layers();
  const int nt = static_cast<int>(specs_.size());
  shapes_ = ShapesOf(ckpt_);
  plan_ = BuildTraversalPlan(shapes_, specs_, cfg_.keyframe_interval);
  const size_t n = plan_.records.size();
  if (n > UINT32_MAX) Fail(Errc::kInvalidArgument, "too many records");

  canon_.assign(n, {});
  for (size_t r = 0; r < n; ++r) {
    const RecordPlan& rp = plan_.records[r];
    if (rp.raw()) continue;
    canon_[r] = ExtractBlocks(ckpt_.layers[rp.layer - 1], specs_[rp.type]);
    canon_[r].type = rp.type;
    if (rp.count > 65536) Fail(Errc::kInvalidArgument, "block types support at most 65536 blocks");
  }

  // Alignment.
  AlignChain(nullptr);

  // Predictor training.
  bool any_predicted = false;
  for (const RecordPlan& rp : plan_.records) any_predicted |= !rp.raw() && !rp.absolute;
  const bool use_pred = !cfg_.no_predictor && any_predicted;
  PredictorDims pd;
  pd.num_layers = num_layers;
  for (int d : plan_.type_dims) pd.type_dims.push_back(std::max(d, 1));
  pd.d_lat = cfg_.d_lat;
  pd.d_emb = cfg_.d_emb;
  pd.hidden = cfg_.hidden;
  Predictor pred;
  if (use_pred) pred = Predictor(pd, Mix(cfg_.seed, 101));

  EntropyDims ed = cfg_.entropy;
  ed.num_layers = num_layers;
  ed.num_types = nt + 1;
  EntropyModel psi;
  if (!cfg_.fixed_length_codes) psi = EntropyModel(ed, Mix(cfg_.seed, 103));

  std::vector<double> kappa(std::max(nt, 1), 0.0);
  if (use_pred) {
    TrainConfig tc = cfg_.train;
    tc.seed = Mix(cfg_.seed, 102);
    std::vector<TrainPair> pairs = BuildPairs();
    stats_.predictor_loss_initial = ResidualLoss(pred, pairs, nullptr);
    PredictorTrainer trainer(&pred, tc, tc.steps);
    const int period = cfg_.residual_energy_alignment ? cfg_.recompute_period : std::max(tc.steps, 1);
    if (cfg_.residual_energy_alignment && tc.steps == 0) {
      AlignChain(&pred);
      pairs = BuildPairs();
    }
    while (trainer.step() < tc.steps) {
      trainer.Run(pairs, std::min(period, tc.steps - trainer.step()), nullptr);
      if (cfg_.residual_energy_alignment) {
        AlignChain(&pred);
        pairs = BuildPairs();
      }
    }
    if (cfg_.lambda > 0.0 && tc.joint_steps > 0 && !cfg_.fixed_length_codes) {
      RateTrainSetup setup;
      setup.lambda = cfg_.lambda;
      setup.fixed_step = cfg_.step_mode == StepMode::kFixed;
      setup.gamma = cfg_.gamma;
      setup.fixed_step_value = cfg_.fixed_step;
      setup.qmax = cfg_.qmax_residual;
      setup.num_types = nt;
      const RateTrainResult rt = TrainRateDistortion(&pred, &psi, pairs, setup, tc);
      kappa = rt.log_step_scale;
    }
    stats_.predictor_loss_final = ResidualLoss(pred, pairs, nullptr);
    pred.bank().RoundToF32();
  }
  const Predictor* pred_ptr = use_pred ? &pred : nullptr;

  // Closed-loop quantization against the decoded context.
  std::vector<std::vector<int>> codes(n);
  std::vector<QuantizerParams> qp(n);
  std::vector<std::vector<double>> predicted(n);
  std::vector<std::vector<float>> dec(n);
  std::vector<uint32_t> clips(n, 0);
  for (size_t r = 0; r < n; ++r) {
    const RecordPlan& rp = plan_.records[r];
    std::vector<double> v;
    if (rp.raw()) {
      const std::vector<float>& src = ckpt_.layers[rp.layer - 1].tensors[rp.tensor].data;
      v.assign(src.begin(), src.end());
    } else {
      v.assign(aligned_[r].data.begin(), aligned_[r].data.end());
    }
    uint64_t nclip = 0;
    if (rp.absolute) {
      const double fixed = rp.raw() && cfg_.raw_fixed_step > 0.0 ? cfg_.raw_fixed_step
                                                                 : cfg_.keyframe_fixed_step;
      qp[r] = MakeQuantizer(v, rp, cfg_.keyframe_gamma, fixed, cfg_.qmax_keyframe);
      codes[r] = Quantize(v, qp[r], &nclip);
      Reconstruct(codes[r], qp[r], nullptr, &dec[r]);
    } else {
      PredictRecord(pred_ptr, dec[rp.prev].data(), rp, &predicted[r], &stats_.predictor_calls_residual);
      for (size_t k = 0; k < v.size(); ++k) v[k] -= predicted[r][k];
      const double scale = std::exp(kappa[rp.type]);
      qp[r] = MakeQuantizer(v, rp, cfg_.gamma * scale, cfg_.fixed_step * scale, cfg_.qmax_residual);
      codes[r] = Quantize(v, qp[r], &nclip);
      Reconstruct(codes[r], qp[r], &predicted[r], &dec[r]);
    }
    clips[r] = static_cast<uint32_t>(std::min<uint64_t>(nclip, UINT32_MAX));
    stats_.clips += nclip;
  }

  // Entropy model fit.
  std::vector<std::vector<SymbolContext>> contexts(n);
  if (!cfg_.fixed_length_codes) {
    std::vector<ContextHistogram> hist;
    for (size_t r = 0; r < n; ++r) {
      const RecordPlan& rp = plan_.records[r];
      const int qmax = rp.absolute ? cfg_.qmax_keyframe : cfg_.qmax_residual;
      contexts[r] = RecordContexts(rp, nt, qp[r], rp.absolute ? nullptr : &predicted[r]);
      std::vector<uint32_t> dense(2 * qmax + 1, 0);
      for (int i = 0; i < rp.count; ++i) {
        for (int g = 0; g < rp.local_groups; ++g) {
          const int* c = codes[r].data() + static_cast<size_t>(i) * rp.dim;
          for (int k = 0; k < rp.dim; ++k) {
            if (static_cast<int>(rp.local_group[k]) == g) ++dense[c[k] + qmax];
          }
          ContextHistogram h;
          h.ctx = contexts[r][static_cast<size_t>(i) * rp.local_groups + g];
          h.qmax = qmax;
          for (int s = 0; s <= 2 * qmax; ++s) {
            if (dense[s]) {
              h.counts.emplace_back(s - qmax, dense[s]);
              dense[s] = 0;
            }
          }
          if (!h.counts.empty()) hist.push_back(std::move(h));
        }
      }
    }
    EntropyFitConfig fc = cfg_.entropy_fit;
    fc.seed = Mix(cfg_.seed, 104);
    stats_.entropy_fit = FitEntropyModel(&psi, hist, fc);
    psi.bank().RoundToF32();
    stats_.proxy_code_bits = CodelengthProxy(psi, hist);
  } else {
    for (size_t r = 0; r < n; ++r) {
      const int qmax = plan_.records[r].absolute ? cfg_.qmax_keyframe : cfg_.qmax_residual;
      stats_.proxy_code_bits += static_cast<double>(codes[r].size()) * FixedCodeBits(qmax);
    }
  }

  // Permutation model.
  std::vector<LehmerDigits> digits(n);
  std::vector<PermSamples> samples(nt);
  for (size_t r = 0; r < n; ++r) {
    const RecordPlan& rp = plan_.records[r];
    if (rp.raw()) continue;
    digits[r] = LehmerEncode(perms_[r]);
    const bool delta = !rp.absolute && cfg_.delta_perm_coding;
    AddPermSamples(digits[r], delta ? &digits[rp.prev] : nullptr, &samples[rp.type]);
  }

  // Header.
  BitstreamHeader h;
  h.version = kFormatVersion;
  if (cfg_.fixed_length_codes) h.flags |= kFlagFixedLengthCodes;
  if (cfg_.fixed_length_perms) h.flags |= kFlagFixedLengthPerms;
  if (cfg_.learned_means) h.flags |= kFlagLearnedMeans;
  h.num_layers = static_cast<uint32_t>(num_layers);
  h.keyframe_interval = static_cast<uint32_t>(cfg_.keyframe_interval);
  h.arch_id = ckpt_.arch_id;
  h.shapes = shapes_;
  h.specs = specs_;
  h.qmax_residual = static_cast<uint16_t>(cfg_.qmax_residual);
  h.qmax_keyframe = static_cast<uint16_t>(cfg_.qmax_keyframe);
  h.entropy_model = cfg_.fixed_length_codes ? EntropyModelId::kFixedLength : EntropyModelId::kLogistic;
  if (!cfg_.fixed_length_codes) h.psi = psi;
  h.predictor_kind = use_pred ? PredictorKind::kMlp : PredictorKind::kIdentity;
  if (use_pred) h.theta = pred;
  h.perm = FitPermModel(samples, kPermThreshold);
  h.record_count = static_cast<uint32_t>(n);

  std::vector<int> table_of(n, -1);
  if (cfg_.step_mode == StepMode::kFixed && !cfg_.learned_means) {
    std::map<std::vector<float>, int> ids;
    for (size_t r = 0; r < n; ++r) {
      auto it = ids.find(qp[r].step);
      if (it == ids.end()) {
        if (ids.size() >= 0x10000) continue;
        SharedQTable t;
        t.id = static_cast<uint16_t>(h.qtables.size());
        t.step = qp[r].step;
        t.mean.assign(t.step.size(), 0.0f);
        it = ids.emplace(qp[r].step, t.id).first;
        h.qtables.push_back(std::move(t));
      }
      table_of[r] = it->second;
    }
  }

  // Serialization.
  EncodeResult res;
  ByteWriter w(&res.bitstream);
  WriteHeader(h, &w);
  Trailer trailer;
  const EntropyModel* psi_ptr = cfg_.fixed_length_codes ? nullptr : &h.psi;
  for (size_t r = 0; r < n; ++r) {
    const RecordPlan& rp = plan_.records[r];
    const size_t start = w.size();
    w.U32(static_cast<uint32_t>(rp.layer));
    if (rp.raw()) {
      w.U16(kRawType);
      w.U32(rp.tensor);
    } else {
      w.U16(specs_[rp.type].type_id);
    }
    w.U8(static_cast<uint8_t>(rp.absolute ? RecordMode::kAbsolute : RecordMode::kPredicted));
    if (!rp.raw()) {
      Bytes pb;
      if (cfg_.fixed_length_perms) {
        pb = EncodePermFixed(perms_[r]);
      } else {
        const bool delta = !rp.absolute && cfg_.delta_perm_coding;
        pb = EncodePermStream(digits[r], delta ? &digits[rp.prev] : nullptr, h.perm.types[rp.type],
                              h.perm.threshold);
      }
      w.U32(static_cast<uint32_t>(pb.size()));
      w.Raw(pb);
    }
    if (table_of[r] >= 0) {
      WriteQInfoShared(static_cast<uint16_t>(table_of[r]), &w);
    } else {
      WriteQInfoInline(qp[r], cfg_.learned_means, &w);
    }
    const int qmax = rp.absolute ? cfg_.qmax_keyframe : cfg_.qmax_residual;
    const Bytes cb = EncodeCodes(codes[r], rp, qmax, contexts[r], psi_ptr);
    w.U32(static_cast<uint32_t>(cb.size()));
    w.Raw(cb);
    trailer.lengths.push_back(w.size() - start);
    trailer.clips.push_back(clips[r]);
  }
  trailer.offset = w.size();
  WriteTrailer(trailer, &w);

  res.reconstruction = AssembleDecoded(ckpt_.arch_id, shapes_, specs_, plan_, dec, perms_);
  stats_.records = n;
  stats_.distortion = SquaredError(ckpt_, res.reconstruction);
  const uint64_t params = ParamCount(ckpt_);
  stats_.mse = params ? stats_.distortion / static_cast<double>(params) : 0.0;
  res.rate = RateReport(res.bitstream);
  if (res.rate.total() != 8 * static_cast<uint64_t>(res.bitstream.size())) {
    Fail(Errc::kCorruptStream, "rate accounting does not cover the bitstream");
  }
  res.stats = stats_;
  return res;
}

// ---------------------------------------------------------------------------
// Decoder.

struct DecoderState {
  BitstreamHeader h;
  TraversalPlan plan;
  size_t records_start = 0;
  std::vector<std::vector<float>> dec;
  std::vector<Permutation> perms;
  std::vector<LehmerDigits> digits;
};

DecoderState OpenStream(const uint8_t* data, size_t size) {
  DecoderState s;
  ByteReader r(data, size);
  s.h = ParseHeader(&r);
  s.records_start = r.pos();
  s.plan = BuildTraversalPlan(s.h.shapes, s.h.specs, static_cast<int>(s.h.keyframe_interval));
  if (s.plan.records.size() != s.h.record_count) {
    Fail(Errc::kRecordCountMismatch, "header declares " + std::to_string(s.h.record_count) +
                                         " records, layout implies " +
                                         std::to_string(s.plan.records.size()));
  }
  if (s.h.predictor_kind == PredictorKind::kMlp) {
    for (size_t t = 0; t < s.plan.type_dims.size(); ++t) {
      const int d = s.plan.type_dims[t];
      if (d > 0 && s.h.theta.dims().type_dims[t] != d) {
        Fail(Errc::kManifestParse, "predictor block dimension disagrees with shapes");
      }
    }
  }
  const size_t n = s.plan.records.size();
  s.dec.resize(n);
  s.perms.resize(n);
  s.digits.resize(n);
  return s;
}

// Decodes records [begin, end) starting at byte `pos`; returns the end
// position and each record's byte length.
size_t DecodeRecords(DecoderState* s, const uint8_t* data, size_t size, size_t begin, size_t end,
                     size_t pos, std::vector<uint64_t>* lengths, DecodeStats* stats) {
  const BitstreamHeader& h = s->h;
  const int nt = static_cast<int>(h.specs.size());
  const Predictor* pred = h.predictor_kind == PredictorKind::kMlp ? &h.theta : nullptr;
  const EntropyModel* psi = h.entropy_model == EntropyModelId::kLogistic ? &h.psi : nullptr;
  for (size_t r = begin; r < end; ++r) {
    const RecordPlan& rp = s->plan.records[r];
    try {
      ByteReader rd(data, size);
      rd.Seek(pos);
      const uint32_t layer = rd.U32();
      const uint16_t type = rd.U16();
      const uint16_t want = rp.raw() ? kRawType : h.specs[rp.type].type_id;
      if (layer != static_cast<uint32_t>(rp.layer) || type != want) {
        Fail(Errc::kCorruptStream, "record " + std::to_string(r) + " out of order (found layer " +
                                       std::to_string(layer) + ", type id " + std::to_string(type) + ")");
      }
      if (rp.raw() && rd.U32() != rp.tensor) Fail(Errc::kCorruptStream, "raw tensor index");
      const uint8_t mode = rd.U8();
      if (mode != static_cast<uint8_t>(rp.absolute ? RecordMode::kAbsolute : RecordMode::kPredicted)) {
        Fail(Errc::kCorruptStream, "record mode disagrees with keyframe schedule");
      }
      if (!rp.raw()) {
        const uint32_t nb = rd.U32();
        const uint8_t* pb = rd.Take(nb);
        if (h.fixed_length_perms()) {
          s->perms[r] = DecodePermFixed(pb, nb, static_cast<size_t>(rp.count));
          s->digits[r] = LehmerEncode(s->perms[r]);
        } else {
          s->digits[r] = DecodePermStream(pb, nb, static_cast<size_t>(rp.count),
                                          rp.absolute ? nullptr : &s->digits[rp.prev],
                                          h.perm.types[rp.type], h.perm.threshold);
          s->perms[r] = LehmerDecode(s->digits[r]);
        }
      }
      const int qmax = rp.absolute ? h.qmax_keyframe : h.qmax_residual;
      const QInfo qi = ReadQInfo(&rd, h, rp, qmax);
      std::vector<double> predicted;
      if (!rp.absolute) PredictRecord(pred, s->dec[rp.prev].data(), rp, &predicted, &stats->predictor_calls_residual);
      std::vector<SymbolContext> ctx;
      if (psi) ctx = RecordContexts(rp, nt, qi.params, rp.absolute ? nullptr : &predicted);
      const uint32_t nc = rd.U32();
      const uint8_t* cb = rd.Take(nc);
      const std::vector<int> codes = DecodeCodes(cb, nc, rp, qmax, ctx, psi);
      Reconstruct(codes, qi.params, rp.absolute ? nullptr : &predicted, &s->dec[r]);
      if (lengths) lengths->push_back(rd.pos() - pos);
      pos = rd.pos();
    } catch (const Error& e) {
      Fail(e.code(), RecordName(h.specs, h.shapes, rp) + ": " + e.detail());
    }
  }
  return pos;
}

}  // namespace

std::vector<double> RateFractions(const RateBreakdown& r) {
  const double t = static_cast<double>(r.total());
  const uint64_t parts[5] = {r.codes_keyframe, r.codes_residual, r.perm, r.qparam, r.meta()};
  std::vector<double> f;
  for (uint64_t p : parts) f.push_back(t > 0 ? 100.0 * static_cast<double>(p) / t : 0.0);
  return f;
}

void ValidateConfig(const CodecConfig& c) {
  auto bad = [](const std::string& m) { Fail(Errc::kConfig, m); };
  if (c.keyframe_interval < 1) bad("keyframe_interval must be >= 1");
  if (!(c.lambda >= 0.0)) bad("lambda must be >= 0");
  if (!(c.align.alpha >= 0.0 && c.align.alpha <= 1.0)) bad("alpha must lie in [0, 1]");
  if (c.align.k_cand < 1) bad("k_cand must be >= 1");
  if (c.align.refine_passes < 0) bad("refine_passes must be >= 0");
  if (c.align.exact_threshold < 1) bad("exact_threshold must be >= 1");
  if (c.recompute_period < 1) bad("recompute_period must be >= 1");
  if (c.train.steps < 0 || c.train.joint_steps < 0) bad("training steps must be >= 0");
  if (c.train.batch < 1) bad("batch must be >= 1");
  if (c.d_lat < 1 || c.d_emb < 1 || c.hidden < 0) bad("predictor dimensions");
  if (c.entropy.d_emb < 1 || c.entropy.hidden < 1) bad("entropy model dimensions");
  if (c.entropy_fit.steps < 0) bad("entropy fit steps must be >= 0");
  if (!(c.gamma > 0.0) || !(c.keyframe_gamma > 0.0)) bad("gamma must be > 0");
  if (c.qmax_residual < 1 || c.qmax_residual > 32767 || c.qmax_keyframe < 1 ||
      c.qmax_keyframe > 32767) {
    bad("qmax must lie in [1, 32767]");
  }
  if (c.step_mode == StepMode::kFixed && (!(c.fixed_step > 0.0) || !(c.keyframe_fixed_step > 0.0))) {
    bad("fixed step mode needs fixed_step and keyframe_fixed_step > 0");
  }
  if (c.no_alignment && c.random_alignment) bad("no_alignment and random_alignment are exclusive");
}

EncodeResult EncodeCheckpoint(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                              const CodecConfig& cfg, const ActivationSet* activations) {
  Encoder enc(ckpt, specs, cfg, activations);
  return enc.Run();
}

Checkpoint DecodeCheckpoint(const uint8_t* data, size_t size, DecodeStats* stats) {
  DecodeStats local;
  DecoderState s = OpenStream(data, size);
  const size_t n = s.plan.records.size();
  std::vector<uint64_t> lengths;
  const size_t end = DecodeRecords(&s, data, size, 0, n, s.records_start, &lengths, &local);
  const Trailer t = ReadTrailer(data, size);
  if (t.offset != end) Fail(Errc::kCorruptStream, "unexpected bytes after the last record");
  if (t.lengths.size() != n) Fail(Errc::kRecordCountMismatch, "trailer record count");
  if (t.lengths != lengths) Fail(Errc::kCorruptStream, "trailer record lengths disagree");
  local.segments = 1;
  if (stats) *stats = local;
  return AssembleDecoded(s.h.arch_id, s.h.shapes, s.h.specs, s.plan, s.dec, s.perms);
}

Checkpoint DecodeSegmentsParallel(const uint8_t* data, size_t size, int workers, DecodeStats* stats) {
  DecoderState s = OpenStream(data, size);
  const size_t n = s.plan.records.size();
  const Trailer t = ReadTrailer(data, size);
  if (t.lengths.size() != n) Fail(Errc::kRecordCountMismatch, "trailer record count");
  std::vector<size_t> offset(n + 1);
  offset[0] = s.records_start;
  for (size_t r = 0; r < n; ++r) {
    if (t.lengths[r] > size) Fail(Errc::kCorruptStream, "record length");
    offset[r + 1] = offset[r] + static_cast<size_t>(t.lengths[r]);
  }
  if (offset[n] != t.offset) Fail(Errc::kCorruptStream, "record lengths disagree with trailer offset");

  const int k = static_cast<int>(s.h.keyframe_interval);
  const int num_segments = SegmentCount(static_cast<int>(s.h.num_layers), k);
  std::vector<size_t> seg_begin(num_segments + 1, n);
  for (size_t r = n; r-- > 0;) seg_begin[(s.plan.records[r].layer - 1) / k] = r;
  for (int g = num_segments - 1; g >= 0; --g) seg_begin[g] = std::min(seg_begin[g], seg_begin[g + 1]);

  std::vector<std::exception_ptr> errors(num_segments);
  std::vector<DecodeStats> seg_stats(num_segments);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int g; (g = next.fetch_add(1)) < num_segments;) {
      try {
        std::vector<uint64_t> lengths;
        const size_t b = seg_begin[g], e = seg_begin[g + 1];
        const size_t end = DecodeRecords(&s, data, size, b, e, offset[b], &lengths, &seg_stats[g]);
        if (end != offset[e]) Fail(Errc::kCorruptStream, "segment length disagrees with trailer");
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  const int nw = std::max(1, std::min(workers, num_segments));
  std::vector<std::thread> pool;
  for (int i = 1; i < nw; ++i) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  DecodeStats total;
  for (const DecodeStats& d : seg_stats) {
    total.predictor_calls_keyframe += d.predictor_calls_keyframe;
    total.predictor_calls_residual += d.predictor_calls_residual;
  }
  total.segments = num_segments;
  if (stats) *stats = total;
  return AssembleDecoded(s.h.arch_id, s.h.shapes, s.h.specs, s.plan, s.dec, s.perms);
}

RateBreakdown RateReport(const uint8_t* data, size_t size) {
  ByteReader r(data, size);
  HeaderLayout layout;
  const BitstreamHeader h = ParseHeader(&r, &layout);
  RateBreakdown rb;
  rb.meta_header = 8 * (layout.total - layout.models - layout.qtables);
  rb.meta_models = 8 * layout.models;
  rb.qparam = 8 * layout.qtables;
  for (const auto& layer : h.shapes) {
    for (const TensorShapeEntry& e : layer) rb.param_count += static_cast<uint64_t>(ShapeNumel(e.shape));
  }
  for (uint32_t i = 0; i < h.record_count; ++i) {
    size_t p0 = r.pos();
    r.U32();
    const uint16_t type = r.U16();
    if (type == kRawType) r.U32();
    const uint8_t mode = r.U8();
    if (type != kRawType) {
      const uint32_t nb = r.U32();
      rb.meta_framing += 8 * (r.pos() - p0);
      r.Take(nb);
      rb.perm += 8ull * nb;
      p0 = r.pos();
    }
    rb.meta_framing += 8 * (r.pos() - p0);
    p0 = r.pos();
    const uint8_t flag = r.U8();
    if (flag & 0x1u) {
      r.U16();
    } else {
      const uint32_t g = r.U32();
      const uint64_t bytes = 4ull * g * ((flag & 0x2u) ? 2 : 1);
      if (bytes > r.remaining()) Fail(Errc::kCorruptStream, "QInfo exceeds stream");
      r.Take(static_cast<size_t>(bytes));
    }
    rb.qparam += 8 * (r.pos() - p0);
    const uint32_t nc = r.U32();
    rb.meta_framing += 32;
    r.Take(nc);
    (mode == static_cast<uint8_t>(RecordMode::kAbsolute) ? rb.codes_keyframe : rb.codes_residual) += 8ull * nc;
  }
  rb.meta_trailer = 8 * r.remaining();
  return rb;
}

OperatingPoint SelectOperatingPoint(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                                    const CodecConfig& cfg, const std::vector<double>& lambdas,
                                    double target_bpp, const ActivationSet* activations) {
  if (lambdas.empty()) Fail(Errc::kConfig, "empty lambda list");
  OperatingPoint op;
  op.lambdas = lambdas;
  std::vector<EncodeResult> results;
  for (double lambda : lambdas) {
    CodecConfig c = cfg;
    c.lambda = lambda;
    results.push_back(EncodeCheckpoint(ckpt, specs, c, activations));
    op.bits_per_param.push_back(results.back().rate.bits_per_param());
    op.mse.push_back(results.back().stats.mse);
  }
  int best = -1;
  for (size_t i = 0; i < results.size(); ++i) {
    if (op.bits_per_param[i] > target_bpp) continue;
    if (best < 0 || op.mse[i] < op.mse[best]) best = static_cast<int>(i);
  }
  if (best < 0) {
    best = 0;
    for (size_t i = 1; i < results.size(); ++i) {
      if (op.bits_per_param[i] < op.bits_per_param[best]) best = static_cast<int>(i);
    }
  }
  op.chosen = best;
  op.result = std::move(results[best]);
  return op;
}

double SquaredError(const Checkpoint& a, const Checkpoint& b) {
  if (a.layers.size() != b.layers.size()) Fail(Errc::kShapeMismatch, "layer counts differ");
  double s = 0.0;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    for (const Tensor& ta : la.tensors) {
      const Tensor* tb = b.layers[l].Find(ta.name);
      if (!tb || tb->shape != ta.shape) Fail(Errc::kShapeMismatch, "tensor '" + ta.name + "' differs");
      for (size_t k = 0; k < ta.data.size(); ++k) {
        const double d = static_cast<double>(ta.data[k]) - tb->data[k];
        s += d * d;
      }
    }
  }
  return s;
}

bool BitIdentical(const Checkpoint& a, const Checkpoint& b) {
  if (a.arch_id != b.arch_id || a.layers.size() != b.layers.size()) return false;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    const Layer& lb = b.layers[l];
    if (la.index != lb.index || la.tensors.size() != lb.tensors.size()) return false;
    for (size_t t = 0; t < la.tensors.size(); ++t) {
      const Tensor& ta = la.tensors[t];
      const Tensor& tb = lb.tensors[t];
      if (ta.name != tb.name || ta.shape != tb.shape || ta.data.size() != tb.data.size()) return false;
      if (!ta.data.empty() &&
          std::memcmp(ta.data.data(), tb.data.data(), ta.data.size() * sizeof(float)) != 0) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace mcwc
