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

#include "mcwc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "mcwc/detmath.hpp"
#include "mcwc/error.hpp"

namespace mcwc {

CosineStats CosineProfile(const BlockSet& prev, const BlockSet& curr) {
  if (prev.count != curr.count || prev.dim != curr.dim) {
    Fail(Errc::kDimensionMismatch, "cosine profile needs equal block geometry");
  }
  CosineStats st;
  if (curr.count == 0) return st;
  std::vector<double> c(curr.count);
  for (int i = 0; i < curr.count; ++i) {
    const float* a = prev.block(i);
    const float* b = curr.block(i);
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (int k = 0; k < curr.dim; ++k) {
      ab += static_cast<double>(a[k]) * b[k];
      aa += static_cast<double>(a[k]) * a[k];
      bb += static_cast<double>(b[k]) * b[k];
    }
    c[i] = (aa > 0.0 && bb > 0.0) ? ab / std::sqrt(aa * bb) : 0.0;
  }
  for (double x : c) st.mean += x;
  st.mean /= static_cast<double>(c.size());
  for (double x : c) st.std += (x - st.mean) * (x - st.mean);
  st.std = std::sqrt(st.std / static_cast<double>(c.size()));
  return st;
}

namespace {

struct R2Parts {
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double energy = 0.0;
};

R2Parts ComputeParts(std::span<const double> t, std::span<const double> p, int dim) {
  if (t.size() != p.size()) Fail(Errc::kLengthMismatch, "targets and predictions differ in length");
  if (dim <= 0 || t.size() % static_cast<size_t>(dim) != 0) {
    Fail(Errc::kInvalidArgument, "length is not a multiple of the block dimension");
  }
  const size_t n = t.size() / dim;
  std::vector<double> mean(dim, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) mean[k] += t[i * dim + k];
  }
  for (double& m : mean) m /= static_cast<double>(std::max<size_t>(n, 1));
  R2Parts r;
  for (size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      const double x = t[i * dim + k];
      r.ss_res += (x - p[i * dim + k]) * (x - p[i * dim + k]);
      r.ss_tot += (x - mean[k]) * (x - mean[k]);
      r.energy += x * x;
    }
  }
  return r;
}

}  // namespace

double PredictorR2(std::span<const double> targets, std::span<const double> preds, int dim) {
  const R2Parts r = ComputeParts(targets, preds, dim);
  if (targets.size() < 2 * static_cast<size_t>(dim) || r.ss_tot <= 0.0) {
    Fail(Errc::kZeroVariance, "targets have zero variance about the mean block");
  }
  return 1.0 - r.ss_res / r.ss_tot;
}

double NormalizedResidualEnergy(std::span<const double> targets, std::span<const double> preds) {
  if (targets.size() != preds.size()) {
    Fail(Errc::kLengthMismatch, "targets and predictions differ in length");
  }
  double res = 0.0, energy = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    res += (targets[i] - preds[i]) * (targets[i] - preds[i]);
    energy += targets[i] * targets[i];
  }
  if (energy <= 0.0) Fail(Errc::kZeroEnergy, "targets have zero energy");
  return res / energy;
}

namespace {

// Per-type sequence of block sets indexed by layer - 1.
using Sequence = std::vector<std::optional<BlockSet>>;

bool Chained(const Sequence& s, int l) {
  return l >= 1 && s[l] && s[l - 1] && s[l]->count == s[l - 1]->count &&
         s[l]->dim == s[l - 1]->dim;
}

std::unique_ptr<Predictor> TrainOn(const std::vector<Sequence>& seqs,
                                   const std::vector<int>& type_dims, int num_layers,
                                   const DiagnoseConfig& cfg, uint64_t seed) {
  PredictorDims pd;
  pd.num_layers = num_layers;
  pd.type_dims = type_dims;
  pd.d_lat = cfg.d_lat;
  pd.d_emb = cfg.d_emb;
  pd.hidden = cfg.hidden;
  auto pred = std::make_unique<Predictor>(pd, seed, true);
  std::vector<TrainPair> pairs;
  for (size_t t = 0; t < seqs.size(); ++t) {
    for (int l = 1; l < num_layers; ++l) {
      if (!Chained(seqs[t], l) || seqs[t][l]->dim != type_dims[t]) continue;
      for (int i = 0; i < seqs[t][l]->count; ++i) {
        TrainPair tp;
        tp.prev = seqs[t][l - 1]->block(i);
        tp.target = seqs[t][l]->block(i);
        tp.layer = l + 1;
        tp.type = static_cast<int>(t);
        pairs.push_back(tp);
      }
    }
  }
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  PredictorTrainer trainer(pred.get(), tc, tc.steps);
  trainer.Run(pairs, tc.steps, nullptr);
  return pred;
}

void PredictRow(const Predictor* pred, const BlockSet& prev, int layer, int type, bool model_ok,
                std::vector<double>* out) {
  out->assign(static_cast<size_t>(prev.count) * prev.dim, 0.0);
  for (int i = 0; i < prev.count; ++i) {
    double* o = out->data() + static_cast<size_t>(i) * prev.dim;
    if (pred && model_ok) {
      pred->Predict(prev.block(i), layer, type, o);
    } else {
      for (int k = 0; k < prev.dim; ++k) o[k] = prev.block(i)[k];
    }
  }
}

}  // namespace

PredictabilityReport Diagnose(const Checkpoint& ckpt, const std::vector<BlockTypeSpec>& specs,
                              const DiagnoseConfig& cfg,
                              std::vector<std::vector<Permutation>>* perms) {
  const int num_layers = static_cast<int>(ckpt.layers.size());
  const size_t nt = specs.size();
  std::vector<Sequence> before(nt, Sequence(num_layers)), after(nt, Sequence(num_layers));
  std::vector<int> type_dims(nt, 1);
  if (perms) perms->assign(nt, std::vector<Permutation>(num_layers));

  for (size_t t = 0; t < nt; ++t) {
    bool seen = false;
    for (int l = 0; l < num_layers; ++l) {
      const Layer& layer = ckpt.layers[l];
      if (!LayerHasType(layer, specs[t])) continue;
      BlockSet bs = ExtractBlocks(layer, specs[t]);
      bs.type = static_cast<int>(t);
      if (!seen) {
        type_dims[t] = bs.dim;
        seen = true;
      }
      before[t][l] = bs;
      Permutation pi = IdentityPermutation(bs.count);
      if (Chained(before[t], l)) {
        AlignConfig ac = cfg.align;
        ac.seed = cfg.align.seed + static_cast<uint64_t>(l);
        AlignResult ar = AlignLayerPair(*after[t][l - 1], bs, nullptr, nullptr, ac);
        pi = std::move(ar.perm);
        after[t][l] = std::move(ar.aligned);
      } else {
        after[t][l] = std::move(bs);
      }
      if (perms) (*perms)[t][l] = std::move(pi);
    }
  }

  std::unique_ptr<Predictor> pred_before, pred_after;
  if (cfg.predictor == DiagnosePredictor::kTrained) {
    pred_before = TrainOn(before, type_dims, num_layers, cfg, cfg.seed ^ 0x1111);
    pred_after = TrainOn(after, type_dims, num_layers, cfg, cfg.seed ^ 0x2222);
  }

  PredictabilityReport rep;
  R2Parts pool_b, pool_a;
  std::vector<double> target, pb, pa;
  for (int l = 1; l < num_layers; ++l) {
    for (size_t t = 0; t < nt; ++t) {
      if (!Chained(before[t], l)) continue;
      const BlockSet& cur_b = *before[t][l];
      const BlockSet& cur_a = *after[t][l];
      const bool model_ok = cur_b.dim == type_dims[t];
      PredictabilityRow row;
      row.layer = l + 1;
      row.type = static_cast<int>(t);
      row.cos_before = CosineProfile(*before[t][l - 1], cur_b);
      row.cos_after = CosineProfile(*after[t][l - 1], cur_a);

      PredictRow(pred_before.get(), *before[t][l - 1], l + 1, static_cast<int>(t), model_ok, &pb);
      target.assign(cur_b.data.begin(), cur_b.data.end());
      R2Parts rb = ComputeParts(target, pb, cur_b.dim);
      PredictRow(pred_after.get(), *after[t][l - 1], l + 1, static_cast<int>(t), model_ok, &pa);
      target.assign(cur_a.data.begin(), cur_a.data.end());
      R2Parts ra = ComputeParts(target, pa, cur_a.dim);

      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.r2_before = rb.ss_tot > 0.0 ? 1.0 - rb.ss_res / rb.ss_tot : nan;
      row.r2_after = ra.ss_tot > 0.0 ? 1.0 - ra.ss_res / ra.ss_tot : nan;
      row.nre_before = rb.energy > 0.0 ? rb.ss_res / rb.energy : nan;
      row.nre_after = ra.energy > 0.0 ? ra.ss_res / ra.energy : nan;
      for (R2Parts* p : {&pool_b, &pool_a}) {
        const R2Parts& src = p == &pool_b ? rb : ra;
        p->ss_res += src.ss_res;
        p->ss_tot += src.ss_tot;
        p->energy += src.energy;
      }
      rep.cos_before += row.cos_before.mean;
      rep.cos_after += row.cos_after.mean;
      rep.rows.push_back(row);
    }
  }
  if (rep.rows.empty()) {
    Fail(Errc::kInvalidArgument, "no adjacent layer pairs share a block type and geometry");
  }
  rep.cos_before /= static_cast<double>(rep.rows.size());
  rep.cos_after /= static_cast<double>(rep.rows.size());
  if (pool_b.ss_tot <= 0.0 || pool_a.ss_tot <= 0.0) {
    Fail(Errc::kZeroVariance, "targets have zero variance about the mean block");
  }
  if (pool_b.energy <= 0.0) Fail(Errc::kZeroEnergy, "targets have zero energy");
  rep.r2_before = 1.0 - pool_b.ss_res / pool_b.ss_tot;
  rep.r2_after = 1.0 - pool_a.ss_res / pool_a.ss_tot;
  rep.nre_before = pool_b.ss_res / pool_b.energy;
  rep.nre_after = pool_a.ss_res / pool_a.energy;
  return rep;
}

std::string PredictabilityReport::ToCsv() const {
  std::ostringstream os;
  os.precision(8);
  os << "layer,type,cos_before_mean,cos_before_std,cos_after_mean,cos_after_std,"
        "r2_before,r2_after,nre_before,nre_after\n";
  for (const PredictabilityRow& r : rows) {
    os << r.layer << ',' << r.type << ',' << r.cos_before.mean << ',' << r.cos_before.std << ','
       << r.cos_after.mean << ',' << r.cos_after.std << ',' << r.r2_before << ',' << r.r2_after
       << ',' << r.nre_before << ',' << r.nre_after << '\n';
  }
  return os.str();
}

std::string PredictabilityReport::ToJson() const {
  using nlohmann::json;
  // NaN is not representable in JSON; emit null.
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j;
  j["cos_before"] = num(cos_before);
  j["cos_after"] = num(cos_after);
  j["r2_before"] = num(r2_before);
  j["r2_after"] = num(r2_after);
  j["nre_before"] = num(nre_before);
  j["nre_after"] = num(nre_after);
  if (recovered_fraction >= 0.0) j["recovered_fraction"] = recovered_fraction;
  json arr = json::array();
  for (const PredictabilityRow& r : rows) {
    arr.push_back({{"layer", r.layer},
                   {"type", r.type},
                   {"cos_before_mean", num(r.cos_before.mean)},
                   {"cos_before_std", num(r.cos_before.std)},
                   {"cos_after_mean", num(r.cos_after.mean)},
                   {"cos_after_std", num(r.cos_after.std)},
                   {"r2_before", num(r.r2_before)},
                   {"r2_after", num(r.r2_after)},
                   {"nre_before", num(r.nre_before)},
                   {"nre_after", num(r.nre_after)}});
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

namespace {

double Act(double x, Activation a) { return a == Activation::kRelu ? std::max(0.0, x) : det::Gelu(x); }

void MlpForward(const std::vector<double>& w1, const std::vector<double>& b1,
                const std::vector<double>& w2, const std::vector<double>& b2, int d_in,
                int hidden, int d_out, const double* x, Activation act, double* y) {
  std::vector<double> h(hidden);
  for (int j = 0; j < hidden; ++j) {
    double s = b1[j];
    for (int k = 0; k < d_in; ++k) s += w1[static_cast<size_t>(j) * d_in + k] * x[k];
    h[j] = Act(s, act);
  }
  for (int o = 0; o < d_out; ++o) {
    double s = b2[o];
    for (int j = 0; j < hidden; ++j) s += w2[static_cast<size_t>(o) * hidden + j] * h[j];
    y[o] = s;
  }
}

}  // namespace

double VerifyMlpInvariance(const std::vector<double>& w1, const std::vector<double>& b1,
                           const std::vector<double>& w2, const std::vector<double>& b2,
                           int d_in, int hidden, int d_out, const Permutation& perm,
                           const std::vector<double>& probes, Activation act, bool compensate) {
  if (w1.size() != static_cast<size_t>(hidden) * d_in || b1.size() != static_cast<size_t>(hidden) ||
      w2.size() != static_cast<size_t>(d_out) * hidden || b2.size() != static_cast<size_t>(d_out) ||
      d_in <= 0 || probes.size() % static_cast<size_t>(d_in) != 0) {
    Fail(Errc::kDimensionMismatch, "MLP weight shapes are inconsistent");
  }
  if (perm.size() != static_cast<size_t>(hidden)) {
    Fail(Errc::kLengthMismatch, "permutation length differs from the hidden width");
  }
  ValidatePermutation(perm);
  std::vector<double> pw1(w1.size()), pb1(hidden), pw2(w2);
  for (int i = 0; i < hidden; ++i) {
    std::copy_n(w1.begin() + static_cast<ptrdiff_t>(perm[i]) * d_in, d_in,
                pw1.begin() + static_cast<ptrdiff_t>(i) * d_in);
    pb1[i] = b1[perm[i]];
  }
  if (compensate) {
    for (int o = 0; o < d_out; ++o) {
      for (int i = 0; i < hidden; ++i) {
        pw2[static_cast<size_t>(o) * hidden + i] = w2[static_cast<size_t>(o) * hidden + perm[i]];
      }
    }
  }
  const size_t n = probes.size() / d_in;
  std::vector<double> y0(d_out), y1(d_out);
  double worst = 0.0;
  for (size_t p = 0; p < n; ++p) {
    const double* x = probes.data() + p * d_in;
    MlpForward(w1, b1, w2, b2, d_in, hidden, d_out, x, act, y0.data());
    MlpForward(pw1, pb1, pw2, b2, d_in, hidden, d_out, x, act, y1.data());
    for (int o = 0; o < d_out; ++o) worst = std::max(worst, std::abs(y0[o] - y1[o]));
  }
  return worst;
}

namespace {

// out (n x d) = x (n x d) * w^T, w is d x d row-major.
std::vector<double> Project(const std::vector<double>& x, const std::vector<double>& w, int n,
                            int d) {
  std::vector<double> out(static_cast<size_t>(n) * d, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int o = 0; o < d; ++o) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += x[static_cast<size_t>(t) * d + k] * w[static_cast<size_t>(o) * d + k];
      out[static_cast<size_t>(t) * d + o] = s;
    }
  }
  return out;
}

std::vector<double> Attention(const std::vector<double>& wq, const std::vector<double>& wk,
                              const std::vector<double>& wv, const std::vector<double>& wo,
                              int heads, int dh, const std::vector<double>& x, int n) {
  const int d = heads * dh;
  const std::vector<double> q = Project(x, wq, n, d);
  const std::vector<double> k = Project(x, wk, n, d);
  const std::vector<double> v = Project(x, wv, n, d);
  std::vector<double> concat(static_cast<size_t>(n) * d, 0.0);
  std::vector<double> w(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int c = 0; c < dh; ++c) {
          s += q[static_cast<size_t>(i) * d + h * dh + c] * k[static_cast<size_t>(j) * d + h * dh + c];
        }
        w[j] = s * scale;
        mx = std::max(mx, w[j]);
      }
      double z = 0.0;
      for (int j = 0; j < n; ++j) {
        w[j] = det::Exp(w[j] - mx);
        z += w[j];
      }
      for (int c = 0; c < dh; ++c) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += w[j] * v[static_cast<size_t>(j) * d + h * dh + c];
        concat[static_cast<size_t>(i) * d + h * dh + c] = s / z;
      }
    }
  }
  return Project(concat, wo, n, d);
}

// Reorders the head-grouped rows of a d x d matrix.
std::vector<double> PermuteHeadRows(const std::vector<double>& w, const Permutation& perm, int dh,
                                    int d) {
  std::vector<double> out(w.size());
  for (size_t h = 0; h < perm.size(); ++h) {
    for (int r = 0; r < dh; ++r) {
      std::copy_n(w.begin() + static_cast<ptrdiff_t>(perm[h] * dh + r) * d, d,
                  out.begin() + static_cast<ptrdiff_t>(h * dh + r) * d);
    }
  }
  return out;
}

}  // namespace

double VerifyMhaInvariance(const std::vector<double>& wq, const std::vector<double>& wk,
                           const std::vector<double>& wv, const std::vector<double>& wo,
                           int heads, int d_head, const Permutation& head_perm,
                           const std::vector<double>& tokens, bool compensate) {
  const int d = heads * d_head;
  const size_t dd = static_cast<size_t>(d) * d;
  if (heads <= 0 || d_head <= 0 || wq.size() != dd || wk.size() != dd || wv.size() != dd ||
      wo.size() != dd || tokens.size() % static_cast<size_t>(d) != 0) {
    Fail(Errc::kDimensionMismatch, "attention weight shapes are inconsistent");
  }
  if (head_perm.size() != static_cast<size_t>(heads)) {
    Fail(Errc::kLengthMismatch, "permutation length differs from the head count");
  }
  ValidatePermutation(head_perm);
  const int n = static_cast<int>(tokens.size() / d);
  const std::vector<double> pq = PermuteHeadRows(wq, head_perm, d_head, d);
  std::vector<double> pk = wk, pv = wv, po = wo;
  if (compensate) {
    pk = PermuteHeadRows(wk, head_perm, d_head, d);
    pv = PermuteHeadRows(wv, head_perm, d_head, d);
    for (int o = 0; o < d; ++o) {
      for (int h = 0; h < heads; ++h) {
        for (int c = 0; c < d_head; ++c) {
          po[static_cast<size_t>(o) * d + h * d_head + c] =
              wo[static_cast<size_t>(o) * d + head_perm[h] * d_head + c];
        }
      }
    }
  }
  const std::vector<double> y0 = Attention(wq, wk, wv, wo, heads, d_head, tokens, n);
  const std::vector<double> y1 = Attention(pq, pk, pv, po, heads, d_head, tokens, n);
  double worst = 0.0;
  for (size_t i = 0; i < y0.size(); ++i) worst = std::max(worst, std::abs(y0[i] - y1[i]));
  return worst;
}

DeploymentScenario PythiaBreakEvenPreset() {
  DeploymentScenario s;
  s.baseline_gb = 2.80;
  s.compressed_gb = 0.74;
  s.bandwidth_gbps = 0.10;
  s.decode_s = 2.5;
  s.materialize_s = 2.5;
  s.encode_s = 8280.0;
  return s;
}

double LoadSaving(const DeploymentScenario& s) {
  if (!(s.bandwidth_gbps > 0.0)) Fail(Errc::kInvalidArgument, "bandwidth must be positive");
  return (s.baseline_gb - s.compressed_gb) / s.bandwidth_gbps - s.decode_s + s.materialize_s;
}

uint64_t BreakEven(const DeploymentScenario& s) {
  const double saving = LoadSaving(s);
  if (!(saving > 0.0)) {
    Fail(Errc::kNoBreakEven, "compressed loading is not faster than the baseline");
  }
  return static_cast<uint64_t>(std::ceil(s.encode_s / saving));
}

double BitstreamSizeBytes(double num_params, double bits_per_param) {
  return num_params * bits_per_param / 8.0;
}

std::string MagnitudeHistogramCsv(std::span<const double> values, const std::vector<double>& edges) {
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end())) {
    Fail(Errc::kInvalidArgument, "histogram edges must be non-empty and ascending");
  }
  std::vector<uint64_t> counts(edges.size(), 0);
  uint64_t below = 0;
  for (double v : values) {
    const double a = std::abs(v);
    auto it = std::upper_bound(edges.begin(), edges.end(), a);
    if (it == edges.begin()) {
      ++below;
    } else {
      ++counts[static_cast<size_t>(it - edges.begin()) - 1];
    }
  }
  std::ostringstream os;
  os.precision(8);
  os << "lo,hi,count\n";
  if (below) os << "0," << edges.front() << ',' << below << '\n';
  for (size_t k = 0; k < edges.size(); ++k) {
    os << edges[k] << ',';
    if (k + 1 < edges.size()) {
      os << edges[k + 1];
    } else {
      os << "inf";
    }
    os << ',' << counts[k] << '\n';
  }
  return os.str();
}

}  // namespace mcwc
