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

#include "mcwc/entropy.hpp"

#include <cmath>

#include "mcwc/detmath.hpp"
#include "mcwc/error.hpp"
#include "mcwc/random.hpp"

namespace mcwc {

std::vector<double> LogisticPmfTable(double alpha, double beta, int qmax) {
  if (qmax < 1) Fail(Errc::kInvalidArgument, "qmax must be >= 1");
  if (!(beta >= kBetaFloor)) Fail(Errc::kInvalidArgument, "beta below floor");
  const int n = 2 * qmax + 1;
  std::vector<double> p(n);
  // Mass of bin k is F(edge_k) - F(edge_{k-1}); each difference is taken on
  // the side of the distribution where it does not cancel.
  double prev_lo = 0.0;  // F at the lower edge of bin k
  double prev_hi = 1.0;  // 1 - F at the lower edge of bin k
  for (int k = 0; k < n; ++k) {
    double lo, hi;
    if (k == n - 1) {
      lo = 1.0;
      hi = 0.0;
    } else {
      const double z = (k - qmax + 0.5 - alpha) / beta;
      lo = det::Sigmoid(z);
      hi = det::Sigmoid(-z);
    }
    p[k] = (lo < 0.5) ? lo - prev_lo : prev_hi - hi;
    prev_lo = lo;
    prev_hi = hi;
  }
  double total = 0.0;
  for (double& v : p) {
    if (!(v > kPmfFloor)) v = kPmfFloor;
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

double LogisticPmf(int c, double alpha, double beta, int qmax) {
  if (c < -qmax || c > qmax) Fail(Errc::kOutOfSupport, "code " + std::to_string(c));
  return LogisticPmfTable(alpha, beta, qmax)[c + qmax];
}

Cdf LogisticCdf(double alpha, double beta, int qmax) {
  return QuantizePmf(LogisticPmfTable(alpha, beta, qmax));
}

namespace {

void PopulationStats(std::span<const double> v, double* mu, double* sigma) {
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  *mu = m;
  *sigma = std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

SymbolContext BuildContext(int layer, int type, double step, std::span<const double> predicted,
                           bool keyframe) {
  SymbolContext ctx;
  ctx.layer = layer;
  ctx.type = type;
  ctx.step = step;
  ctx.keyframe = keyframe;
  if (keyframe) return ctx;
  if (predicted.empty()) Fail(Errc::kMissingPrediction, "predictive context without prediction");
  PopulationStats(predicted, &ctx.mu, &ctx.sigma);
  return ctx;
}

SymbolContext BuildBaselineContext(int layer, int type, double step,
                                   std::span<const float> values) {
  if (values.empty()) Fail(Errc::kInvalidArgument, "empty block");
  std::vector<double> v(values.begin(), values.end());
  SymbolContext ctx;
  ctx.layer = layer;
  ctx.type = type;
  ctx.step = step;
  PopulationStats(v, &ctx.mu, &ctx.sigma);
  return ctx;
}

EntropyModel::EntropyModel(const EntropyDims& dims, uint64_t seed) : dims_(dims) {
  const int in = in_dim();
  e_layer_ = bank_.Add("e_layer", dims.num_layers, dims.d_emb);
  e_type_ = bank_.Add("e_type", dims.num_types, dims.d_emb);
  w1_ = bank_.Add("w1", dims.hidden, in);
  b1_ = bank_.Add("b1", dims.hidden, 1);
  w2_ = bank_.Add("w2", 2, dims.hidden);
  b2_ = bank_.Add("b2", 2, 1);
  Rng rng(seed);
  for (size_t k = e_layer_; k < w1_; ++k) bank_.values()[k] = 0.1 * rng.Normal();
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (size_t k = w1_; k < b1_; ++k) bank_.values()[k] = scale * rng.Normal();
  // Start at a unit-scale logistic centred on zero.
  *bank_.ptr(b2_ + 1) = 0.539742417236952;  // softplus^-1(1 - floor)
}

void EntropyModel::Features(const SymbolContext& ctx, double* f) const {
  if (ctx.layer < 1 || ctx.layer > dims_.num_layers) {
    Fail(Errc::kLayerIndexOutOfRange, "layer " + std::to_string(ctx.layer));
  }
  if (ctx.type < 0 || ctx.type >= dims_.num_types) {
    Fail(Errc::kUnknownType, "type " + std::to_string(ctx.type));
  }
  const int de = dims_.d_emb;
  const double* el = bank_.ptr(e_layer_) + static_cast<size_t>(ctx.layer - 1) * de;
  const double* et = bank_.ptr(e_type_) + static_cast<size_t>(ctx.type) * de;
  for (int k = 0; k < de; ++k) f[k] = el[k];
  for (int k = 0; k < de; ++k) f[de + k] = et[k];
  const double step = ctx.step > 1e-30 ? ctx.step : 1e-30;
  f[2 * de + 0] = det::Log(step) / 16.0;
  f[2 * de + 1] = det::Asinh(ctx.mu / step) / 4.0;
  f[2 * de + 2] = det::Asinh(ctx.sigma / step) / 4.0;
  f[2 * de + 3] = ctx.keyframe ? 1.0 : 0.0;
}

void EntropyModel::Forward(const SymbolContext& ctx, Cache* cache, double* alpha,
                           double* beta) const {
  const int in = in_dim();
  const int h = dims_.hidden;
  cache->feat.resize(in);
  cache->pre.resize(h);
  cache->act.resize(h);
  Features(ctx, cache->feat.data());
  const double* w1 = bank_.ptr(w1_);
  const double* b1 = bank_.ptr(b1_);
  for (int j = 0; j < h; ++j) {
    double a = b1[j];
    const double* row = w1 + static_cast<size_t>(j) * in;
    for (int k = 0; k < in; ++k) a += row[k] * cache->feat[k];
    cache->pre[j] = a;
    cache->act[j] = det::Gelu(a);
  }
  const double* w2 = bank_.ptr(w2_);
  const double* b2 = bank_.ptr(b2_);
  double o0 = b2[0], o1 = b2[1];
  for (int j = 0; j < h; ++j) {
    o0 += w2[j] * cache->act[j];
    o1 += w2[h + j] * cache->act[j];
  }
  cache->out1 = o1;
  *alpha = o0;
  *beta = kBetaFloor + det::Softplus(o1);
}

void EntropyModel::Predict(const SymbolContext& ctx, double* alpha, double* beta) const {
  Cache cache;
  Forward(ctx, &cache, alpha, beta);
}

void EntropyModel::Backward(const SymbolContext& ctx, const Cache& cache, double d_alpha,
                            double d_beta, std::vector<double>* grad) const {
  const int in = in_dim();
  const int h = dims_.hidden;
  const int de = dims_.d_emb;
  std::vector<double>& g = *grad;
  const double d_o0 = d_alpha;
  const double d_o1 = d_beta * det::Sigmoid(cache.out1);
  g[b2_ + 0] += d_o0;
  g[b2_ + 1] += d_o1;
  const double* w2 = bank_.ptr(w2_);
  const double* w1 = bank_.ptr(w1_);
  std::vector<double> d_feat(in, 0.0);
  for (int j = 0; j < h; ++j) {
    g[w2_ + j] += d_o0 * cache.act[j];
    g[w2_ + h + j] += d_o1 * cache.act[j];
    const double d_act = d_o0 * w2[j] + d_o1 * w2[h + j];
    const double d_pre = d_act * det::GeluGrad(cache.pre[j]);
    if (d_pre == 0.0) continue;
    g[b1_ + j] += d_pre;
    const size_t row = w1_ + static_cast<size_t>(j) * in;
    for (int k = 0; k < in; ++k) {
      g[row + k] += d_pre * cache.feat[k];
      d_feat[k] += d_pre * w1[static_cast<size_t>(j) * in + k];
    }
  }
  const size_t el = e_layer_ + static_cast<size_t>(ctx.layer - 1) * de;
  const size_t et = e_type_ + static_cast<size_t>(ctx.type) * de;
  for (int k = 0; k < de; ++k) {
    g[el + k] += d_feat[k];
    g[et + k] += d_feat[de + k];
  }
}

double CodeNll(int c, double alpha, double beta, int qmax, double* d_alpha, double* d_beta) {
  const double a = (c - 0.5 - alpha) / beta;
  const double b = (c + 0.5 - alpha) / beta;
  const bool lower_open = c <= -qmax;
  const bool upper_open = c >= qmax;
  const double sa = det::Sigmoid(a), sb = det::Sigmoid(b);
  double p;
  if (lower_open && upper_open) {
    p = 1.0;
  } else if (lower_open) {
    p = sb;
  } else if (upper_open) {
    p = det::Sigmoid(-a);
  } else {
    p = det::SigmoidDiff(b, a);
  }
  const double fa = lower_open ? 0.0 : sa * (1.0 - sa);
  const double fb = upper_open ? 0.0 : sb * (1.0 - sb);
  const double pe = p + 1e-12;
  // dp/dalpha = -(f(b) - f(a)) / beta, dp/dbeta = -(f(b) b - f(a) a) / beta.
  const double dp_da = -(fb - fa) / beta;
  const double dp_db = -(fb * (upper_open ? 0.0 : b) - fa * (lower_open ? 0.0 : a)) / beta;
  if (d_alpha) *d_alpha = -dp_da / pe;
  if (d_beta) *d_beta = -dp_db / pe;
  return -std::log(pe);
}

FitReport FitEntropyModel(EntropyModel* model, const std::vector<ContextHistogram>& data,
                          const EntropyFitConfig& cfg) {
  FitReport report;
  double total_symbols = 0.0;
  for (const ContextHistogram& h : data) {
    for (const auto& e : h.counts) total_symbols += e.second;
  }
  if (total_symbols == 0.0) Fail(Errc::kInvalidArgument, "no symbols to fit");
  const double inv_n = 1.0 / total_symbols;
  const double inv_ln2 = 1.0 / std::log(2.0);

  std::vector<double> grad(model->bank().size());
  Adam adam(grad.size(), AdamConfig{});
  EntropyModel::Cache cache;

  auto evaluate = [&](bool with_grad) {
    double loss = 0.0;
    if (with_grad) std::fill(grad.begin(), grad.end(), 0.0);
    for (const ContextHistogram& h : data) {
      double alpha, beta;
      model->Forward(h.ctx, &cache, &alpha, &beta);
      double da_sum = 0.0, db_sum = 0.0;
      for (const auto& [code, count] : h.counts) {
        double da, db;
        loss += count * CodeNll(code, alpha, beta, h.qmax, &da, &db);
        da_sum += count * da;
        db_sum += count * db;
      }
      if (with_grad) model->Backward(h.ctx, cache, da_sum * inv_n, db_sum * inv_n, &grad);
    }
    return loss * inv_n * inv_ln2;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const double bits = evaluate(true);
    if (!std::isfinite(bits)) Fail(Errc::kNonFiniteLoss, "entropy model fit diverged");
    if (step == 0) report.initial_bits_per_symbol = bits;
    report.history.push_back(bits);
    adam.Step(&model->bank().values(), grad, cfg.lr);
  }
  const double final_bits = evaluate(false);
  if (!std::isfinite(final_bits)) Fail(Errc::kNonFiniteLoss, "entropy model fit diverged");
  if (cfg.steps == 0) report.initial_bits_per_symbol = final_bits;
  report.final_bits_per_symbol = final_bits;
  return report;
}

double CodelengthProxy(const EntropyModel& model, const std::vector<ContextHistogram>& data) {
  double bits = 0.0;
  for (const ContextHistogram& h : data) {
    double alpha, beta;
    model.Predict(h.ctx, &alpha, &beta);
    const std::vector<double> pmf = LogisticPmfTable(alpha, beta, h.qmax);
    for (const auto& [code, count] : h.counts) {
      if (code < -h.qmax || code > h.qmax) Fail(Errc::kOutOfSupport, "code outside support");
      bits += count * -std::log2(pmf[code + h.qmax]);
    }
  }
  return bits;
}

double CodelengthProxy(std::span<const int> codes, std::span<const double> alphas,
                       std::span<const double> betas, int qmax) {
  if (codes.size() != alphas.size() || codes.size() != betas.size()) {
    Fail(Errc::kLengthMismatch, "codes and parameters differ in length");
  }
  double bits = 0.0;
  for (size_t k = 0; k < codes.size(); ++k) {
    bits += -std::log2(LogisticPmf(codes[k], alphas[k], betas[k], qmax));
  }
  return bits;
}

}  // namespace mcwc
