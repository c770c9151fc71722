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

#include "mcwc/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "mcwc/detmath.hpp"
#include "mcwc/error.hpp"

namespace mcwc {
namespace {

// Random matrix of shape rows x cols (row-major) whose columns (when
// cols <= rows) or rows (otherwise) are orthonormal.
std::vector<double> RandomOrthonormal(int rows, int cols, Rng* rng) {
  std::vector<double> m(static_cast<size_t>(rows) * cols);
  for (double& v : m) v = rng->Normal();
  const bool by_cols = cols <= rows;
  const int nvec = by_cols ? cols : rows;
  const int len = by_cols ? rows : cols;
  auto at = [&](int vec, int k) -> double& {
    return by_cols ? m[static_cast<size_t>(k) * cols + vec] : m[static_cast<size_t>(vec) * cols + k];
  };
  // Modified Gram-Schmidt, two passes.
  for (int pass = 0; pass < 2; ++pass) {
    for (int a = 0; a < nvec; ++a) {
      for (int b = 0; b < a; ++b) {
        double dot = 0.0;
        for (int k = 0; k < len; ++k) dot += at(a, k) * at(b, k);
        for (int k = 0; k < len; ++k) at(a, k) -= dot * at(b, k);
      }
      double nrm = 0.0;
      for (int k = 0; k < len; ++k) nrm += at(a, k) * at(a, k);
      nrm = std::sqrt(nrm);
      for (int k = 0; k < len; ++k) at(a, k) /= nrm;
    }
  }
  return m;
}

}  // namespace

Predictor::Predictor(const PredictorDims& dims, uint64_t seed, bool copy_init) : dims_(dims) {
  if (dims_.hidden <= 0) dims_.hidden = 4 * dims_.d_lat;
  if (dims_.d_lat < 1 || dims_.d_emb < 1 || dims_.num_layers < 1 || dims_.type_dims.empty()) {
    Fail(Errc::kInvalidArgument, "predictor dimensions");
  }
  const int dl = dims_.d_lat;
  const int de = dims_.d_emb;
  const int h = dims_.hidden;
  const int nt = static_cast<int>(dims_.type_dims.size());
  for (int t = 0; t < nt; ++t) {
    const int dt = dims_.type_dims[t];
    const std::string tag = std::to_string(t);
    TypeOffsets o;
    o.p = bank_.Add("P" + tag, dl, dt);
    o.pb = bank_.Add("p" + tag, dl, 1);
    o.o = bank_.Add("O" + tag, dt, dl);
    o.ob = bank_.Add("o" + tag, dt, 1);
    types_.push_back(o);
  }
  a_l_ = bank_.Add("A_layer", dl, de);
  a_t_ = bank_.Add("A_type", dl, de);
  e_l_ = bank_.Add("E_layer", dims_.num_layers, de);
  e_t_ = bank_.Add("E_type", nt, de);
  w1_ = bank_.Add("W1", h, dl);
  b1_ = bank_.Add("b1", h, 1);
  w2_ = bank_.Add("W2", dl, h);
  b2_ = bank_.Add("b2", dl, 1);

  Rng rng(seed);
  std::vector<double>& v = bank_.values();
  for (int t = 0; t < nt; ++t) {
    const int dt = dims_.type_dims[t];
    if (copy_init) {
      const std::vector<double> q = RandomOrthonormal(dl, dt, &rng);
      std::copy(q.begin(), q.end(), v.begin() + static_cast<std::ptrdiff_t>(types_[t].p));
      for (int k = 0; k < dt; ++k) {
        for (int i = 0; i < dl; ++i) {
          v[types_[t].o + static_cast<size_t>(k) * dl + i] = q[static_cast<size_t>(i) * dt + k];
        }
      }
    } else {
      const double sp = 1.0 / std::sqrt(static_cast<double>(dt));
      const double so = 1.0 / std::sqrt(static_cast<double>(dl));
      for (size_t k = 0; k < static_cast<size_t>(dl) * dt; ++k) v[types_[t].p + k] = sp * rng.Normal();
      for (size_t k = 0; k < static_cast<size_t>(dl) * dt; ++k) v[types_[t].o + k] = so * rng.Normal();
    }
  }
  for (size_t k = e_l_; k < w1_; ++k) v[k] = 0.02 * rng.Normal();
  const double sw = 1.0 / std::sqrt(static_cast<double>(dl));
  for (size_t k = w1_; k < b1_; ++k) v[k] = sw * rng.Normal();
  if (!copy_init) {
    const double sa = 1.0 / std::sqrt(static_cast<double>(de));
    for (size_t k = a_l_; k < e_l_; ++k) v[k] = sa * rng.Normal();
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (size_t k = w2_; k < b2_; ++k) v[k] = s2 * rng.Normal();
  }
}

void Predictor::CheckArgs(int layer, int type) const {
  if (type < 0 || type >= static_cast<int>(types_.size())) {
    Fail(Errc::kUnknownType, "predictor type " + std::to_string(type));
  }
  if (layer < 2 || layer > dims_.num_layers) {
    Fail(Errc::kLayerIndexOutOfRange, "predicted layer " + std::to_string(layer));
  }
}

void Predictor::Forward(const float* prev, int layer, int type, Cache* c, double* out) const {
  CheckArgs(layer, type);
  const int dl = dims_.d_lat;
  const int de = dims_.d_emb;
  const int h = dims_.hidden;
  const int dt = dims_.type_dims[type];
  const TypeOffsets& o = types_[type];
  c->u.assign(prev, prev + dt);
  c->z.resize(dl);
  c->pre.resize(h);
  c->act.resize(h);
  c->h.resize(dl);

  const double* P = bank_.ptr(o.p);
  const double* pb = bank_.ptr(o.pb);
  const double* Al = bank_.ptr(a_l_);
  const double* At = bank_.ptr(a_t_);
  const double* El = bank_.ptr(e_l_) + static_cast<size_t>(layer - 1) * de;
  const double* Et = bank_.ptr(e_t_) + static_cast<size_t>(type) * de;
  for (int i = 0; i < dl; ++i) {
    double z = pb[i];
    const double* row = P + static_cast<size_t>(i) * dt;
    for (int k = 0; k < dt; ++k) z += row[k] * c->u[k];
    const double* al = Al + static_cast<size_t>(i) * de;
    const double* at = At + static_cast<size_t>(i) * de;
    for (int e = 0; e < de; ++e) z += al[e] * El[e];
    for (int e = 0; e < de; ++e) z += at[e] * Et[e];
    c->z[i] = z;
  }
  const double* W1 = bank_.ptr(w1_);
  const double* b1 = bank_.ptr(b1_);
  for (int j = 0; j < h; ++j) {
    double a = b1[j];
    const double* row = W1 + static_cast<size_t>(j) * dl;
    for (int i = 0; i < dl; ++i) a += row[i] * c->z[i];
    c->pre[j] = a;
    c->act[j] = det::Gelu(a);
  }
  const double* W2 = bank_.ptr(w2_);
  const double* b2 = bank_.ptr(b2_);
  for (int i = 0; i < dl; ++i) {
    double v = c->z[i] + b2[i];
    const double* row = W2 + static_cast<size_t>(i) * h;
    for (int j = 0; j < h; ++j) v += row[j] * c->act[j];
    c->h[i] = v;
  }
  const double* O = bank_.ptr(o.o);
  const double* ob = bank_.ptr(o.ob);
  for (int k = 0; k < dt; ++k) {
    double y = ob[k];
    const double* row = O + static_cast<size_t>(k) * dl;
    for (int i = 0; i < dl; ++i) y += row[i] * c->h[i];
    out[k] = y;
  }
}

void Predictor::Predict(const float* prev, int layer, int type, double* out) const {
  Cache c;
  Forward(prev, layer, type, &c, out);
}

void Predictor::Backward(int layer, int type, const Cache& c, const double* dy,
                         std::vector<double>* grad) const {
  const int dl = dims_.d_lat;
  const int de = dims_.d_emb;
  const int h = dims_.hidden;
  const int dt = dims_.type_dims[type];
  const TypeOffsets& o = types_[type];
  std::vector<double>& g = *grad;

  std::vector<double> dh(dl, 0.0);
  const double* O = bank_.ptr(o.o);
  for (int k = 0; k < dt; ++k) {
    g[o.ob + k] += dy[k];
    const size_t row = o.o + static_cast<size_t>(k) * dl;
    for (int i = 0; i < dl; ++i) {
      g[row + i] += dy[k] * c.h[i];
      dh[i] += O[static_cast<size_t>(k) * dl + i] * dy[k];
    }
  }
  std::vector<double> dz(dh);
  std::vector<double> dact(h, 0.0);
  const double* W2 = bank_.ptr(w2_);
  for (int i = 0; i < dl; ++i) {
    g[b2_ + i] += dh[i];
    const size_t row = w2_ + static_cast<size_t>(i) * h;
    for (int j = 0; j < h; ++j) {
      g[row + j] += dh[i] * c.act[j];
      dact[j] += W2[static_cast<size_t>(i) * h + j] * dh[i];
    }
  }
  const double* W1 = bank_.ptr(w1_);
  for (int j = 0; j < h; ++j) {
    const double dpre = dact[j] * det::GeluGrad(c.pre[j]);
    if (dpre == 0.0) continue;
    g[b1_ + j] += dpre;
    const size_t row = w1_ + static_cast<size_t>(j) * dl;
    for (int i = 0; i < dl; ++i) {
      g[row + i] += dpre * c.z[i];
      dz[i] += W1[static_cast<size_t>(j) * dl + i] * dpre;
    }
  }
  const double* Al = bank_.ptr(a_l_);
  const double* At = bank_.ptr(a_t_);
  const size_t el = e_l_ + static_cast<size_t>(layer - 1) * de;
  const size_t et = e_t_ + static_cast<size_t>(type) * de;
  const double* El = bank_.ptr(el);
  const double* Et = bank_.ptr(et);
  for (int i = 0; i < dl; ++i) {
    const double d = dz[i];
    g[o.pb + i] += d;
    const size_t prow = o.p + static_cast<size_t>(i) * dt;
    for (int k = 0; k < dt; ++k) g[prow + k] += d * c.u[k];
    const size_t arow_l = a_l_ + static_cast<size_t>(i) * de;
    const size_t arow_t = a_t_ + static_cast<size_t>(i) * de;
    for (int e = 0; e < de; ++e) {
      g[arow_l + e] += d * El[e];
      g[arow_t + e] += d * Et[e];
      g[el + e] += Al[static_cast<size_t>(i) * de + e] * d;
      g[et + e] += At[static_cast<size_t>(i) * de + e] * d;
    }
  }
}

double ResidualLoss(const Predictor& pred, const std::vector<TrainPair>& pairs,
                    std::vector<double>* grad) {
  if (grad) grad->assign(pred.bank().size(), 0.0);
  double n = 0.0;
  for (const TrainPair& p : pairs) n += pred.dims().type_dims.at(p.type);
  if (n == 0.0) return 0.0;
  const double inv_n = 1.0 / n;
  Predictor::Cache cache;
  std::vector<double> y, dy;
  double loss = 0.0;
  for (const TrainPair& p : pairs) {
    const int dt = pred.dims().type_dims[p.type];
    y.resize(dt);
    dy.resize(dt);
    pred.Forward(p.prev, p.layer, p.type, &cache, y.data());
    for (int k = 0; k < dt; ++k) {
      const double r = y[k] - p.target[k];
      loss += r * r;
      dy[k] = 2.0 * r * inv_n;
    }
    if (grad) pred.Backward(p.layer, p.type, cache, dy.data(), grad);
  }
  return loss * inv_n;
}

PredictorTrainer::PredictorTrainer(Predictor* pred, const TrainConfig& cfg, int total_steps)
    : pred_(pred),
      cfg_(cfg),
      total_(total_steps),
      adam_(pred->bank().size(), AdamConfig{0.9, 0.999, 1e-8, cfg.weight_decay}),
      rng_(cfg.seed ^ 0x9E3779B97F4A7C15ull) {}

void PredictorTrainer::Run(const std::vector<TrainPair>& pairs, int n, TrainReport* report) {
  if (pairs.empty() || n <= 0) return;
  std::vector<double> grad;
  std::vector<TrainPair> batch;
  const int bs = std::max(1, std::min<int>(cfg_.batch, static_cast<int>(pairs.size())));
  for (int it = 0; it < n; ++it, ++step_) {
    batch.clear();
    for (int b = 0; b < bs; ++b) batch.push_back(pairs[rng_.Below(pairs.size())]);
    const double loss = ResidualLoss(*pred_, batch, &grad);
    if (!std::isfinite(loss)) {
      Fail(Errc::kNonFiniteLoss, "predictor loss diverged at step " + std::to_string(step_));
    }
    ClipGradNorm(&grad, cfg_.clip_norm);
    const double lr = WarmupCosineLr(cfg_.lr, step_, cfg_.warmup, total_);
    adam_.Step(&pred_->bank().values(), grad, lr);
    if (report) report->loss.push_back(loss);
  }
}

RateTrainResult TrainRateDistortion(Predictor* pred, EntropyModel* psi,
                                    const std::vector<TrainPair>& pairs,
                                    const RateTrainSetup& setup, const TrainConfig& cfg) {
  RateTrainResult res;
  res.log_step_scale.assign(setup.num_types, 0.0);
  if (pairs.empty() || cfg.joint_steps <= 0 || setup.lambda <= 0.0) return res;

  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ull);
  Adam adam_theta(pred->bank().size(), AdamConfig{0.9, 0.999, 1e-8, cfg.weight_decay});
  Adam adam_psi(psi->bank().size(), AdamConfig{});
  Adam adam_kappa(res.log_step_scale.size(), AdamConfig{});
  std::vector<double> g_theta, g_psi(psi->bank().size()), g_kappa(setup.num_types);
  const double inv_ln2 = 1.0 / std::log(2.0);
  const int bs = std::max(1, std::min<int>(cfg.batch, static_cast<int>(pairs.size())));

  Predictor::Cache pc;
  EntropyModel::Cache ec;
  std::vector<double> y, dy, r, noise;
  for (int step = 0; step < cfg.joint_steps; ++step) {
    g_theta.assign(pred->bank().size(), 0.0);
    std::fill(g_psi.begin(), g_psi.end(), 0.0);
    std::fill(g_kappa.begin(), g_kappa.end(), 0.0);
    std::vector<const TrainPair*> batch;
    double n_elem = 0.0;
    for (int b = 0; b < bs; ++b) {
      batch.push_back(&pairs[rng.Below(pairs.size())]);
      n_elem += pred->dims().type_dims[batch.back()->type];
    }
    const double inv_n = 1.0 / n_elem;
    double loss = 0.0;
    for (const TrainPair* p : batch) {
      const int dt = pred->dims().type_dims[p->type];
      y.resize(dt);
      dy.assign(dt, 0.0);
      r.resize(dt);
      noise.resize(dt);
      pred->Forward(p->prev, p->layer, p->type, &pc, y.data());
      for (int k = 0; k < dt; ++k) {
        r[k] = p->target[k] - y[k];
        noise[k] = rng.Uniform() - 0.5;
      }
      const int ng = p->local_group ? p->local_groups : 1;
      auto group = [&](int k) { return p->local_group ? static_cast<int>((*p->local_group)[k]) : 0; };
      std::vector<double> cnt(ng, 0.0), rs(ng, 0.0), rss(ng, 0.0), ys(ng, 0.0), yss(ng, 0.0);
      for (int k = 0; k < dt; ++k) {
        const int gi = group(k);
        cnt[gi] += 1.0;
        rs[gi] += r[k];
        ys[gi] += y[k];
      }
      for (int k = 0; k < dt; ++k) {
        const int gi = group(k);
        const double dr = r[k] - rs[gi] / cnt[gi];
        const double dyv = y[k] - ys[gi] / cnt[gi];
        rss[gi] += dr * dr;
        yss[gi] += dyv * dyv;
      }
      const double kappa = res.log_step_scale[p->type];
      for (int gi = 0; gi < ng; ++gi) {
        if (cnt[gi] == 0.0) continue;
        double s0 = setup.fixed_step ? setup.fixed_step_value
                                     : setup.gamma * std::sqrt(rss[gi] / cnt[gi]);
        if (s0 < kStepFloor) s0 = kStepFloor;
        const double s = s0 * std::exp(kappa);
        SymbolContext ctx;
        ctx.layer = p->layer;
        ctx.type = p->type;
        ctx.step = s;
        ctx.mu = ys[gi] / cnt[gi];
        ctx.sigma = std::sqrt(yss[gi] / cnt[gi]);
        ctx.keyframe = false;
        double alpha, beta;
        psi->Forward(ctx, &ec, &alpha, &beta);
        double d_alpha = 0.0, d_beta = 0.0, d_s = 0.0;
        for (int k = 0; k < dt; ++k) {
          if (group(k) != gi) continue;
          const double u = noise[k];
          double yt = r[k] / s + u;
          const bool clamped = yt > setup.qmax || yt < -setup.qmax;
          yt = std::clamp(yt, -static_cast<double>(setup.qmax), static_cast<double>(setup.qmax));
          const double a = (yt - 0.5 - alpha) / beta;
          const double b = (yt + 0.5 - alpha) / beta;
          const double sa = det::Sigmoid(a), sb = det::Sigmoid(b);
          const double pr = det::SigmoidDiff(b, a) + 1e-12;
          const double fa = sa * (1.0 - sa), fb = sb * (1.0 - sb);
          const double nll = -std::log(pr);
          const double dnll_dyt = -((fb - fa) / beta) / pr;
          const double dnll_db = ((fb * b - fa * a) / beta) / pr;
          const double dist = (s * u) * (s * u);
          loss += (dist + setup.lambda * nll * inv_ln2) * inv_n;
          const double w = setup.lambda * inv_ln2 * inv_n;
          d_alpha += -w * dnll_dyt;
          d_beta += w * dnll_db;
          if (!clamped) {
            dy[k] += -w * dnll_dyt / s;  // d yt / d y = -1/s
            d_s += w * dnll_dyt * (-r[k] / (s * s));
          }
          d_s += inv_n * 2.0 * s * u * u;
        }
        psi->Backward(ctx, ec, d_alpha, d_beta, &g_psi);
        if (!setup.fixed_step) g_kappa[p->type] += d_s * s;
      }
      pred->Backward(p->layer, p->type, pc, dy.data(), &g_theta);
    }
    if (!std::isfinite(loss)) {
      Fail(Errc::kNonFiniteLoss, "rate-distortion loss diverged at step " + std::to_string(step));
    }
    res.report.loss.push_back(loss);
    ClipGradNorm(&g_theta, cfg.clip_norm);
    ClipGradNorm(&g_psi, cfg.clip_norm);
    const double lr = WarmupCosineLr(cfg.lr, step, 0, cfg.joint_steps);
    adam_theta.Step(&pred->bank().values(), g_theta, lr);
    adam_psi.Step(&psi->bank().values(), g_psi, lr);
    if (!setup.fixed_step) adam_kappa.Step(&res.log_step_scale, g_kappa, lr);
  }
  return res;
}

double GradientCheck(const Predictor& pred, const std::vector<TrainPair>& probe, double eps,
                     int coords, uint64_t seed, double fault_scale) {
  if (eps < 1e-6 || eps > 1e-3) Fail(Errc::kInvalidArgument, "eps outside [1e-6, 1e-3]");
  std::vector<double> grad;
  ResidualLoss(pred, probe, &grad);
  for (double& g : grad) g *= fault_scale;
  Predictor work = pred;
  Rng rng(seed);
  double worst = 0.0;
  for (int c = 0; c < coords; ++c) {
    const size_t k = static_cast<size_t>(rng.Below(grad.size()));
    double& v = work.bank().values()[k];
    const double orig = v;
    v = orig + eps;
    const double lp = ResidualLoss(work, probe, nullptr);
    v = orig - eps;
    const double lm = ResidualLoss(work, probe, nullptr);
    v = orig;
    const double num = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::fabs(grad[k]), std::fabs(num), 1e-7});
    worst = std::max(worst, std::fabs(grad[k] - num) / denom);
  }
  return worst;
}

}  // namespace mcwc
