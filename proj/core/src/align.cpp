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

#include "mcwc/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcwc/error.hpp"
#include "mcwc/random.hpp"

namespace mcwc {
namespace {

double Cosine(const float* a, const float* b, int d, double na, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (int k = 0; k < d; ++k) dot += static_cast<double>(a[k]) * b[k];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double Norm(const float* a, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += static_cast<double>(a[k]) * a[k];
  return std::sqrt(s);
}

void CheckFiniteSquare(const SimilarityMatrix& s) {
  if (s.s.size() != static_cast<size_t>(s.n) * s.n) Fail(Errc::kNonSquare, "matrix is not n x n");
  for (double v : s.s) {
    if (!std::isfinite(v)) Fail(Errc::kNonFinite, "similarity matrix has non-finite entry");
  }
}

}  // namespace

ActivationSummary PermuteSummary(const ActivationSummary& a, const Permutation& perm) {
  if (static_cast<int>(perm.size()) != a.count) Fail(Errc::kLengthMismatch, "summary permutation");
  ActivationSummary out = a;
  for (int i = 0; i < a.count; ++i) {
    std::copy(a.row(static_cast<int>(perm[i])), a.row(static_cast<int>(perm[i])) + a.dim,
              out.mean.data() + static_cast<size_t>(i) * a.dim);
  }
  return out;
}

SimilarityMatrix WeightSimilarity(const BlockSet& ref, const BlockSet& cand) {
  if (ref.count != cand.count || ref.dim != cand.dim) {
    Fail(Errc::kShapeMismatch, "block sets differ in count or dim");
  }
  const int n = ref.count;
  SimilarityMatrix m;
  m.n = n;
  m.kind = SimilarityKind::kWeight;
  m.s.resize(static_cast<size_t>(n) * n);
  std::vector<double> nr(n), nc(n);
  for (int i = 0; i < n; ++i) {
    nr[i] = Norm(ref.block(i), ref.dim);
    nc[i] = Norm(cand.block(i), cand.dim);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m.at(i, j) = Cosine(ref.block(i), cand.block(j), ref.dim, nr[i], nc[j]);
  }
  return m;
}

SimilarityMatrix ActivationSimilarity(const ActivationSummary& ref,
                                      const ActivationSummary& cand) {
  if (ref.count != cand.count || ref.dim != cand.dim) {
    Fail(Errc::kShapeMismatch, "activation summaries differ in count or dim");
  }
  const int n = ref.count;
  const int d = ref.dim;
  SimilarityMatrix m;
  m.n = n;
  m.kind = SimilarityKind::kActivation;
  m.s.resize(static_cast<size_t>(n) * n);
  auto norm = [d](const double* a) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += a[k] * a[k];
    return std::sqrt(s);
  };
  for (int i = 0; i < n; ++i) {
    const double na = norm(ref.row(i));
    for (int j = 0; j < n; ++j) {
      const double nb = norm(cand.row(j));
      double v = 0.0;
      if (na > 0.0 && nb > 0.0) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += ref.row(i)[k] * cand.row(j)[k];
        v = std::clamp(dot / (na * nb), -1.0, 1.0);
      }
      m.at(i, j) = v;
    }
  }
  return m;
}

SimilarityMatrix HybridSimilarity(const SimilarityMatrix& sw, const SimilarityMatrix& sa,
                                  double alpha) {
  if (sw.n != sa.n || sw.s.size() != sa.s.size()) {
    Fail(Errc::kDimensionMismatch, "hybrid operands differ in size");
  }
  if (alpha < 0.0 || alpha > 1.0) Fail(Errc::kInvalidArgument, "alpha outside [0,1]");
  SimilarityMatrix m;
  m.n = sw.n;
  m.kind = SimilarityKind::kHybrid;
  m.s.resize(sw.s.size());
  if (alpha == 1.0) {
    m.s = sw.s;
  } else if (alpha == 0.0) {
    m.s = sa.s;
  } else {
    for (size_t k = 0; k < m.s.size(); ++k) m.s[k] = alpha * sw.s[k] + (1.0 - alpha) * sa.s[k];
  }
  return m;
}

SimilarityMatrix ResidualEnergyCosts(const BlockSet& cand, const BlockSet& predicted) {
  if (cand.count != predicted.count || cand.dim != predicted.dim) {
    Fail(Errc::kShapeMismatch, "block sets differ in count or dim");
  }
  const int n = cand.count;
  SimilarityMatrix m;
  m.n = n;
  m.kind = SimilarityKind::kNegResidualEnergy;
  m.s.resize(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const float* p = predicted.block(i);
    for (int j = 0; j < n; ++j) {
      const float* c = cand.block(j);
      double e = 0.0;
      for (int k = 0; k < cand.dim; ++k) {
        const double r = static_cast<double>(c[k]) - p[k];
        e += r * r;
      }
      m.at(i, j) = -e;
    }
  }
  return m;
}

double AssignmentScore(const SimilarityMatrix& s, const Permutation& perm) {
  double total = 0.0;
  for (int i = 0; i < s.n; ++i) total += s.at(i, static_cast<int>(perm[i]));
  return total;
}

Permutation SolveExact(const SimilarityMatrix& s) {
  CheckFiniteSquare(s);
  const int n = s.n;
  if (n == 0) return {};
  // Shortest augmenting path Hungarian method on cost = -score, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -s.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  Permutation perm(n);
  for (int j = 1; j <= n; ++j) perm[p[j] - 1] = static_cast<uint32_t>(j - 1);
  return perm;
}

Permutation SolveScreened(const SimilarityMatrix& s, int k_cand, int refine_passes) {
  CheckFiniteSquare(s);
  const int n = s.n;
  if (n == 0) return {};
  const int k = std::clamp(k_cand, 1, n);

  // Per-row candidate lists, best first, ties to the lower column.
  std::vector<int> cand(static_cast<size_t>(n) * k);
  std::vector<int> cols(n);
  for (int i = 0; i < n; ++i) {
    std::iota(cols.begin(), cols.end(), 0);
    auto better = [&](int a, int b) {
      const double sa = s.at(i, a), sb = s.at(i, b);
      return sa > sb || (sa == sb && a < b);
    };
    std::partial_sort(cols.begin(), cols.begin() + k, cols.end(), better);
    std::copy(cols.begin(), cols.begin() + k, cand.begin() + static_cast<size_t>(i) * k);
  }

  struct Pair {
    double score;
    int i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(n) * k);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      const int j = cand[static_cast<size_t>(i) * k + c];
      pairs.push_back({s.at(i, j), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<int> row_to(n, -1), col_to(n, -1);
  for (const Pair& pr : pairs) {
    if (row_to[pr.i] < 0 && col_to[pr.j] < 0) {
      row_to[pr.i] = pr.j;
      col_to[pr.j] = pr.i;
    }
  }
  // Rows whose candidates were all taken get their best free column.
  for (int i = 0; i < n; ++i) {
    if (row_to[i] >= 0) continue;
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (col_to[j] >= 0) continue;
      if (best < 0 || s.at(i, j) > s.at(i, best)) best = j;
    }
    row_to[i] = best;
    col_to[best] = i;
  }

  for (int pass = 0; pass < refine_passes; ++pass) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) {
        const int j = cand[static_cast<size_t>(i) * k + c];
        const int r = col_to[j];
        if (r == i) continue;
        const int ji = row_to[i];
        const double gain = s.at(i, j) + s.at(r, ji) - s.at(i, ji) - s.at(r, j);
        if (gain > 0.0) {
          row_to[i] = j;
          col_to[j] = i;
          row_to[r] = ji;
          col_to[ji] = r;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  Permutation perm(n);
  for (int i = 0; i < n; ++i) perm[i] = static_cast<uint32_t>(row_to[i]);
  return perm;
}

Permutation SolveAssignment(const SimilarityMatrix& s, const AlignConfig& cfg) {
  CheckFiniteSquare(s);
  switch (cfg.policy) {
    case SolverPolicy::kExact:
      return SolveExact(s);
    case SolverPolicy::kScreened:
      return SolveScreened(s, cfg.k_cand, cfg.refine_passes);
    case SolverPolicy::kAdaptive:
      if (s.n <= cfg.exact_threshold) return SolveExact(s);
      return SolveScreened(s, cfg.k_cand, cfg.refine_passes);
    case SolverPolicy::kIdentity:
      return IdentityPermutation(static_cast<size_t>(s.n));
    case SolverPolicy::kRandom: {
      Rng rng(cfg.seed);
      return rng.Permutation(static_cast<size_t>(s.n));
    }
  }
  return IdentityPermutation(static_cast<size_t>(s.n));
}

AlignResult AlignLayerPair(const BlockSet& ref_aligned, const BlockSet& cand,
                           const ActivationSummary* ref_act, const ActivationSummary* cand_act,
                           const AlignConfig& cfg) {
  if (ref_aligned.count != cand.count || ref_aligned.dim != cand.dim) {
    Fail(Errc::kShapeMismatch, "layer pair differs in block count or dim");
  }
  AlignResult res;
  if (cand.count <= 1 || cfg.policy == SolverPolicy::kIdentity) {
    res.perm = IdentityPermutation(static_cast<size_t>(cand.count));
    res.aligned = cand;
    return res;
  }
  SimilarityMatrix s = WeightSimilarity(ref_aligned, cand);
  if (ref_act && cand_act && cfg.alpha < 1.0) {
    s = HybridSimilarity(s, ActivationSimilarity(*ref_act, *cand_act), cfg.alpha);
  }
  res.perm = SolveAssignment(s, cfg);
  res.aligned = ApplyPermutation(cand, res.perm);
  return res;
}

}  // namespace mcwc
