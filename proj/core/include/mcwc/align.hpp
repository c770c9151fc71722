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

#ifndef MCWC_ALIGN_HPP_
#define MCWC_ALIGN_HPP_

#include <cstdint>
#include <vector>

#include "mcwc/blocks.hpp"

namespace mcwc {

enum class SimilarityKind : uint8_t { kWeight, kActivation, kHybrid, kNegResidualEnergy };

// Row i indexes the reference (previous aligned) block, column j the
// candidate block.
struct SimilarityMatrix {
  int n = 0;
  SimilarityKind kind = SimilarityKind::kWeight;
  std::vector<double> s;

  double at(int i, int j) const { return s[static_cast<size_t>(i) * n + j]; }
  double& at(int i, int j) { return s[static_cast<size_t>(i) * n + j]; }
};

// Per-block mean activation vectors.
struct ActivationSummary {
  int count = 0;
  int dim = 0;
  std::vector<double> mean;

  const double* row(int i) const { return mean.data() + static_cast<size_t>(i) * dim; }
};

ActivationSummary PermuteSummary(const ActivationSummary& a, const Permutation& perm);

enum class SolverPolicy : uint8_t { kAdaptive, kExact, kScreened, kIdentity, kRandom };

struct AlignConfig {
  double alpha = 0.7;
  SolverPolicy policy = SolverPolicy::kAdaptive;
  int k_cand = 16;
  int refine_passes = 1;
  int exact_threshold = 256;
  uint64_t seed = 0;
};

SimilarityMatrix WeightSimilarity(const BlockSet& ref, const BlockSet& cand);
SimilarityMatrix ActivationSimilarity(const ActivationSummary& ref,
                                      const ActivationSummary& cand);
SimilarityMatrix HybridSimilarity(const SimilarityMatrix& sw, const SimilarityMatrix& sa,
                                  double alpha);
// Entry (i, j) = -||cand_j - predicted_i||^2.
SimilarityMatrix ResidualEnergyCosts(const BlockSet& cand, const BlockSet& predicted);

double AssignmentScore(const SimilarityMatrix& s, const Permutation& perm);

// Maximum-weight perfect matching by the Hungarian method, O(n^3).
Permutation SolveExact(const SimilarityMatrix& s);
// Top-K screening, global greedy, then pairwise swap refinement.
Permutation SolveScreened(const SimilarityMatrix& s, int k_cand, int refine_passes);

Permutation SolveAssignment(const SimilarityMatrix& s, const AlignConfig& cfg);

struct AlignResult {
  Permutation perm;
  BlockSet aligned;
};

// Chained alignment: `cand` is matched against the already aligned previous
// layer. Activation summaries are optional; without them alpha is 1.
AlignResult AlignLayerPair(const BlockSet& ref_aligned, const BlockSet& cand,
                           const ActivationSummary* ref_act, const ActivationSummary* cand_act,
                           const AlignConfig& cfg);

}  // namespace mcwc

#endif  // MCWC_ALIGN_HPP_
