#pragma once

#include <utility>
#include <vector>

#include "stcrf/tensor.hpp"

namespace stcrf {

// Linear-chain CRF primitives shared by the time and space heads.
// Emissions are [B, L, K] (B independent chains), transitions [K, K] where
// (j, k) scores moving from label j at step s to label k at step s + 1.
// There are no start/end scores; the first step contributes emissions only.

using LabelChain = std::vector<std::vector<int>>;  // [B][L]

void check_crf_shapes(const Tensor& emissions, const Tensor& transitions);

// Per-chain score of the given label path: emissions along the path plus
// transitions along consecutive pairs.
std::vector<double> gold_score(const Tensor& emissions, const Tensor& transitions,
                               const LabelChain& labels);

// Per-chain log of the sum of exp(path score) over all K^L paths, via the
// forward recursion in log space.
std::vector<double> log_partition(const Tensor& emissions, const Tensor& transitions);

// Per-chain negative log likelihood: log_partition - gold_score.
std::vector<double> nll(const Tensor& emissions, const Tensor& transitions,
                        const LabelChain& labels);

// Mean NLL over chains, with analytic gradients (marginals minus gold
// indicators, scaled by 1/B) accumulated into d_emissions / d_transitions
// when non-null.
double nll_mean_with_grad(const Tensor& emissions, const Tensor& transitions,
                          const LabelChain& labels, Tensor* d_emissions,
                          Tensor* d_transitions, double weight = 1.0);

// Max-score path per chain; ties break toward the smaller label index.
LabelChain viterbi(const Tensor& emissions, const Tensor& transitions);

struct OracleResult {
  std::vector<double> log_partition;
  LabelChain best_path;
};

// Exact results by explicit enumeration of all K^L paths. Guards L <= 8.
OracleResult enumerate_oracle(const Tensor& emissions, const Tensor& transitions);

}  // namespace stcrf
