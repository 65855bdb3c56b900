// Copyright 2026 The promptlb Authors.
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
//
// Collapsing per-prompt leaderboards into one leaderboard for a prompt
// distribution Q. The primary method refits a BT leaderboard against the
// prompt-averaged soft win probabilities (no sampling needed: the binary
// cross-entropy is linear in the label, so averaging labels is exact).
// A coefficient-averaging alternate is provided for comparison; note that
// raising a model's averaged coordinate does not imply it wins more often,
// which is why the soft-label refit is the default.

#ifndef PROMPTLB_AGGREGATION_HPP_
#define PROMPTLB_AGGREGATION_HPP_

#include <cstddef>
#include <vector>

#include "promptlb/estimation.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"

namespace promptlb {

// Discrete distribution over prompts. Empty weights mean uniform; otherwise
// weights must be nonnegative and sum to 1 within 1e-9 (renormalized exactly
// at use).
struct PromptDistribution {
  std::vector<Prompt> prompts;
  std::vector<double> weights;

  static PromptDistribution uniform(std::vector<Prompt> prompts) {
    return {std::move(prompts), {}};
  }
};

// Distribution over unordered model pairs, defaulting to uniform over all
// M(M-1)/2 of them.
class PairDistribution {
 public:
  struct Entry {
    ModelPair pair;
    double weight = 0.0;
  };

  static PairDistribution uniform(std::size_t num_models);

  // `weights` in canonical (a<b) lexicographic order; nonnegative with a
  // positive sum (normalized on construction).
  PairDistribution(std::size_t num_models, std::vector<double> weights);

  std::size_t num_models() const { return num_models_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::size_t num_models_;
  std::vector<Entry> entries_;
};

// Soft-label BT refit of the provider over Q: the constant leaderboard
// minimizing E_{Z~Q, X~P_X} BCE(sigmoid(x^T theta), p(x, Z)), where p is the
// provider's win probability (for RK / grounded RK providers, the win
// probability conditioned on a decisive outcome, p_B / (p_A + p_B)).
// Anchored per config. Equivalent to fitting votes simulated from the
// provider, without the sampling.
Leaderboard aggregate(const CoefficientProvider& provider,
                      const PromptDistribution& q,
                      const PairDistribution& pair_dist,
                      const FitConfig& config = {});

// Convenience: uniform pair distribution.
Leaderboard aggregate(const CoefficientProvider& provider,
                      const PromptDistribution& q,
                      const FitConfig& config = {});

// Weighted average of the per-prompt coefficients: the expected-log-odds
// predictor. BT providers only.
Leaderboard average_leaderboard(const CoefficientProvider& provider,
                                const PromptDistribution& q);

// Mean absolute difference of predicted win probabilities over pairs:
// sum_x P_X(x) * |sigmoid(x^T theta_1) - sigmoid(x^T theta_2)|.
// A pseudometric; zero on shift-equivalent leaderboards.
double l1_pred_distance(const Leaderboard& lb1, const Leaderboard& lb2,
                        const PairDistribution& pair_dist);

}  // namespace promptlb

#endif  // PROMPTLB_AGGREGATION_HPP_
