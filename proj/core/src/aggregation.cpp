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

#include "promptlb/aggregation.hpp"

#include <cmath>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

namespace {

std::vector<double> normalized_prompt_weights(const PromptDistribution& q) {
  if (q.prompts.empty()) {
    throw DataError("prompt distribution: no prompts");
  }
  if (q.weights.empty()) {
    return std::vector<double>(q.prompts.size(), 1.0 / q.prompts.size());
  }
  if (q.weights.size() != q.prompts.size()) {
    throw DataError("prompt distribution: weights size mismatch");
  }
  double sum = 0.0;
  for (double w : q.weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw DataError("prompt distribution: weights must be >= 0");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9 + 1e-15) {
    throw DataError("prompt distribution: weights must sum to 1 within 1e-9");
  }
  std::vector<double> weights = q.weights;
  for (double& w : weights) w /= sum;
  return weights;
}

// Provider win probability for pair (a, b); for tie-aware kinds, the
// probability B wins given a decisive outcome.
double decisive_win_prob(const Leaderboard& lb, ModelPair pair) {
  const OutcomeProbs p = outcome_probabilities(lb, pair);
  const double decisive = p.win_a + p.win_b;
  if (decisive <= 0.0) return 0.5;
  return p.win_b / decisive;
}

}  // namespace

PairDistribution PairDistribution::uniform(std::size_t num_models) {
  if (num_models < 2) {
    throw DataError("pair distribution: need at least two models");
  }
  const std::size_t pairs = num_models * (num_models - 1) / 2;
  return PairDistribution(num_models,
                          std::vector<double>(pairs, 1.0 / pairs));
}

PairDistribution::PairDistribution(std::size_t num_models,
                                   std::vector<double> weights)
    : num_models_(num_models) {
  if (num_models < 2) {
    throw DataError("pair distribution: need at least two models");
  }
  const std::size_t pairs = num_models * (num_models - 1) / 2;
  if (weights.size() != pairs) {
    throw DataError("pair distribution: expected one weight per unordered pair");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw DataError("pair distribution: weights must be >= 0");
    }
    sum += w;
  }
  if (sum <= 0.0) throw DataError("pair distribution: all weights zero");

  entries_.reserve(pairs);
  std::size_t k = 0;
  for (std::size_t a = 0; a < num_models; ++a) {
    for (std::size_t b = a + 1; b < num_models; ++b, ++k) {
      entries_.push_back({{a, b}, weights[k] / sum});
    }
  }
}

Leaderboard aggregate(const CoefficientProvider& provider,
                      const PromptDistribution& q,
                      const PairDistribution& pair_dist,
                      const FitConfig& config) {
  const std::size_t m = provider.num_models();
  if (pair_dist.num_models() != m) {
    throw DataError("aggregate: pair distribution dimension mismatch");
  }
  const std::vector<double> weights = normalized_prompt_weights(q);

  // Mean soft label per pair under Q. BCE is linear in the label, so this
  // loses nothing relative to looping over (z, x) pairs.
  std::vector<double> mean_label(pair_dist.entries().size(), 0.0);
  for (std::size_t zi = 0; zi < q.prompts.size(); ++zi) {
    if (weights[zi] == 0.0) continue;
    const Leaderboard lb = provider.evaluate(q.prompts[zi]);
    if (lb.num_models() != m) {
      throw DataError("aggregate: provider emitted wrong dimension");
    }
    for (std::size_t k = 0; k < pair_dist.entries().size(); ++k) {
      const auto& entry = pair_dist.entries()[k];
      if (entry.weight == 0.0) continue;
      mean_label[k] += weights[zi] * decisive_win_prob(lb, entry.pair);
    }
  }

  std::vector<SoftPairObservation> observations;
  observations.reserve(pair_dist.entries().size());
  for (std::size_t k = 0; k < pair_dist.entries().size(); ++k) {
    const auto& entry = pair_dist.entries()[k];
    if (entry.weight == 0.0) continue;
    observations.push_back({entry.pair, mean_label[k], entry.weight});
  }
  return fit_bt_soft_labels(m, observations, config);
}

Leaderboard aggregate(const CoefficientProvider& provider,
                      const PromptDistribution& q, const FitConfig& config) {
  return aggregate(provider, q, PairDistribution::uniform(provider.num_models()),
                   config);
}

Leaderboard average_leaderboard(const CoefficientProvider& provider,
                                const PromptDistribution& q) {
  if (provider.kind() != ModelKind::kBradleyTerry) {
    throw DataError("average_leaderboard: BT providers only");
  }
  const std::vector<double> weights = normalized_prompt_weights(q);
  std::vector<double> mean(provider.num_models(), 0.0);
  for (std::size_t zi = 0; zi < q.prompts.size(); ++zi) {
    if (weights[zi] == 0.0) continue;
    const Leaderboard lb = provider.evaluate(q.prompts[zi]);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] += weights[zi] * lb.coefficients[i];
    }
  }
  return Leaderboard::bt(std::move(mean));
}

double l1_pred_distance(const Leaderboard& lb1, const Leaderboard& lb2,
                        const PairDistribution& pair_dist) {
  if (lb1.num_models() != lb2.num_models() ||
      lb1.num_models() != pair_dist.num_models()) {
    throw DataError("l1_pred_distance: dimension mismatch");
  }
  double total = 0.0;
  for (const auto& entry : pair_dist.entries()) {
    const double s1 =
        lb1.coefficients[entry.pair.b] - lb1.coefficients[entry.pair.a];
    const double s2 =
        lb2.coefficients[entry.pair.b] - lb2.coefficients[entry.pair.a];
    total += entry.weight * std::abs(sigmoid(s1) - sigmoid(s2));
  }
  return total;
}

}  // namespace promptlb
