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
// Synthetic ground-truth worlds: a category-structured provider with known
// coefficients, a prompt pool whose texts embed their category token, and
// seeded vote generation. Everything downstream of a seed is reproducible
// bit for bit. Worlds are category-structured (rather than arbitrary
// functions of the prompt) so that exact expectations stay computable while
// trained featurized providers can still learn them from text.

#ifndef PROMPTLB_SIMULATION_HPP_
#define PROMPTLB_SIMULATION_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "promptlb/catalog.hpp"
#include "promptlb/estimation.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"
#include "promptlb/rng.hpp"
#include "promptlb/routing.hpp"

namespace promptlb {

struct SyntheticWorld {
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::kBradleyTerry;
  ModelCatalog catalog;
  ProviderPtr provider_true;  // exact per-category ground truth
  std::map<std::string, Leaderboard> category_truth;
  std::vector<Prompt> prompt_pool;
};

// Builds a world with `n_categories` per-category leaderboards of the form
// base + effect_scale * per-category offset (all draws seeded), prompt texts
// embedding their category token, and per-model costs mildly correlated with
// mean strength. effect_scale 0 makes every category share one leaderboard.
SyntheticWorld make_world(std::uint64_t seed, std::size_t num_models,
                          std::size_t n_categories,
                          std::size_t prompts_per_category,
                          double effect_scale,
                          ModelKind kind = ModelKind::kBradleyTerry);

// Draws one outcome from the exact model probabilities of the world's
// provider at this prompt. `kind` must match the world's kind.
Outcome sample_vote(const SyntheticWorld& world, const Prompt& prompt,
                    ModelPair pair, ModelKind kind, Rng& rng);

// A router under test: maps a prompt to a policy over the world's models.
struct Router {
  std::string name;
  std::function<RoutingPolicy(const Prompt&)> policy;
};

// LP-optimal router backed by a coefficient provider.
Router provider_router(ProviderPtr provider, const ModelCatalog& catalog,
                       double budget = kUnlimitedBudget);

// Always picks one model.
Router static_router(const ModelCatalog& catalog, std::size_t model_index);

struct DeploymentResult {
  std::vector<PreferenceRecord> records;  // router (model_b) vs opponent
  std::size_t n_votes = 0;
  double empirical_win_rate = 0.0;
  // One-parameter BT fit of the router against the frozen per-prompt true
  // opponent coefficients, with its observed-information standard error.
  double fitted_coefficient = 0.0;
  double fitted_se = 0.0;
  // Pre-deployment prediction: root of mean_z G_z(t) = mean_z pi(z)^T W(z) q.
  // Coincides with the single-leaderboard prediction when the world is flat.
  double predicted_coefficient = 0.0;
  double predicted_win_rate = 0.0;
  double mean_expected_cost = 0.0;   // mean over votes of pi(z)^T c
  double realized_mean_cost = 0.0;   // mean cost of the sampled choices
};

DeploymentResult deploy_router(const SyntheticWorld& world, const Router& router,
                               const std::vector<double>& q,
                               std::size_t n_votes, std::uint64_t seed);

struct ParetoRow {
  double budget = 0.0;
  bool feasible = false;
  double exact_win_rate = 0.0;  // E_z pi(z)^T W(z) q over the prompt pool
  double mc_win_rate = 0.0;
  double fitted_coefficient = 0.0;
  double fitted_se = 0.0;
  double predicted_coefficient = 0.0;
  double mean_expected_cost = 0.0;
  double realized_mean_cost = 0.0;
  std::vector<std::uint8_t> win_flags;  // per-vote outcomes, CRN across rows
};

// Sweeps ascending budgets with common random numbers (the same prompts,
// opponents, and uniforms drive every row), so win-rate comparisons across
// budgets are paired. Budgets below the cheapest model are flagged
// infeasible and skipped.
std::vector<ParetoRow> pareto_sweep(const SyntheticWorld& world,
                                    const std::vector<double>& budgets,
                                    const std::vector<double>& q,
                                    std::size_t n_votes_per_budget,
                                    std::uint64_t seed,
                                    ProviderPtr router_provider = nullptr);

// Exact expected win rate of each single model against opponents drawn from
// q, averaged over the prompt pool.
std::vector<double> exact_model_win_rates(const SyntheticWorld& world,
                                          const std::vector<double>& q);

// Exact expected win rate of the LP-optimal router at this budget.
double exact_router_win_rate(const SyntheticWorld& world, double budget,
                             const std::vector<double>& q,
                             ProviderPtr router_provider = nullptr);

}  // namespace promptlb

#endif  // PROMPTLB_SIMULATION_HPP_
