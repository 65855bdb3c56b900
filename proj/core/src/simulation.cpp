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

#include "promptlb/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

namespace {

std::string category_label(std::size_t c) { return "cat" + std::to_string(c); }

// One-parameter BT fit of a router against frozen opponent coefficients:
// solves sum_i sigmoid(t - theta_i) = wins for t, which is the stationarity
// condition of the log-likelihood. SE from the observed information.
struct OneParamFit {
  double coefficient = 0.0;
  double se = 0.0;
};

OneParamFit fit_router_coefficient(const std::vector<double>& opponent_theta,
                                   const std::vector<std::uint8_t>& wins) {
  double win_total = 0.0;
  for (std::uint8_t w : wins) win_total += w;
  const double n = static_cast<double>(wins.size());
  // Clamp away the degenerate all-win / all-loss boundary (infinite MLE).
  win_total = std::clamp(win_total, 0.5, n - 0.5);

  const auto [min_it, max_it] =
      std::minmax_element(opponent_theta.begin(), opponent_theta.end());
  auto surplus = [&](double t) {
    double s = -win_total;
    for (double theta : opponent_theta) s += sigmoid(t - theta);
    return s;
  };
  OneParamFit fit;
  fit.coefficient =
      find_root_increasing(surplus, *min_it - 40.0, *max_it + 40.0, 1e-10);
  double info = 0.0;
  for (double theta : opponent_theta) {
    info += sigmoid_grad(fit.coefficient - theta);
  }
  fit.se = info > 0.0 ? 1.0 / std::sqrt(info) : 0.0;
  return fit;
}

}  // namespace

SyntheticWorld make_world(std::uint64_t seed, std::size_t num_models,
                          std::size_t n_categories,
                          std::size_t prompts_per_category,
                          double effect_scale, ModelKind kind) {
  if (num_models < 2) throw DataError("make_world: need at least two models");
  if (n_categories == 0 || prompts_per_category == 0) {
    throw DataError("make_world: need at least one category and prompt");
  }

  Rng rng(seed);
  std::vector<double> base(num_models);
  for (double& b : base) b = rng.normal();

  std::vector<std::string> names;
  std::vector<double> costs;
  names.reserve(num_models);
  for (std::size_t i = 0; i < num_models; ++i) {
    names.push_back("m" + std::to_string(i));
    costs.push_back(std::exp(0.4 * base[i] + 0.3 * rng.normal()));
  }

  std::map<std::string, Leaderboard> truth;
  for (std::size_t c = 0; c < n_categories; ++c) {
    std::vector<double> theta(num_models);
    for (std::size_t i = 0; i < num_models; ++i) {
      theta[i] = base[i] + effect_scale * rng.normal();
    }
    switch (kind) {
      case ModelKind::kBradleyTerry:
        truth.emplace(category_label(c), Leaderboard::bt(std::move(theta)));
        break;
      case ModelKind::kRaoKupper:
        truth.emplace(category_label(c),
                      Leaderboard::rk(std::move(theta),
                                      rng.uniform(0.3, 1.0)));
        break;
      case ModelKind::kGroundedRaoKupper:
        truth.emplace(category_label(c),
                      Leaderboard::grounded_rk(std::move(theta),
                                               1.0 + rng.uniform(0.2, 1.0)));
        break;
    }
  }

  std::vector<Prompt> pool;
  pool.reserve(n_categories * prompts_per_category);
  const char* fillers[] = {"please", "explain", "help", "write", "solve",
                           "draft", "review", "compare"};
  for (std::size_t c = 0; c < n_categories; ++c) {
    const std::string label = category_label(c);
    for (std::size_t p = 0; p < prompts_per_category; ++p) {
      Prompt prompt;
      prompt.id = label + "/p" + std::to_string(p);
      prompt.text = label + " " + fillers[rng.uniform_index(8)] + " task " +
                    std::to_string(p) + " about " + label;
      prompt.category_path = {label};
      pool.push_back(std::move(prompt));
    }
  }

  SyntheticWorld world{seed, kind,
                       ModelCatalog(std::move(names), std::move(costs)),
                       category_provider(truth, 0), truth, std::move(pool)};
  return world;
}

Outcome sample_vote(const SyntheticWorld& world, const Prompt& prompt,
                    ModelPair pair, ModelKind kind, Rng& rng) {
  if (kind != world.kind) {
    throw DataError("sample_vote: kind does not match the world");
  }
  const Leaderboard lb = world.provider_true->evaluate(prompt);
  const OutcomeProbs p = outcome_probabilities(lb, pair);
  const std::size_t draw =
      rng.categorical({p.win_a, p.win_b, p.tie, p.both_bad});
  switch (draw) {
    case 0:
      return Outcome::kWinA;
    case 1:
      return Outcome::kWinB;
    case 2:
      return Outcome::kTie;
    default:
      return Outcome::kBothBad;
  }
}

Router provider_router(ProviderPtr provider, const ModelCatalog& catalog,
                       double budget) {
  return Router{"router",
                [provider, catalog, budget](const Prompt& prompt) {
                  RoutingProblem problem{provider->evaluate(prompt), catalog,
                                         budget};
                  return optimal_policy(problem);
                }};
}

Router static_router(const ModelCatalog& catalog, std::size_t model_index) {
  const std::size_t m = catalog.size();
  if (model_index >= m) throw DataError("static_router: index out of range");
  return Router{catalog.name(model_index),
                [m, model_index](const Prompt&) {
                  RoutingPolicy policy;
                  policy.pi.assign(m, 0.0);
                  policy.pi[model_index] = 1.0;
                  return policy;
                }};
}

DeploymentResult deploy_router(const SyntheticWorld& world,
                               const Router& router,
                               const std::vector<double>& q,
                               std::size_t n_votes, std::uint64_t seed) {
  const std::size_t m = world.catalog.size();
  if (q.size() != m) throw DataError("deploy_router: q dimension mismatch");
  if (n_votes == 0) throw DataError("deploy_router: need votes");

  Rng rng(seed);
  DeploymentResult result;
  result.n_votes = n_votes;
  result.records.reserve(n_votes);

  std::vector<double> opponent_theta;
  std::vector<std::uint8_t> wins;
  opponent_theta.reserve(n_votes);
  wins.reserve(n_votes);

  double cost_expected = 0.0;
  double cost_realized = 0.0;
  for (std::size_t i = 0; i < n_votes; ++i) {
    const Prompt& prompt =
        world.prompt_pool[rng.uniform_index(world.prompt_pool.size())];
    const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
    const std::size_t opponent = rng.categorical(q);
    const RoutingPolicy policy = router.policy(prompt);
    const std::size_t choice = rng.categorical(policy.pi);

    for (std::size_t k = 0; k < m; ++k) {
      cost_expected += policy.pi[k] * world.catalog.cost(k);
    }
    cost_realized += world.catalog.cost(choice);

    const double p_win =
        sigmoid(truth.coefficients[choice] - truth.coefficients[opponent]);
    const bool router_wins = rng.bernoulli(p_win);

    opponent_theta.push_back(truth.coefficients[opponent]);
    wins.push_back(router_wins ? 1 : 0);

    PreferenceRecord record;
    record.prompt = prompt;
    record.model_a = world.catalog.name(opponent);
    record.model_b = router.name;
    record.outcome = router_wins ? Outcome::kWinB : Outcome::kWinA;
    result.records.push_back(std::move(record));
  }

  double win_total = 0.0;
  for (std::uint8_t w : wins) win_total += w;
  result.empirical_win_rate = win_total / static_cast<double>(n_votes);
  result.mean_expected_cost = cost_expected / static_cast<double>(n_votes);
  result.realized_mean_cost = cost_realized / static_cast<double>(n_votes);

  const OneParamFit fit = fit_router_coefficient(opponent_theta, wins);
  result.fitted_coefficient = fit.coefficient;
  result.fitted_se = fit.se;

  // Pre-deployment prediction over the prompt pool (exact, no sampling).
  double r_bar = 0.0;
  std::vector<double> pool_theta;
  pool_theta.reserve(world.prompt_pool.size() * m);
  for (const Prompt& prompt : world.prompt_pool) {
    const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
    const WinMatrix w(truth);
    const std::vector<double> rates = w.expected_win_rates(q);
    const RoutingPolicy policy = router.policy(prompt);
    for (std::size_t k = 0; k < m; ++k) r_bar += policy.pi[k] * rates[k];
    for (double theta : truth.coefficients) pool_theta.push_back(theta);
  }
  r_bar /= static_cast<double>(world.prompt_pool.size());
  result.predicted_win_rate = r_bar;

  const auto [min_it, max_it] =
      std::minmax_element(pool_theta.begin(), pool_theta.end());
  const double pool_n = static_cast<double>(world.prompt_pool.size());
  auto mean_g_minus_r = [&](double t) {
    double g = 0.0;
    std::size_t idx = 0;
    for (std::size_t z = 0; z < world.prompt_pool.size(); ++z) {
      for (std::size_t a = 0; a < m; ++a, ++idx) {
        g += q[a] * sigmoid(t - pool_theta[idx]);
      }
    }
    return g / pool_n - r_bar;
  };
  result.predicted_coefficient = find_root_increasing(
      mean_g_minus_r, *min_it - 40.0, *max_it + 40.0, 1e-12);
  return result;
}

std::vector<ParetoRow> pareto_sweep(const SyntheticWorld& world,
                                    const std::vector<double>& budgets,
                                    const std::vector<double>& q,
                                    std::size_t n_votes_per_budget,
                                    std::uint64_t seed,
                                    ProviderPtr router_provider) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw DataError("pareto_sweep: budgets must be ascending");
  }
  if (q.size() != world.catalog.size()) {
    throw DataError("pareto_sweep: q dimension mismatch");
  }
  ProviderPtr provider =
      router_provider ? std::move(router_provider) : world.provider_true;

  // Common random numbers: one batch of vote contexts drives every budget.
  struct VoteContext {
    std::size_t prompt_index;
    std::size_t opponent;
    double u_route;
    double u_outcome;
  };
  Rng rng(seed);
  std::vector<VoteContext> contexts(n_votes_per_budget);
  for (VoteContext& ctx : contexts) {
    ctx.prompt_index = rng.uniform_index(world.prompt_pool.size());
    ctx.opponent = rng.categorical(q);
    ctx.u_route = rng.uniform();
    ctx.u_outcome = rng.uniform();
  }

  const double min_cost = world.catalog.min_cost();
  std::vector<ParetoRow> rows;
  rows.reserve(budgets.size());
  for (double budget : budgets) {
    ParetoRow row;
    row.budget = budget;
    row.feasible = budget >= min_cost;
    if (!row.feasible) {
      rows.push_back(std::move(row));
      continue;
    }

    const Router router = provider_router(provider, world.catalog, budget);
    row.exact_win_rate = exact_router_win_rate(world, budget, q, provider);

    std::vector<double> opponent_theta;
    opponent_theta.reserve(n_votes_per_budget);
    row.win_flags.reserve(n_votes_per_budget);
    double cost_expected = 0.0;
    double cost_realized = 0.0;
    double win_total = 0.0;
    for (const VoteContext& ctx : contexts) {
      const Prompt& prompt = world.prompt_pool[ctx.prompt_index];
      const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
      const RoutingPolicy policy = router.policy(prompt);
      // Inverse-CDF choice so the same uniform maps to comparable choices
      // across budgets.
      std::size_t choice = policy.pi.size() - 1;
      double acc = 0.0;
      for (std::size_t k = 0; k < policy.pi.size(); ++k) {
        acc += policy.pi[k];
        if (ctx.u_route < acc) {
          choice = k;
          break;
        }
      }
      for (std::size_t k = 0; k < policy.pi.size(); ++k) {
        cost_expected += policy.pi[k] * world.catalog.cost(k);
      }
      cost_realized += world.catalog.cost(choice);
      const double p_win = sigmoid(truth.coefficients[choice] -
                                   truth.coefficients[ctx.opponent]);
      const bool won = ctx.u_outcome < p_win;
      win_total += won;
      row.win_flags.push_back(won ? 1 : 0);
      opponent_theta.push_back(truth.coefficients[ctx.opponent]);
    }
    const double n = static_cast<double>(n_votes_per_budget);
    row.mc_win_rate = win_total / n;
    row.mean_expected_cost = cost_expected / n;
    row.realized_mean_cost = cost_realized / n;

    const OneParamFit fit = fit_router_coefficient(opponent_theta, row.win_flags);
    row.fitted_coefficient = fit.coefficient;
    row.fitted_se = fit.se;

    {
      const std::size_t m = world.catalog.size();
      double r_bar = row.exact_win_rate;
      std::vector<double> pool_theta;
      pool_theta.reserve(world.prompt_pool.size() * m);
      for (const Prompt& prompt : world.prompt_pool) {
        const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
        for (double theta : truth.coefficients) pool_theta.push_back(theta);
      }
      const auto [min_it, max_it] =
          std::minmax_element(pool_theta.begin(), pool_theta.end());
      const double pool_n = static_cast<double>(world.prompt_pool.size());
      auto mean_g_minus_r = [&](double t) {
        double g = 0.0;
        std::size_t idx = 0;
        for (std::size_t z = 0; z < world.prompt_pool.size(); ++z) {
          for (std::size_t a = 0; a < m; ++a, ++idx) {
            g += q[a] * sigmoid(t - pool_theta[idx]);
          }
        }
        return g / pool_n - r_bar;
      };
      row.predicted_coefficient = find_root_increasing(
          mean_g_minus_r, *min_it - 40.0, *max_it + 40.0, 1e-12);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> exact_model_win_rates(const SyntheticWorld& world,
                                          const std::vector<double>& q) {
  const std::size_t m = world.catalog.size();
  if (q.size() != m) {
    throw DataError("exact_model_win_rates: q dimension mismatch");
  }
  std::vector<double> totals(m, 0.0);
  for (const Prompt& prompt : world.prompt_pool) {
    const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
    const WinMatrix w(truth);
    const std::vector<double> rates = w.expected_win_rates(q);
    for (std::size_t k = 0; k < m; ++k) totals[k] += rates[k];
  }
  for (double& t : totals) t /= static_cast<double>(world.prompt_pool.size());
  return totals;
}

double exact_router_win_rate(const SyntheticWorld& world, double budget,
                             const std::vector<double>& q,
                             ProviderPtr router_provider) {
  ProviderPtr provider =
      router_provider ? std::move(router_provider) : world.provider_true;
  const std::size_t m = world.catalog.size();
  if (q.size() != m) {
    throw DataError("exact_router_win_rate: q dimension mismatch");
  }
  const Router router = provider_router(provider, world.catalog, budget);
  double total = 0.0;
  for (const Prompt& prompt : world.prompt_pool) {
    const Leaderboard truth = to_bt(world.provider_true->evaluate(prompt));
    const WinMatrix w(truth);
    const std::vector<double> rates = w.expected_win_rates(q);
    const RoutingPolicy policy = router.policy(prompt);
    for (std::size_t k = 0; k < m; ++k) total += policy.pi[k] * rates[k];
  }
  return total / static_cast<double>(world.prompt_pool.size());
}

}  // namespace promptlb
