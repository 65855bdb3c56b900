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

#include "promptlb/routing.hpp"

#include <algorithm>
#include <cmath>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

WinMatrix::WinMatrix(const Leaderboard& bt_lb) {
  if (bt_lb.kind != ModelKind::kBradleyTerry) {
    throw DataError("win matrix: expected a BT leaderboard");
  }
  size_ = bt_lb.num_models();
  if (size_ < 2) throw DataError("win matrix: need at least two models");
  values_.resize(size_ * size_);
  for (std::size_t b = 0; b < size_; ++b) {
    for (std::size_t a = 0; a < size_; ++a) {
      values_[b * size_ + a] =
          b == a ? 0.5
                 : sigmoid(bt_lb.coefficients[b] - bt_lb.coefficients[a]);
    }
  }
}

std::vector<double> WinMatrix::expected_win_rates(
    const std::vector<double>& q) const {
  if (q.size() != size_) throw DataError("win matrix: q dimension mismatch");
  std::vector<double> v(size_, 0.0);
  for (std::size_t b = 0; b < size_; ++b) {
    double s = 0.0;
    for (std::size_t a = 0; a < size_; ++a) s += values_[b * size_ + a] * q[a];
    v[b] = s;
  }
  return v;
}

namespace {

struct LpSolution {
  std::vector<double> pi;
  double objective = 0.0;
  double cost = 0.0;
};

// Enumerates the vertices of {pi in simplex : pi^T c <= C}: feasible unit
// vectors, plus the points where the budget plane crosses a two-model edge.
// Objective comparisons are strict, and pure vertices are enumerated first in
// index order, which realizes the lowest-index tie-breaking rule.
LpSolution solve_routing_lp(const std::vector<double>& v,
                            const std::vector<double>& c, double budget) {
  const std::size_t m = v.size();
  const double min_cost = *std::min_element(c.begin(), c.end());
  if (budget < min_cost) {
    throw InfeasibleBudgetError(
        "budget " + std::to_string(budget) + " is below the cheapest cost " +
        std::to_string(min_cost));
  }

  LpSolution best;
  best.objective = -1.0;
  auto consider = [&](std::vector<double> pi, double objective, double cost) {
    if (objective > best.objective) {
      best = {std::move(pi), objective, cost};
    }
  };

  for (std::size_t i = 0; i < m; ++i) {
    if (c[i] <= budget) {
      std::vector<double> pi(m, 0.0);
      pi[i] = 1.0;
      consider(std::move(pi), v[i], c[i]);
    }
  }
  if (std::isfinite(budget)) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double lo = std::min(c[i], c[j]);
        const double hi = std::max(c[i], c[j]);
        if (!(lo < budget && budget < hi)) continue;  // plane misses the edge
        const double t = (budget - c[j]) / (c[i] - c[j]);
        std::vector<double> pi(m, 0.0);
        pi[i] = t;
        pi[j] = 1.0 - t;
        consider(std::move(pi), t * v[i] + (1.0 - t) * v[j], budget);
      }
    }
  }
  return best;
}

std::size_t argmax_lowest_index(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

RoutingPolicy optimal_policy(const RoutingProblem& problem) {
  const Leaderboard lb = to_bt(problem.leaderboard);
  if (lb.num_models() != problem.catalog.size()) {
    throw DataError("routing: leaderboard/catalog dimension mismatch");
  }
  const WinMatrix w(lb);
  const std::vector<double>& q = problem.catalog.opponent_dist();
  const std::vector<double> v = w.expected_win_rates(q);
  const LpSolution solution =
      solve_routing_lp(v, problem.catalog.costs(), problem.budget);

  RoutingPolicy policy;
  policy.pi = solution.pi;
  policy.expected_cost = solution.cost;
  policy.predicted_win_rate = solution.objective;
  policy.predicted_coefficient = router_coefficient(policy, w, q, lb);
  return policy;
}

double router_coefficient(const RoutingPolicy& policy, const WinMatrix& w,
                          const std::vector<double>& q,
                          const Leaderboard& bt_lb) {
  const std::size_t m = w.size();
  if (policy.pi.size() != m || q.size() != m || bt_lb.num_models() != m) {
    throw DataError("router_coefficient: dimension mismatch");
  }
  double r_star = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    if (policy.pi[b] == 0.0) continue;
    double row = 0.0;
    for (std::size_t a = 0; a < m; ++a) row += w.at(b, a) * q[a];
    r_star += policy.pi[b] * row;
  }
  if (!(r_star > 0.0 && r_star < 1.0)) {
    throw DataError("router_coefficient: win rate outside (0,1)");
  }

  const auto [min_it, max_it] = std::minmax_element(
      bt_lb.coefficients.begin(), bt_lb.coefficients.end());
  const std::vector<double>& theta = bt_lb.coefficients;
  auto g_minus_r = [&](double t) {
    double g = 0.0;
    for (std::size_t a = 0; a < m; ++a) g += q[a] * sigmoid(t - theta[a]);
    return g - r_star;
  };
  return find_root_increasing(g_minus_r, *min_it - 40.0, *max_it + 40.0,
                              1e-12);
}

RoutingEquivalenceReport routing_equivalence_check(const RoutingProblem& problem,
                                          std::size_t grid_resolution,
                                          std::uint64_t seed) {
  const Leaderboard lb = to_bt(problem.leaderboard);
  const WinMatrix w(lb);
  const std::vector<double>& q = problem.catalog.opponent_dist();
  const std::vector<double> v = w.expected_win_rates(q);
  const std::vector<double>& c = problem.catalog.costs();
  const double budget = problem.budget;
  const std::size_t m = v.size();

  RoutingEquivalenceReport report;
  const RoutingPolicy lp = optimal_policy(problem);
  report.lp_win_rate = lp.predicted_win_rate;
  report.lp_coefficient = lp.predicted_coefficient;
  report.lp_support = static_cast<std::size_t>(
      std::count_if(lp.pi.begin(), lp.pi.end(),
                    [](double p) { return p > 1e-12; }));

  const std::size_t cheapest = static_cast<std::size_t>(
      std::min_element(c.begin(), c.end()) - c.begin());

  double best_rate = -1.0;
  std::vector<double> best_pi;
  auto consider = [&](const std::vector<double>& pi) {
    double cost = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      cost += pi[i] * c[i];
      rate += pi[i] * v[i];
    }
    if (cost > budget + 1e-12) return;
    ++report.grid_points;
    if (rate > best_rate) {
      best_rate = rate;
      best_pi = pi;
    }
  };

  // Random simplex points; infeasible draws are projected onto the budget
  // plane by mixing toward the cheapest model.
  Rng rng(seed);
  std::vector<double> pi(m);
  for (std::size_t n = 0; n < grid_resolution; ++n) {
    double sum = 0.0;
    for (double& p : pi) {
      p = -std::log(std::max(rng.uniform(), 1e-300));
      sum += p;
    }
    for (double& p : pi) p /= sum;
    double cost = 0.0;
    for (std::size_t i = 0; i < m; ++i) cost += pi[i] * c[i];
    if (cost > budget) {
      const double t = (budget - c[cheapest]) / (cost - c[cheapest]);
      for (std::size_t i = 0; i < m; ++i) pi[i] *= t;
      pi[cheapest] += 1.0 - t;
    }
    consider(pi);
  }

  // Fine sweep along every two-model edge; step 5e-5 keeps the best grid
  // objective within 1e-4 of any edge optimum (|v_i - v_j| < 1).
  constexpr std::size_t kEdgeSteps = 20000;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = 0; k <= kEdgeSteps; ++k) {
        const double t = static_cast<double>(k) / kEdgeSteps;
        std::fill(pi.begin(), pi.end(), 0.0);
        pi[i] = t;
        pi[j] = 1.0 - t;
        consider(pi);
      }
    }
  }

  report.grid_best_win_rate = best_rate;
  RoutingPolicy best_policy;
  best_policy.pi = best_pi;
  report.grid_best_coefficient = router_coefficient(best_policy, w, q, lb);

  report.win_rate_matches =
      std::abs(report.lp_win_rate - report.grid_best_win_rate) <= 1e-4 &&
      report.lp_win_rate >= report.grid_best_win_rate - 1e-12;
  report.coefficient_maximal =
      report.grid_best_coefficient <= report.lp_coefficient + 1e-6;
  report.support_ok = report.lp_support <= 2;
  report.passed = report.win_rate_matches && report.coefficient_maximal &&
                  report.support_ok;
  return report;
}

RoutingDecision route(const CoefficientProvider& provider, const Prompt& prompt,
                      const ModelCatalog& catalog, double budget, Rng* rng) {
  RoutingProblem problem{provider.evaluate(prompt), catalog, budget};
  RoutingDecision decision;
  decision.policy = optimal_policy(problem);
  decision.model_index = rng ? rng->categorical(decision.policy.pi)
                             : argmax_lowest_index(decision.policy.pi);
  decision.model = catalog.name(decision.model_index);
  return decision;
}

}  // namespace promptlb
