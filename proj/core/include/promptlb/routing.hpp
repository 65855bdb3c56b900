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
// Cost-optimal routing under a Bradley-Terry leaderboard. For a prompt with
// coefficients theta, the optimal policy solves
//
//   maximize    pi^T W q
//   subject to  pi^T c <= C,  pi in the simplex,
//
// where W_ba = sigmoid(theta_b - theta_a) is the win matrix and q the
// opponent distribution. Because only the simplex and the budget constrain
// the problem, some optimum is a vertex supported on at most two models;
// the solver enumerates those vertices exactly rather than calling a general
// LP. The router's own leaderboard coefficient is predicted by solving
// sum_a q_a * sigmoid(theta' - theta_a) = R* for theta', with R* = pi^T W q.
// This assumes the BT model holds; non-transitive preference structure
// breaks the equivalence between maximizing win rate and maximizing theta'.

#ifndef PROMPTLB_ROUTING_HPP_
#define PROMPTLB_ROUTING_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "promptlb/catalog.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"
#include "promptlb/rng.hpp"

namespace promptlb {

constexpr double kUnlimitedBudget = std::numeric_limits<double>::infinity();

// Pairwise win probabilities; entry (b, a) is P(b beats a), diagonal 0.5.
class WinMatrix {
 public:
  explicit WinMatrix(const Leaderboard& bt_lb);

  std::size_t size() const { return size_; }
  double at(std::size_t b, std::size_t a) const {
    return values_[b * size_ + a];
  }

  // (W q)_b for an opponent distribution q: each model's expected win rate.
  std::vector<double> expected_win_rates(const std::vector<double>& q) const;

 private:
  std::size_t size_;
  std::vector<double> values_;
};

inline WinMatrix win_matrix(const Leaderboard& bt_lb) {
  return WinMatrix(bt_lb);
}

struct RoutingPolicy {
  std::vector<double> pi;
  double expected_cost = 0.0;
  double predicted_win_rate = 0.0;    // R* = pi^T W q
  double predicted_coefficient = 0.0; // theta', root of G(theta') = R*
};

struct RoutingProblem {
  Leaderboard leaderboard;  // any kind; routing uses the first-M strengths
  ModelCatalog catalog;
  double budget = kUnlimitedBudget;
};

// Exact vertex solution of the routing LP; deterministic lowest-index
// tie-breaking. Throws InfeasibleBudgetError when budget < min cost.
RoutingPolicy optimal_policy(const RoutingProblem& problem);

// theta' such that sum_a q_a sigmoid(theta' - theta_a) = pi^T W q, solved to
// a |G(theta') - R*| residual of 1e-12. The root is bracketed within
// [min theta - 40, max theta + 40].
double router_coefficient(const RoutingPolicy& policy, const WinMatrix& w,
                          const std::vector<double>& q,
                          const Leaderboard& bt_lb);

struct RoutingEquivalenceReport {
  double lp_win_rate = 0.0;
  double grid_best_win_rate = 0.0;
  double lp_coefficient = 0.0;
  double grid_best_coefficient = 0.0;
  std::size_t grid_points = 0;
  std::size_t lp_support = 0;
  bool win_rate_matches = false;    // |lp - grid| <= 1e-4
  bool coefficient_maximal = false; // grid theta' <= lp theta' + 1e-6
  bool support_ok = false;          // lp support <= 2
  bool passed = false;
};

// Numerically verifies that the LP vertex solution maximizes both the win
// rate and the predicted coefficient over a dense feasible-policy grid
// (seeded random simplex points projected onto the budget boundary, plus
// fine sweeps along every two-model edge). Intended for M <= 6.
RoutingEquivalenceReport routing_equivalence_check(const RoutingProblem& problem,
                                          std::size_t grid_resolution = 10000,
                                          std::uint64_t seed = 0);

struct RoutingDecision {
  std::size_t model_index = 0;
  std::string model;
  RoutingPolicy policy;
};

// Evaluates the provider on the prompt, solves the LP, and picks a model:
// sampled from pi when an rng is supplied, otherwise the deterministic
// argmax of pi (lowest index on ties).
RoutingDecision route(const CoefficientProvider& provider, const Prompt& prompt,
                      const ModelCatalog& catalog, double budget,
                      Rng* rng = nullptr);

}  // namespace promptlb

#endif  // PROMPTLB_ROUTING_HPP_
