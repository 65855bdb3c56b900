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

#include <cmath>

#include <doctest.h>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"
#include "test_util.hpp"

using namespace promptlb;
using namespace promptlb::testing;

namespace {

RoutingProblem two_model_problem() {
  // theta = (1, 0), uniform q, costs (2, 1), budget 1.5: the budget binds at
  // pi = (0.5, 0.5) and R* = 0.5 by sigmoid antisymmetry.
  return RoutingProblem{Leaderboard::bt({1.0, 0.0}),
                        ModelCatalog({"m0", "m1"}, {2.0, 1.0}), 1.5};
}

}  // namespace

TEST_CASE("win matrix closed forms and complement property") {
  SUBCASE("flat leaderboard") {
    const WinMatrix w(Leaderboard::bt({0.0, 0.0, 0.0}));
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t a = 0; a < 3; ++a) CHECK(w.at(b, a) == 0.5);
    }
  }
  SUBCASE("ln 3 gap") {
    const WinMatrix w(Leaderboard::bt({std::log(3.0), 0.0}));
    CHECK(w.at(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(w.at(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("W + W^T is the all-ones matrix") {
    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
      const Leaderboard lb =
          random_leaderboard(ModelKind::kBradleyTerry, 5, rng, 4.0);
      const WinMatrix w(lb);
      for (std::size_t b = 0; b < 5; ++b) {
        for (std::size_t a = 0; a < 5; ++a) {
          CHECK(std::abs(w.at(b, a) + w.at(a, b) - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("unconstrained optimum is the argmax point mass") {
  RoutingProblem problem{Leaderboard::bt({0.2, 1.4, -0.5}),
                         ModelCatalog({"a", "b", "c"}, {1.0, 5.0, 0.1}),
                         kUnlimitedBudget};
  const RoutingPolicy policy = optimal_policy(problem);
  CHECK(policy.pi == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(policy.expected_cost == 5.0);

  // For a fixed prompt the unconstrained router exactly matches the best
  // single model's expected win rate, never exceeding it.
  const WinMatrix w(problem.leaderboard);
  const std::vector<double> rates =
      w.expected_win_rates(problem.catalog.opponent_dist());
  CHECK(policy.predicted_win_rate ==
        doctest::Approx(*std::max_element(rates.begin(), rates.end()))
            .epsilon(1e-15));
}

TEST_CASE("binding budget mixes two models (hand LP)") {
  const RoutingPolicy policy = optimal_policy(two_model_problem());
  CHECK(policy.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(policy.pi[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(policy.expected_cost == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(policy.predicted_win_rate == doctest::Approx(0.5).epsilon(1e-12));
  // Root of 0.5*sigmoid(t-1) + 0.5*sigmoid(t) = 0.5 is t = 0.5.
  CHECK(policy.predicted_coefficient == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("infeasible budget raises") {
  RoutingProblem problem = two_model_problem();
  problem.budget = 0.5;
  CHECK_THROWS_AS((void)optimal_policy(problem), InfeasibleBudgetError);
}

TEST_CASE("router_coefficient reduces to theta_m for point masses") {
  const Leaderboard lb = Leaderboard::bt({0.7, -0.4, 0.1});
  const WinMatrix w(lb);
  RoutingPolicy policy;
  policy.pi = {0.0, 0.0, 1.0};
  const std::vector<double> q = {1.0, 0.0, 0.0};  // opponent is model 0
  const double coefficient = router_coefficient(policy, w, q, lb);
  CHECK(coefficient == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("router_coefficient residual is at most 1e-12") {
  Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(5);
    const Leaderboard lb =
        random_leaderboard(ModelKind::kBradleyTerry, m, rng, 3.0);
    std::vector<double> q(m), pi(m);
    double q_sum = 0.0, pi_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      q[i] = rng.uniform(0.01, 1.0);
      pi[i] = rng.uniform(0.0, 1.0);
      q_sum += q[i];
      pi_sum += pi[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
      q[i] /= q_sum;
      pi[i] /= pi_sum;
    }
    const WinMatrix w(lb);
    RoutingPolicy policy;
    policy.pi = pi;
    const double coefficient = router_coefficient(policy, w, q, lb);

    double r_star = 0.0, g = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t a = 0; a < m; ++a) r_star += pi[b] * w.at(b, a) * q[a];
    }
    for (std::size_t a = 0; a < m; ++a) {
      g += q[a] * sigmoid(coefficient - lb.coefficients[a]);
    }
    CHECK(std::abs(g - r_star) <= 1e-12);

    // Interior point masses keep theta' within the leaderboard range.
    RoutingPolicy point;
    point.pi.assign(m, 0.0);
    point.pi[rng.uniform_index(m)] = 1.0;
    const double point_coefficient = router_coefficient(point, w, q, lb);
    const auto [lo, hi] = std::minmax_element(lb.coefficients.begin(),
                                              lb.coefficients.end());
    CHECK(point_coefficient >= *lo - 1e-9);
    CHECK(point_coefficient <= *hi + 1e-9);
  }
}

TEST_CASE("win-rate/rating equivalence on the hand example and random instances") {
  SUBCASE("two-model hand example") {
    const RoutingEquivalenceReport report =
        routing_equivalence_check(two_model_problem(), 2000, 1);
    CHECK(report.passed);
    CHECK(report.lp_support == 2);
  }
  SUBCASE("degenerate flat leaderboard") {
    RoutingProblem problem{Leaderboard::bt({0.0, 0.0, 0.0}),
                           ModelCatalog({"a", "b", "c"}, {1, 2, 3}), 2.0};
    const RoutingPolicy policy = optimal_policy(problem);
    CHECK(policy.predicted_win_rate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(policy.predicted_coefficient == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(policy.pi[0] == 1.0);  // lowest index tie-break
    const RoutingEquivalenceReport report = routing_equivalence_check(problem, 2000, 2);
    CHECK(report.passed);
  }
  SUBCASE("random instances") {
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t m = 3 + rng.uniform_index(4);
      const Leaderboard lb =
          random_leaderboard(ModelKind::kBradleyTerry, m, rng, 2.0);
      std::vector<std::string> names;
      std::vector<double> costs;
      for (std::size_t i = 0; i < m; ++i) {
        names.push_back("m" + std::to_string(i));
        costs.push_back(rng.uniform(0.5, 3.0));
      }
      const double min_cost = *std::min_element(costs.begin(), costs.end());
      const double max_cost = *std::max_element(costs.begin(), costs.end());
      RoutingProblem problem{lb, ModelCatalog(names, costs),
                             rng.uniform(min_cost, max_cost * 1.2)};
      const RoutingEquivalenceReport report =
          routing_equivalence_check(problem, 2000, 1000 + trial);
      CHECK(report.passed);
      CHECK(report.lp_support <= 2);
    }
  }
}

TEST_CASE("optimal policy satisfies all constraints and monotonicity") {
  Rng rng(54);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(5);
    const Leaderboard lb =
        random_leaderboard(ModelKind::kBradleyTerry, m, rng, 2.5);
    std::vector<std::string> names;
    std::vector<double> costs;
    for (std::size_t i = 0; i < m; ++i) {
      names.push_back("m" + std::to_string(i));
      costs.push_back(rng.uniform(0.2, 4.0));
    }
    const ModelCatalog catalog(names, costs);
    const double min_cost = catalog.min_cost();
    const double b1 = rng.uniform(min_cost, 4.5);
    const double b2 = b1 + rng.uniform(0.0, 1.0);

    const RoutingPolicy tight = optimal_policy({lb, catalog, b1});
    const RoutingPolicy loose = optimal_policy({lb, catalog, b2});

    double sum = 0.0;
    for (double p : tight.pi) {
      CHECK(p >= -1e-12);
      CHECK(p <= 1.0 + 1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tight.expected_cost <= b1 + 1e-9);

    // Relaxing the budget never hurts.
    CHECK(loose.predicted_win_rate >= tight.predicted_win_rate - 1e-12);
    CHECK(loose.predicted_coefficient >=
          tight.predicted_coefficient - 1e-9);
  }
}

TEST_CASE("shift invariance of the policy; equivariance of theta'") {
  Rng rng(55);
  const Leaderboard lb = random_leaderboard(ModelKind::kBradleyTerry, 4, rng);
  const ModelCatalog catalog({"a", "b", "c", "d"}, {1.0, 2.0, 3.0, 4.0});
  const double budget = 2.2;
  const RoutingPolicy base = optimal_policy({lb, catalog, budget});

  Leaderboard shifted = lb;
  for (double& c : shifted.coefficients) c += 2.7;
  const RoutingPolicy moved = optimal_policy({shifted, catalog, budget});
  CHECK(max_abs_diff(base.pi, moved.pi) < 1e-12);
  CHECK(moved.predicted_coefficient ==
        doctest::Approx(base.predicted_coefficient + 2.7).epsilon(1e-8));
}

TEST_CASE("route: deterministic argmax, sampling, and kind projection") {
  const ModelCatalog catalog({"m0", "m1"}, {2.0, 1.0});
  Prompt prompt;
  prompt.text = "hello";

  SUBCASE("unconstrained routes to the argmax deterministically") {
    const ProviderPtr provider =
        constant_provider(Leaderboard::bt({1.0, 0.0}));
    const RoutingDecision decision =
        route(*provider, prompt, catalog, kUnlimitedBudget);
    CHECK(decision.model == "m0");
  }

  SUBCASE("binding budget with a seeded rng splits 50/50") {
    const ProviderPtr provider =
        constant_provider(Leaderboard::bt({1.0, 0.0}));
    Rng rng(77);
    std::size_t picks0 = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
      picks0 += route(*provider, prompt, catalog, 1.5, &rng).model_index == 0;
    }
    const double freq = static_cast<double>(picks0) / n;
    CHECK(std::abs(freq - 0.5) <= 0.01);
  }

  SUBCASE("grounded RK providers route on their strength block") {
    const ProviderPtr provider =
        constant_provider(Leaderboard::grounded_rk({0.0, 2.0}, 1.4));
    const RoutingDecision decision =
        route(*provider, prompt, catalog, kUnlimitedBudget);
    CHECK(decision.model == "m1");
  }

  SUBCASE("seeded routing is reproducible") {
    const ProviderPtr provider =
        constant_provider(Leaderboard::bt({1.0, 0.0}));
    Rng rng1(5), rng2(5);
    for (int i = 0; i < 50; ++i) {
      CHECK(route(*provider, prompt, catalog, 1.5, &rng1).model_index ==
            route(*provider, prompt, catalog, 1.5, &rng2).model_index);
    }
  }
}
