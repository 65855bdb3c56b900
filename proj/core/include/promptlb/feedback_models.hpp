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
// Parametric likelihoods for pairwise human feedback between M models.
//
// Three families, all over a signed pair encoding (-1 at the left model A,
// +1 at the right model B):
//
//   Bradley-Terry:       P(B wins) = sigmoid(theta_B - theta_A)
//   Rao-Kupper:          adds a tie outcome via a tie coefficient eta:
//                          P(B) = sigmoid(theta_B - theta_A - eta)
//                          P(A) = sigmoid(theta_A - theta_B - eta)
//                          P(tie) = 1 - P(A) - P(B)
//   Grounded Rao-Kupper: four outcomes {A, B, tie, both-bad}, grounded by a
//                        fictitious "bad" model of strength exp(0) = 1. With
//                        phi_i = exp(beta_i) and lambda >= 1:
//                          P(A)   = phi_A / (phi_A + lambda*phi_B + 1)
//                          P(B)   = phi_B / (phi_B + lambda*phi_A + 1)
//                          P(bad) = 1 / (1 + phi_A + phi_B)
//                          P(tie) = 1 - P(A) - P(B) - P(bad)
//
// Tie masses are always computed by subtraction so the outcome distribution
// normalizes exactly. Everything here is a pure function of its arguments.

#ifndef PROMPTLB_FEEDBACK_MODELS_HPP_
#define PROMPTLB_FEEDBACK_MODELS_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace promptlb {

enum class ModelKind { kBradleyTerry, kRaoKupper, kGroundedRaoKupper };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

enum class Outcome { kWinA, kWinB, kTie, kBothBad };

std::string to_string(Outcome outcome);

// Index pair (A = left, B = right) into a length-M coefficient vector.
struct ModelPair {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct BtParams {
  std::vector<double> theta;
};

struct RkParams {
  std::vector<double> theta;
  double eta = 0.0;
};

struct GroundedRkParams {
  std::vector<double> beta;
  double lambda = 1.0;  // >= 1
};

// A leaderboard: per-model coefficients plus the tie/grounding parameter of
// its kind. `coefficients` holds theta for BT/RK and beta for grounded RK.
struct Leaderboard {
  ModelKind kind = ModelKind::kBradleyTerry;
  std::vector<double> coefficients;
  double eta = 0.0;     // Rao-Kupper only
  double lambda = 1.0;  // grounded Rao-Kupper only
  std::string anchor = "none";

  std::size_t num_models() const { return coefficients.size(); }

  static Leaderboard bt(std::vector<double> theta);
  static Leaderboard rk(std::vector<double> theta, double eta);
  static Leaderboard grounded_rk(std::vector<double> beta, double lambda);
};

// Leaderboard restricted to its first-M strength coefficients, viewed as BT.
// Identity for BT leaderboards.
Leaderboard to_bt(const Leaderboard& lb);

struct RkProbs {
  double win_a = 0.0;
  double win_b = 0.0;
  double tie = 0.0;
};

struct GrkProbs {
  double win_a = 0.0;
  double win_b = 0.0;
  double both_bad = 0.0;
  double tie = 0.0;
};

// Outcome distribution of any kind; entries not supported by the kind are 0.
struct OutcomeProbs {
  double win_a = 0.0;
  double win_b = 0.0;
  double tie = 0.0;
  double both_bad = 0.0;
};

// P(B wins).
double bt_prob(const BtParams& params, ModelPair pair);

// Throws InvalidParameterError if the implied tie probability is negative
// (eta too small for these strengths).
RkProbs rk_probs(const RkParams& params, ModelPair pair);

// Overflow-safe for |beta| at least up to ~700. Throws InvalidParameterError
// if lambda < 1.
GrkProbs grk_probs(const GroundedRkParams& params, ModelPair pair);

OutcomeProbs outcome_probabilities(const Leaderboard& lb, ModelPair pair);

// log g_theta(outcome; pair). Returns -infinity when the outcome has zero
// probability under valid parameters (e.g. a tie at eta -> -inf); throws
// InvalidParameterError when the outcome is not supported by the kind.
double log_likelihood(const Leaderboard& lb, ModelPair pair, Outcome outcome);

// Gradient of log_likelihood with respect to the parameter vector:
// length M for BT, M+1 for RK (theta, then eta) and grounded RK (beta, then
// lambda). Analytic; matches central finite differences.
std::vector<double> log_likelihood_gradient(const Leaderboard& lb,
                                            ModelPair pair, Outcome outcome);

}  // namespace promptlb

#endif  // PROMPTLB_FEEDBACK_MODELS_HPP_
