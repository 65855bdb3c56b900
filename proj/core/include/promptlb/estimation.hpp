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

#ifndef PROMPTLB_ESTIMATION_HPP_
#define PROMPTLB_ESTIMATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "promptlb/catalog.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"

namespace promptlb {

// One human vote.
struct PreferenceRecord {
  Prompt prompt;
  std::string model_a;
  std::string model_b;
  Outcome outcome = Outcome::kWinA;
  double weight = 1.0;
};

// Identifiability anchor for fitted BT/RK leaderboards (grounded RK needs
// none; its coefficients are absolute).
struct Anchor {
  enum class Kind { kSumZero, kFixModel };
  Kind kind = Kind::kSumZero;
  std::string model;  // for kFixModel

  static Anchor sum_zero() { return {}; }
  static Anchor fix_model(std::string name) {
    return {Kind::kFixModel, std::move(name)};
  }
};

struct FitConfig {
  std::size_t max_iters = 500;
  double grad_tolerance = 1e-8;  // infinity norm of the per-record gradient
  double l2_regularization = 0.0;  // adds 0.5 * l2 * ||params||^2
  Anchor anchor;
  // Nonzero: randomize the optimizer's starting point (the optimum itself is
  // seed-independent whenever the objective is strictly convex).
  std::uint64_t seed = 0;
};

struct FitReport {
  double final_nll = 0.0;  // weighted sum of -log g at the solution
  std::size_t iterations = 0;
  bool converged = false;
  Leaderboard leaderboard;
  double l2_used = 0.0;
  // Records whose outcome the kind does not support (ties / both-bad under
  // BT, both-bad under RK), dropped with this counter as the warning.
  std::size_t skipped_records = 0;
};

// Applies the shift anchor to a BT/RK leaderboard (grounded RK passes
// through unanchored). `model_names` is only consulted for fix-model anchors.
Leaderboard anchor_leaderboard(Leaderboard lb, const Anchor& anchor,
                               const std::vector<std::string>& model_names = {});

// Maximum-likelihood constant leaderboard from vote data. Minimizes
// sum_i w_i * (-log g_theta(Y_i; X_i)) + 0.5*l2*||params||^2 by L-BFGS.
//
// - BT/RK without regularization require a connected comparison graph;
//   otherwise NotIdentifiableError names the components.
// - If l2 is 0, the graph is connected, and some model has fewer than 5
//   comparisons, an l2 of 1e-6 is applied automatically (and reported in
//   l2_used) to keep undefeated models finite.
// - The anchor fixes the BT/RK shift degeneracy after the fit; grounded RK
//   results are never anchored.
FitReport fit_marginal(const ModelCatalog& catalog,
                       const std::vector<PreferenceRecord>& records,
                       ModelKind kind, const FitConfig& config = {});

// Weighted soft-label BT fit: argmin_theta sum_k w_k * BCE(sigmoid(theta_b -
// theta_a), p_k), anchored per config. The work-horse behind aggregation.
struct SoftPairObservation {
  ModelPair pair;
  double soft_label = 0.5;  // target P(B wins)
  double weight = 1.0;
};

Leaderboard fit_bt_soft_labels(std::size_t num_models,
                               const std::vector<SoftPairObservation>& observations,
                               const FitConfig& config = {},
                               const std::vector<std::string>& model_names = {});

// Weighted mean of -log g over records, with theta(Z_i) supplied by the
// provider. Throws InvalidParameterError when a record's outcome is not
// supported by the provider's kind.
double nll_on_dataset(const CoefficientProvider& provider,
                      const ModelCatalog& catalog,
                      const std::vector<PreferenceRecord>& records);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  double learning_rate = 0.5;
  double l2_regularization = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  FeatureLinearProvider provider;
  std::vector<double> loss_history;  // mean NLL per minibatch, pre-update
};

// Minibatch gradient descent on the empirical risk of the provider's
// featurized linear model. Deterministic given the seed. Aborts with a
// DataError diagnostic if the loss leaves the finite range.
TrainResult train_provider(const ModelCatalog& catalog,
                           const std::vector<PreferenceRecord>& records,
                           FeatureLinearProvider provider,
                           const TrainConfig& config = {});

}  // namespace promptlb

#endif  // PROMPTLB_ESTIMATION_HPP_
