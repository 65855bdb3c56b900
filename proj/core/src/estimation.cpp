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

#include "promptlb/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"
#include "promptlb/rng.hpp"

namespace promptlb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ResolvedVote {
  ModelPair pair;
  Outcome outcome;
  double weight;
};

ResolvedVote resolve(const ModelCatalog& catalog, const PreferenceRecord& r) {
  if (r.model_a == r.model_b) {
    throw DataError("vote compares '" + r.model_a + "' against itself");
  }
  if (!(r.weight > 0.0) || !std::isfinite(r.weight)) {
    throw DataError("vote weight must be positive and finite");
  }
  return {{catalog.index_of(r.model_a), catalog.index_of(r.model_b)},
          r.outcome, r.weight};
}

bool outcome_supported(ModelKind kind, Outcome outcome) {
  switch (kind) {
    case ModelKind::kBradleyTerry:
      return outcome == Outcome::kWinA || outcome == Outcome::kWinB;
    case ModelKind::kRaoKupper:
      return outcome != Outcome::kBothBad;
    case ModelKind::kGroundedRaoKupper:
      return true;
  }
  return false;
}

// Union-find over model indices.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void merge(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

void check_connected(const ModelCatalog& catalog,
                     const std::vector<ResolvedVote>& votes) {
  DisjointSet ds(catalog.size());
  for (const ResolvedVote& v : votes) ds.merge(v.pair.a, v.pair.b);
  std::size_t root0 = ds.find(0);
  bool connected = true;
  for (std::size_t i = 1; i < catalog.size(); ++i) {
    if (ds.find(i) != root0) {
      connected = false;
      break;
    }
  }
  if (connected) return;

  std::map<std::size_t, std::vector<std::string>> components;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    components[ds.find(i)].push_back(catalog.name(i));
  }
  std::ostringstream msg;
  msg << "comparison graph is disconnected; fit is not identifiable without "
         "regularization. Components:";
  for (const auto& [root, names] : components) {
    msg << " {";
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) msg << ", ";
      msg << names[i];
    }
    msg << "}";
  }
  throw NotIdentifiableError(msg.str());
}

// Parameter vector layout for the marginal fit: BT -> theta (M);
// RK -> (theta, eta); grounded RK -> (beta, u) with lambda = 1 + softplus(u).
Leaderboard params_to_leaderboard(ModelKind kind, std::size_t num_models,
                                  const std::vector<double>& x) {
  switch (kind) {
    case ModelKind::kBradleyTerry:
      return Leaderboard::bt({x.begin(), x.begin() + num_models});
    case ModelKind::kRaoKupper:
      return Leaderboard::rk({x.begin(), x.begin() + num_models},
                             x[num_models]);
    case ModelKind::kGroundedRaoKupper:
      return Leaderboard::grounded_rk({x.begin(), x.begin() + num_models},
                                      1.0 + softplus(x[num_models]));
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Leaderboard anchor_leaderboard(Leaderboard lb, const Anchor& anchor,
                               const std::vector<std::string>& model_names) {
  if (lb.kind == ModelKind::kGroundedRaoKupper) {
    lb.anchor = "none";
    return lb;
  }
  if (anchor.kind == Anchor::Kind::kSumZero) {
    const double mean =
        std::accumulate(lb.coefficients.begin(), lb.coefficients.end(), 0.0) /
        static_cast<double>(lb.coefficients.size());
    for (double& c : lb.coefficients) c -= mean;
    lb.anchor = "sum_zero";
  } else {
    const auto it =
        std::find(model_names.begin(), model_names.end(), anchor.model);
    if (it == model_names.end()) {
      throw DataError("anchor: unknown model '" + anchor.model + "'");
    }
    const double ref =
        lb.coefficients.at(static_cast<std::size_t>(it - model_names.begin()));
    for (double& c : lb.coefficients) c -= ref;
    lb.anchor = "fixed:" + anchor.model;
  }
  return lb;
}

FitReport fit_marginal(const ModelCatalog& catalog,
                       const std::vector<PreferenceRecord>& records,
                       ModelKind kind, const FitConfig& config) {
  if (records.empty()) throw DataError("fit_marginal: no records");

  FitReport report;
  std::vector<ResolvedVote> votes;
  votes.reserve(records.size());
  for (const PreferenceRecord& r : records) {
    ResolvedVote v = resolve(catalog, r);
    if (!outcome_supported(kind, v.outcome)) {
      ++report.skipped_records;
      continue;
    }
    votes.push_back(v);
  }
  if (votes.empty()) {
    throw DataError("fit_marginal: no usable records for this model kind");
  }

  double l2 = config.l2_regularization;
  const bool grounded = kind == ModelKind::kGroundedRaoKupper;
  if (!grounded && l2 == 0.0) check_connected(catalog, votes);
  if (l2 == 0.0) {
    std::vector<std::size_t> comparisons(catalog.size(), 0);
    for (const ResolvedVote& v : votes) {
      ++comparisons[v.pair.a];
      ++comparisons[v.pair.b];
    }
    if (*std::min_element(comparisons.begin(), comparisons.end()) < 5) {
      l2 = 1e-6;
    }
  }
  report.l2_used = l2;

  const std::size_t m = catalog.size();
  const std::size_t dim = kind == ModelKind::kBradleyTerry ? m : m + 1;
  // The L2 penalty covers theta/beta and eta but never the lambda
  // reparameterization coordinate.
  const std::size_t penalized =
      kind == ModelKind::kGroundedRaoKupper ? m : dim;

  bool any_tie = false;
  for (const ResolvedVote& v : votes) any_tie |= v.outcome == Outcome::kTie;

  std::vector<double> x0(dim, 0.0);
  if (kind == ModelKind::kRaoKupper) x0[m] = any_tie ? 1.0 : 0.0;
  if (kind == ModelKind::kGroundedRaoKupper) x0[m] = inverse_softplus(0.5);
  if (config.seed != 0) {
    Rng rng(config.seed);
    for (std::size_t i = 0; i < m; ++i) x0[i] += rng.uniform(-0.5, 0.5);
  }

  // The marginal likelihood depends on the votes only through the total
  // weight per (ordered pair, outcome); compressing to those sufficient
  // statistics makes each objective evaluation O(M^2) regardless of N.
  struct VoteGroup {
    ModelPair pair;
    Outcome outcome;
    double weight;
  };
  std::vector<VoteGroup> groups;
  {
    std::map<std::tuple<std::size_t, std::size_t, int>, double> grouped;
    for (const ResolvedVote& v : votes) {
      grouped[{v.pair.a, v.pair.b, static_cast<int>(v.outcome)}] += v.weight;
    }
    groups.reserve(grouped.size());
    for (const auto& [key, weight] : grouped) {
      groups.push_back({{std::get<0>(key), std::get<1>(key)},
                        static_cast<Outcome>(std::get<2>(key)), weight});
    }
  }

  // The optimizer sees the objective scaled by 1/(total weight), so the
  // gradient tolerance is per-record rather than growing with N; the argmin
  // and the penalty's relative strength are unchanged.
  double total_weight = 0.0;
  for (const VoteGroup& g : groups) total_weight += g.weight;
  const double inv_weight = 1.0 / total_weight;

  auto objective = [&](const std::vector<double>& x,
                       std::vector<double>& grad) -> double {
    std::fill(grad.begin(), grad.end(), 0.0);
    const Leaderboard lb = params_to_leaderboard(kind, m, x);
    double nll = 0.0;
    for (const VoteGroup& g : groups) {
      const double ll = log_likelihood(lb, g.pair, g.outcome);
      if (!std::isfinite(ll)) return kInf;
      nll -= g.weight * ll;
      const std::vector<double> grad_ll =
          log_likelihood_gradient(lb, g.pair, g.outcome);
      grad[g.pair.a] -= g.weight * grad_ll[g.pair.a];
      grad[g.pair.b] -= g.weight * grad_ll[g.pair.b];
      if (dim > m) grad[m] -= g.weight * grad_ll[m];
    }
    if (kind == ModelKind::kGroundedRaoKupper) {
      grad[m] *= sigmoid(x[m]);  // chain rule through lambda = 1+softplus(u)
    }
    for (std::size_t i = 0; i < penalized; ++i) {
      nll += 0.5 * l2 * x[i] * x[i];
      grad[i] += l2 * x[i];
    }
    for (double& g : grad) g *= inv_weight;
    return nll * inv_weight;
  };

  LbfgsOptions options;
  options.max_iters = config.max_iters;
  options.grad_tolerance = config.grad_tolerance;
  const LbfgsResult result = lbfgs_minimize(objective, std::move(x0), options);

  report.iterations = result.iterations;
  report.converged = result.converged;
  report.leaderboard =
      anchor_leaderboard(params_to_leaderboard(kind, m, result.x),
                         config.anchor, catalog.models());

  // Data NLL at the solution, without the penalty term.
  double nll = 0.0;
  for (const ResolvedVote& v : votes) {
    nll -= v.weight * log_likelihood(report.leaderboard, v.pair, v.outcome);
  }
  report.final_nll = nll;
  return report;
}

Leaderboard fit_bt_soft_labels(
    std::size_t num_models,
    const std::vector<SoftPairObservation>& observations,
    const FitConfig& config, const std::vector<std::string>& model_names) {
  if (observations.empty()) {
    throw DataError("fit_bt_soft_labels: no observations");
  }
  const std::size_t m = num_models;
  for (const SoftPairObservation& o : observations) {
    if (o.pair.a >= m || o.pair.b >= m || o.pair.a == o.pair.b) {
      throw DataError("fit_bt_soft_labels: invalid pair");
    }
    if (!(o.soft_label >= 0.0 && o.soft_label <= 1.0)) {
      throw DataError("fit_bt_soft_labels: soft label outside [0,1]");
    }
  }

  const double l2 = config.l2_regularization;
  auto objective = [&](const std::vector<double>& x,
                       std::vector<double>& grad) -> double {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (const SoftPairObservation& o : observations) {
      const double s = x[o.pair.b] - x[o.pair.a];
      loss += o.weight * bce_from_logit(s, o.soft_label);
      const double delta = o.weight * (sigmoid(s) - o.soft_label);
      grad[o.pair.b] += delta;
      grad[o.pair.a] -= delta;
    }
    for (std::size_t i = 0; i < m; ++i) {
      loss += 0.5 * l2 * x[i] * x[i];
      grad[i] += l2 * x[i];
    }
    return loss;
  };

  LbfgsOptions options;
  options.max_iters = config.max_iters;
  options.grad_tolerance = config.grad_tolerance;
  const LbfgsResult result =
      lbfgs_minimize(objective, std::vector<double>(m, 0.0), options);
  return anchor_leaderboard(Leaderboard::bt(result.x), config.anchor,
                            model_names);
}

double nll_on_dataset(const CoefficientProvider& provider,
                      const ModelCatalog& catalog,
                      const std::vector<PreferenceRecord>& records) {
  if (records.empty()) throw DataError("nll_on_dataset: no records");
  if (provider.num_models() != catalog.size()) {
    throw DataError("nll_on_dataset: provider dimension mismatch");
  }
  double total = 0.0;
  double total_weight = 0.0;
  for (const PreferenceRecord& r : records) {
    const ResolvedVote v = resolve(catalog, r);
    if (!outcome_supported(provider.kind(), v.outcome)) {
      throw InvalidParameterError("nll_on_dataset: outcome '" +
                                  to_string(v.outcome) +
                                  "' not supported by provider kind");
    }
    const Leaderboard lb = provider.evaluate(r.prompt);
    total -= v.weight * log_likelihood(lb, v.pair, v.outcome);
    total_weight += v.weight;
  }
  return total / total_weight;
}

TrainResult train_provider(const ModelCatalog& catalog,
                           const std::vector<PreferenceRecord>& records,
                           FeatureLinearProvider provider,
                           const TrainConfig& config) {
  if (records.empty()) throw DataError("train_provider: no records");
  if (provider.num_models() != catalog.size()) {
    throw DataError("train_provider: provider dimension mismatch");
  }
  if (config.batch_size == 0) throw DataError("train_provider: batch size 0");

  struct Example {
    std::vector<FeatureEntry> features;
    ModelPair pair;
    Outcome outcome;
    double weight;
  };
  std::vector<Example> examples;
  examples.reserve(records.size());
  for (const PreferenceRecord& r : records) {
    const ResolvedVote v = resolve(catalog, r);
    if (!outcome_supported(provider.kind(), v.outcome)) {
      throw InvalidParameterError("train_provider: outcome '" +
                                  to_string(v.outcome) +
                                  "' not supported by provider kind");
    }
    examples.push_back({provider.featurizer().featurize(r.prompt.text), v.pair,
                        v.outcome, v.weight});
  }

  const ModelKind kind = provider.kind();
  const std::size_t m = provider.num_models();
  const std::size_t outputs = provider.num_outputs();

  Rng rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{std::move(provider), {}};
  std::vector<double>& w = result.provider.mutable_weights();

  // The log-likelihood gradient touches at most three output columns per
  // example, so minibatch updates are accumulated as sparse cell deltas and
  // applied after the batch.
  struct CellDelta {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };
  std::vector<CellDelta> updates;
  std::vector<double> raw(outputs, 0.0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      const double batch_n = static_cast<double>(end - start);
      double batch_loss = 0.0;
      updates.clear();

      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = examples[order[k]];
        std::fill(raw.begin(), raw.end(), 0.0);
        for (const FeatureEntry& f : ex.features) {
          const double* row = &w[std::size_t{f.index} * outputs];
          for (std::size_t c = 0; c < outputs; ++c) raw[c] += f.value * row[c];
        }
        Leaderboard lb;
        switch (kind) {
          case ModelKind::kBradleyTerry:
            lb = Leaderboard::bt({raw.begin(), raw.begin() + m});
            break;
          case ModelKind::kRaoKupper:
            lb = Leaderboard::rk({raw.begin(), raw.begin() + m}, raw[m]);
            break;
          case ModelKind::kGroundedRaoKupper:
            lb = Leaderboard::grounded_rk({raw.begin(), raw.begin() + m},
                                          1.0 + softplus(raw[m]));
            break;
        }
        const double ll = log_likelihood(lb, ex.pair, ex.outcome);
        batch_loss -= ex.weight * ll;
        std::vector<double> g =
            log_likelihood_gradient(lb, ex.pair, ex.outcome);
        if (kind == ModelKind::kGroundedRaoKupper) g[m] *= sigmoid(raw[m]);
        const auto col_a = static_cast<std::uint32_t>(ex.pair.a);
        const auto col_b = static_cast<std::uint32_t>(ex.pair.b);
        for (const FeatureEntry& f : ex.features) {
          const double scale = ex.weight * f.value / batch_n;
          updates.push_back({f.index, col_a, scale * g[ex.pair.a]});
          updates.push_back({f.index, col_b, scale * g[ex.pair.b]});
          if (outputs > m) {
            updates.push_back({f.index, static_cast<std::uint32_t>(m),
                               scale * g[m]});
          }
        }
      }

      batch_loss /= batch_n;
      if (!std::isfinite(batch_loss) || std::abs(batch_loss) > 1e100) {
        throw DataError("train_provider: loss diverged at step " +
                        std::to_string(result.loss_history.size()) +
                        " (batch loss " + std::to_string(batch_loss) + ")");
      }
      result.loss_history.push_back(batch_loss);

      for (const CellDelta& u : updates) {
        w[std::size_t{u.row} * outputs + u.col] +=
            config.learning_rate * u.value;
      }
      if (config.l2_regularization > 0.0) {
        const double decay =
            1.0 - config.learning_rate * config.l2_regularization;
        for (double& value : w) value *= decay;
      }
    }
  }
  return result;
}

}  // namespace promptlb
