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

#include <doctest.h>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"
#include "promptlb/simulation.hpp"
#include "test_util.hpp"

using namespace promptlb;
using namespace promptlb::testing;

namespace {

PreferenceRecord vote(const std::string& a, const std::string& b,
                      Outcome outcome, double weight = 1.0) {
  PreferenceRecord r;
  r.prompt.text = "p";
  r.model_a = a;
  r.model_b = b;
  r.outcome = outcome;
  r.weight = weight;
  return r;
}

}  // namespace

TEST_CASE("two-model BT fit recovers the closed-form MLE") {
  const ModelCatalog catalog = make_catalog(2);
  // A beats B three times, B beats A once: gap = ln 3, p_hat = 3/4.
  const std::vector<PreferenceRecord> records = {
      vote("m0", "m1", Outcome::kWinA), vote("m0", "m1", Outcome::kWinA),
      vote("m0", "m1", Outcome::kWinA), vote("m0", "m1", Outcome::kWinB)};
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry);

  const double gap =
      report.leaderboard.coefficients[0] - report.leaderboard.coefficients[1];
  CHECK(gap == doctest::Approx(1.0986122886681098).epsilon(1e-6));
  CHECK(report.final_nll ==
        doctest::Approx(2.2493405784752334).epsilon(1e-9));
  CHECK(report.converged);
  CHECK(report.l2_used == doctest::Approx(1e-6));  // < 5 comparisons each

  // Sum-zero anchor.
  CHECK(report.leaderboard.coefficients[0] +
            report.leaderboard.coefficients[1] ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("balanced outcomes give a flat leaderboard") {
  const ModelCatalog catalog = make_catalog(3);
  std::vector<PreferenceRecord> records;
  for (const auto& [a, b] : {std::pair{"m0", "m1"}, {"m1", "m2"}, {"m0", "m2"}}) {
    for (int i = 0; i < 5; ++i) {
      records.push_back(vote(a, b, Outcome::kWinA));
      records.push_back(vote(a, b, Outcome::kWinB));
    }
  }
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry);
  for (double c : report.leaderboard.coefficients) {
    CHECK(c == doctest::Approx(0.0).epsilon(1e-8));
  }
}

TEST_CASE("weighted records match duplicated records") {
  const ModelCatalog catalog = make_catalog(2);
  const std::vector<PreferenceRecord> weighted = {
      vote("m0", "m1", Outcome::kWinA, 3.0), vote("m0", "m1", Outcome::kWinB)};
  const std::vector<PreferenceRecord> duplicated = {
      vote("m0", "m1", Outcome::kWinA), vote("m0", "m1", Outcome::kWinA),
      vote("m0", "m1", Outcome::kWinA), vote("m0", "m1", Outcome::kWinB)};
  const FitReport a =
      fit_marginal(catalog, weighted, ModelKind::kBradleyTerry);
  const FitReport b =
      fit_marginal(catalog, duplicated, ModelKind::kBradleyTerry);
  CHECK(max_abs_diff(a.leaderboard.coefficients, b.leaderboard.coefficients) <
        1e-8);
}

TEST_CASE("disconnected comparison graph raises with component names") {
  const ModelCatalog catalog = make_catalog(4);
  const std::vector<PreferenceRecord> records = {
      vote("m0", "m1", Outcome::kWinA), vote("m2", "m3", Outcome::kWinB)};
  try {
    (void)fit_marginal(catalog, records, ModelKind::kBradleyTerry);
    FAIL("expected NotIdentifiableError");
  } catch (const NotIdentifiableError& e) {
    const std::string message = e.what();
    CHECK(message.find("m0") != std::string::npos);
    CHECK(message.find("m2") != std::string::npos);
  }
  // Regularization restores identifiability (toward zero).
  FitConfig config;
  config.l2_regularization = 1e-3;
  CHECK_NOTHROW(
      (void)fit_marginal(catalog, records, ModelKind::kBradleyTerry, config));
  // Grounded RK needs no connectivity.
  CHECK_NOTHROW((void)fit_marginal(catalog, records,
                                   ModelKind::kGroundedRaoKupper));
}

TEST_CASE("ties are skipped under BT with a warning counter") {
  const ModelCatalog catalog = make_catalog(2);
  std::vector<PreferenceRecord> records;
  for (int i = 0; i < 6; ++i) records.push_back(vote("m0", "m1", Outcome::kWinA));
  for (int i = 0; i < 6; ++i) records.push_back(vote("m0", "m1", Outcome::kWinB));
  records.push_back(vote("m0", "m1", Outcome::kTie));
  records.push_back(vote("m0", "m1", Outcome::kBothBad));
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry);
  CHECK(report.skipped_records == 2);
}

TEST_CASE("relabeling models permutes the fit") {
  Rng rng(21);
  const ModelCatalog catalog = make_catalog(4);
  const Leaderboard truth = Leaderboard::bt({0.8, -0.3, 0.1, -0.6});
  const std::vector<PreferenceRecord> records =
      sample_bt_votes(catalog, truth, 3000, rng);

  // Permutation: reverse the model names in every record.
  auto rename = [](const std::string& name) {
    return "m" + std::to_string(3 - (name[1] - '0'));
  };
  std::vector<PreferenceRecord> permuted = records;
  for (PreferenceRecord& r : permuted) {
    r.model_a = rename(r.model_a);
    r.model_b = rename(r.model_b);
  }
  const FitReport base =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry);
  const FitReport perm =
      fit_marginal(catalog, permuted, ModelKind::kBradleyTerry);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(base.leaderboard.coefficients[i] ==
          doctest::Approx(perm.leaderboard.coefficients[3 - i]).epsilon(1e-6));
  }
}

TEST_CASE("swapping sides and outcomes leaves the fit unchanged") {
  Rng rng(22);
  const ModelCatalog catalog = make_catalog(3);
  const Leaderboard truth = Leaderboard::bt({0.5, 0.0, -0.5});
  const std::vector<PreferenceRecord> records =
      sample_bt_votes(catalog, truth, 2000, rng);
  std::vector<PreferenceRecord> swapped = records;
  for (PreferenceRecord& r : swapped) {
    std::swap(r.model_a, r.model_b);
    r.outcome =
        r.outcome == Outcome::kWinA ? Outcome::kWinB : Outcome::kWinA;
  }
  const FitReport a = fit_marginal(catalog, records, ModelKind::kBradleyTerry);
  const FitReport b = fit_marginal(catalog, swapped, ModelKind::kBradleyTerry);
  CHECK(max_abs_diff(a.leaderboard.coefficients, b.leaderboard.coefficients) <
        1e-7);
}

TEST_CASE("rk fit recovers strengths and the tie coefficient") {
  Rng rng(23);
  const ModelCatalog catalog = make_catalog(3);
  const Leaderboard truth = Leaderboard::rk({0.7, 0.0, -0.7}, 0.8);
  std::vector<PreferenceRecord> records;
  for (int i = 0; i < 30000; ++i) {
    const std::size_t a = rng.uniform_index(3);
    std::size_t b = rng.uniform_index(2);
    if (b >= a) ++b;
    const RkProbs p = rk_probs({truth.coefficients, truth.eta}, {a, b});
    const std::size_t draw = rng.categorical({p.win_a, p.win_b, p.tie});
    PreferenceRecord r;
    r.prompt.text = "p";
    r.model_a = catalog.name(a);
    r.model_b = catalog.name(b);
    r.outcome = draw == 0   ? Outcome::kWinA
                : draw == 1 ? Outcome::kWinB
                            : Outcome::kTie;
    records.push_back(std::move(r));
  }
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kRaoKupper);
  CHECK(report.converged);
  CHECK(max_abs_diff(report.leaderboard.coefficients,
                     sum_zero(truth.coefficients)) < 0.05);
  CHECK(report.leaderboard.eta == doctest::Approx(truth.eta).epsilon(0.08));
}

TEST_CASE("grounded rk fit is consistent on synthetic votes") {
  Rng rng(24);
  const ModelCatalog catalog = make_catalog(3);
  const Leaderboard truth = Leaderboard::grounded_rk({1.0, 0.0, -1.0}, 1.5);
  std::vector<PreferenceRecord> records;
  records.reserve(200000);
  for (int i = 0; i < 200000; ++i) {
    const std::size_t a = rng.uniform_index(3);
    std::size_t b = rng.uniform_index(2);
    if (b >= a) ++b;
    const GrkProbs p =
        grk_probs({truth.coefficients, truth.lambda}, {a, b});
    const std::size_t draw =
        rng.categorical({p.win_a, p.win_b, p.tie, p.both_bad});
    PreferenceRecord r;
    r.prompt.text = "p";
    r.model_a = catalog.name(a);
    r.model_b = catalog.name(b);
    r.outcome = draw == 0   ? Outcome::kWinA
                : draw == 1 ? Outcome::kWinB
                : draw == 2 ? Outcome::kTie
                            : Outcome::kBothBad;
    records.push_back(std::move(r));
  }
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kGroundedRaoKupper);
  CHECK(report.converged);
  CHECK(report.leaderboard.anchor == "none");  // grounded: absolute scale
  CHECK(max_abs_diff(report.leaderboard.coefficients, truth.coefficients) <
        0.05);
  CHECK(std::abs(report.leaderboard.lambda - truth.lambda) < 0.05);
}

TEST_CASE("train_provider aborts with a diagnostic when the loss diverges") {
  const ModelCatalog catalog = make_catalog(2);
  // Contradictory labels on one prompt with an absurd learning rate: the
  // first misaligned record after a step sees a ~1e120 loss.
  std::vector<PreferenceRecord> records;
  for (int i = 0; i < 50; ++i) {
    records.push_back(vote("m0", "m1",
                           i % 2 ? Outcome::kWinA : Outcome::kWinB));
  }
  TrainConfig config;
  config.learning_rate = 1e120;
  config.batch_size = 1;
  config.epochs = 2;
  CHECK_THROWS_AS(
      (void)train_provider(catalog, records,
                           FeatureLinearProvider(ModelKind::kBradleyTerry, 2,
                                                 Featurizer(1 << 10)),
                           config),
      DataError);
}

TEST_CASE("strictly convex fits agree across initializations") {
  // With L2 > 0 the BT objective is strictly convex, so fits started from
  // the zero point and from randomized points must land on the same optimum.
  Rng rng(25);
  const ModelCatalog catalog = make_catalog(4);
  const Leaderboard truth = Leaderboard::bt({1.0, 0.3, -0.3, -1.0});
  const std::vector<PreferenceRecord> records =
      sample_bt_votes(catalog, truth, 4000, rng);
  FitConfig config;
  config.l2_regularization = 1e-4;
  const FitReport zero_start =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry, config);
  for (std::uint64_t seed : {42u, 43u, 44u}) {
    config.seed = seed;
    const FitReport randomized =
        fit_marginal(catalog, records, ModelKind::kBradleyTerry, config);
    CHECK(max_abs_diff(zero_start.leaderboard.coefficients,
                       randomized.leaderboard.coefficients) < 1e-6);
  }
}

TEST_CASE("fix-model anchor zeroes the reference") {
  Rng rng(26);
  const ModelCatalog catalog = make_catalog(3);
  const std::vector<PreferenceRecord> records = sample_bt_votes(
      catalog, Leaderboard::bt({0.4, 0.0, -0.4}), 2000, rng);
  FitConfig config;
  config.anchor = Anchor::fix_model("m1");
  const FitReport report =
      fit_marginal(catalog, records, ModelKind::kBradleyTerry, config);
  CHECK(report.leaderboard.coefficients[1] == 0.0);
  CHECK(report.leaderboard.anchor == "fixed:m1");
}

TEST_CASE("nll_on_dataset baselines") {
  const ModelCatalog catalog = make_catalog(2);
  std::vector<PreferenceRecord> records;
  for (int i = 0; i < 10; ++i) {
    records.push_back(vote("m0", "m1",
                           i % 3 == 0 ? Outcome::kWinB : Outcome::kWinA));
  }

  SUBCASE("zero-weight linear provider scores ln 2") {
    const FeatureLinearProvider provider(ModelKind::kBradleyTerry, 2,
                                         Featurizer(1 << 8));
    CHECK(nll_on_dataset(provider, catalog, records) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));
  }

  SUBCASE("fitted marginal beats random constants on its training set") {
    const FitReport report =
        fit_marginal(catalog, records, ModelKind::kBradleyTerry);
    const double fitted_nll =
        nll_on_dataset(*constant_provider(report.leaderboard), catalog,
                       records);
    Rng rng(30);
    for (int i = 0; i < 100; ++i) {
      const Leaderboard random_lb =
          random_leaderboard(ModelKind::kBradleyTerry, 2, rng, 3.0);
      const double random_nll =
          nll_on_dataset(*constant_provider(random_lb), catalog, records);
      CHECK(fitted_nll <= random_nll + 1e-9);
    }
  }

  SUBCASE("aligned table provider reaches near-zero NLL") {
    std::map<std::string, Leaderboard> entries;
    std::vector<PreferenceRecord> labeled;
    for (int i = 0; i < 10; ++i) {
      PreferenceRecord r = records[i];
      r.prompt.id = "p" + std::to_string(i);
      entries[r.prompt.id] = Leaderboard::bt(
          r.outcome == Outcome::kWinB ? std::vector<double>{-10.0, 10.0}
                                      : std::vector<double>{10.0, -10.0});
      labeled.push_back(std::move(r));
    }
    const ProviderPtr provider = table_provider(entries);
    CHECK(nll_on_dataset(*provider, catalog, labeled) < 1e-4);
  }

  SUBCASE("unsupported outcome raises") {
    const FeatureLinearProvider provider(ModelKind::kBradleyTerry, 2,
                                         Featurizer(1 << 8));
    std::vector<PreferenceRecord> with_tie = records;
    with_tie.push_back(vote("m0", "m1", Outcome::kTie));
    CHECK_THROWS_AS((void)nll_on_dataset(provider, catalog, with_tie),
                    InvalidParameterError);
  }
}

TEST_CASE("train_provider learns a prompt-conditional rule") {
  // Prompts mentioning "math" always favor m0, the rest favor m1; 35/65 mix
  // so the marginal leaderboard is informative but prompt-blind.
  Rng rng(31);
  const ModelCatalog catalog = make_catalog(2);
  auto make_records = [&](std::size_t n) {
    std::vector<PreferenceRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
      const bool math = rng.bernoulli(0.35);
      PreferenceRecord r;
      r.prompt.text = math ? "math question " + std::to_string(i)
                           : "cooking question " + std::to_string(i);
      r.model_a = "m0";
      r.model_b = "m1";
      r.outcome = math ? Outcome::kWinA : Outcome::kWinB;
      records.push_back(std::move(r));
    }
    return records;
  };
  const std::vector<PreferenceRecord> train = make_records(4000);
  const std::vector<PreferenceRecord> held_out = make_records(1000);

  TrainConfig config;
  config.epochs = 3;
  config.seed = 7;
  const TrainResult result =
      train_provider(catalog, train,
                     FeatureLinearProvider(ModelKind::kBradleyTerry, 2,
                                           Featurizer(1 << 14)),
                     config);

  // Loss fell below the uniform baseline within the first epoch.
  const std::size_t steps_per_epoch = result.loss_history.size() / 3;
  double first_epoch_mean = 0.0;
  for (std::size_t i = 0; i < steps_per_epoch; ++i) {
    first_epoch_mean += result.loss_history[i];
  }
  first_epoch_mean /= static_cast<double>(steps_per_epoch);
  CHECK(first_epoch_mean < 0.6931471805599453);

  // >= 95% held-out routing accuracy under the argmax rule.
  std::size_t correct = 0;
  for (const PreferenceRecord& r : held_out) {
    const Leaderboard lb = result.provider.evaluate(r.prompt);
    const bool picks_m0 = lb.coefficients[0] > lb.coefficients[1];
    correct += picks_m0 == (r.outcome == Outcome::kWinA);
  }
  CHECK(static_cast<double>(correct) / held_out.size() >= 0.95);

  // Trained provider beats the marginal fit, which beats the coin flip.
  const FitReport marginal =
      fit_marginal(catalog, train, ModelKind::kBradleyTerry);
  const double trained_nll =
      nll_on_dataset(result.provider, catalog, held_out);
  const double marginal_nll = nll_on_dataset(
      *constant_provider(marginal.leaderboard), catalog, held_out);
  CHECK(trained_nll < marginal_nll);
  CHECK(marginal_nll < 0.6931471805599453);
}

TEST_CASE("train_provider is deterministic given the seed") {
  Rng rng(32);
  const ModelCatalog catalog = make_catalog(2);
  const std::vector<PreferenceRecord> records = sample_bt_votes(
      catalog, Leaderboard::bt({0.5, -0.5}), 500, rng);
  TrainConfig config;
  config.seed = 42;
  const TrainResult a =
      train_provider(catalog, records,
                     FeatureLinearProvider(ModelKind::kBradleyTerry, 2,
                                           Featurizer(1 << 12)),
                     config);
  const TrainResult b =
      train_provider(catalog, records,
                     FeatureLinearProvider(ModelKind::kBradleyTerry, 2,
                                           Featurizer(1 << 12)),
                     config);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.provider.weights() == b.provider.weights());
}
