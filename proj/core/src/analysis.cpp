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

#include "promptlb/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

CategoryLeaderboards category_leaderboards(const CoefficientProvider& provider,
                                           const std::vector<Prompt>& prompts,
                                           std::size_t level,
                                           const FitConfig& config) {
  if (prompts.empty()) throw DataError("category_leaderboards: no prompts");

  std::map<std::string, std::vector<Prompt>> groups;
  CategoryLeaderboards out;
  for (const Prompt& prompt : prompts) {
    if (prompt.category_path.size() <= level) {
      ++out.skipped_prompts;
      continue;
    }
    groups[prompt.category_path[level]].push_back(prompt);
  }
  if (groups.empty()) {
    throw DataError("category_leaderboards: no prompt has a category at level " +
                    std::to_string(level));
  }
  for (auto& [label, group] : groups) {
    out.prompt_counts.push_back(group.size());
    out.by_category.emplace(
        label,
        aggregate(provider, PromptDistribution::uniform(std::move(group)),
                  config));
  }
  return out;
}

std::vector<double> win_rate_vs_reference(const Leaderboard& bt_lb,
                                          std::size_t reference_index) {
  if (reference_index >= bt_lb.num_models()) {
    throw DataError("win_rate_vs_reference: reference index out of range");
  }
  const double ref = bt_lb.coefficients[reference_index];
  std::vector<double> rates(bt_lb.num_models());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    rates[i] = sigmoid(bt_lb.coefficients[i] - ref);
  }
  return rates;
}

std::vector<double> reliability_scores(const Leaderboard& grk_lb) {
  if (grk_lb.kind != ModelKind::kGroundedRaoKupper) {
    throw DataError("reliability_scores: grounded RK leaderboard required");
  }
  std::vector<double> scores(grk_lb.num_models());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = sigmoid(grk_lb.coefficients[i]);
  }
  return scores;
}

RegressionReport regression_report(
    const CoefficientProvider& provider, const ModelCatalog& catalog,
    const std::vector<Prompt>& prompts,
    const std::vector<std::string>& models_of_interest,
    const std::string& reference, std::size_t level, const FitConfig& config) {
  if (provider.num_models() != catalog.size()) {
    throw DataError("regression_report: provider/catalog dimension mismatch");
  }
  const std::size_t ref_index = catalog.index_of(reference);
  std::vector<std::size_t> interest_indices;
  interest_indices.reserve(models_of_interest.size());
  for (const std::string& name : models_of_interest) {
    interest_indices.push_back(catalog.index_of(name));
  }

  RegressionReport report;
  report.reference = reference;
  report.models_of_interest = models_of_interest;

  std::map<std::string, std::vector<Prompt>> groups;
  for (const Prompt& prompt : prompts) {
    if (prompt.category_path.size() <= level) {
      ++report.skipped_prompts;
      continue;
    }
    groups[prompt.category_path[level]].push_back(prompt);
  }
  if (groups.empty()) {
    throw DataError("regression_report: no prompt has a category at level " +
                    std::to_string(level));
  }

  const bool grounded = provider.kind() == ModelKind::kGroundedRaoKupper;
  for (const auto& [label, group] : groups) {
    CategoryReport entry;
    entry.category = label;
    entry.prompt_count = group.size();
    const PromptDistribution q = PromptDistribution::uniform(group);
    entry.leaderboard = aggregate(provider, q, config);

    const std::vector<double> rates =
        win_rate_vs_reference(entry.leaderboard, ref_index);
    for (std::size_t k = 0; k < interest_indices.size(); ++k) {
      const double rate = rates[interest_indices[k]];
      entry.win_rate_vs_reference.push_back(rate);
      if (rate < 0.5 && interest_indices[k] != ref_index) {
        report.flags.push_back({label, models_of_interest[k], rate});
      }
    }

    if (grounded) {
      // Reliability from the category-averaged grounded coefficients.
      std::vector<double> mean_beta(catalog.size(), 0.0);
      double mean_lambda = 0.0;
      for (const Prompt& prompt : group) {
        const Leaderboard lb = provider.evaluate(prompt);
        for (std::size_t i = 0; i < mean_beta.size(); ++i) {
          mean_beta[i] += lb.coefficients[i];
        }
        mean_lambda += lb.lambda;
      }
      for (double& b : mean_beta) b /= static_cast<double>(group.size());
      mean_lambda /= static_cast<double>(group.size());
      const std::vector<double> scores = reliability_scores(
          Leaderboard::grounded_rk(std::move(mean_beta), mean_lambda));
      for (std::size_t index : interest_indices) {
        entry.reliability.push_back(scores[index]);
      }
    }
    report.categories.push_back(std::move(entry));
  }
  return report;
}

std::string RegressionReport::render_text() const {
  std::ostringstream out;
  out << "win rate vs " << reference << "\n";

  std::size_t label_width = 8;
  for (const CategoryReport& c : categories) {
    label_width = std::max(label_width, c.category.size());
  }
  out << std::string(label_width, ' ');
  for (const std::string& model : models_of_interest) {
    out << "  " << model;
  }
  out << "\n";

  char cell[32];
  for (const CategoryReport& c : categories) {
    out << c.category << std::string(label_width - c.category.size(), ' ');
    for (std::size_t k = 0; k < models_of_interest.size(); ++k) {
      const double pct = 100.0 * c.win_rate_vs_reference[k];
      const bool flagged = c.win_rate_vs_reference[k] < 0.5 &&
                           models_of_interest[k] != reference;
      std::snprintf(cell, sizeof(cell), "%5.1f%%%s", pct, flagged ? "!" : " ");
      out << "  " << cell
          << std::string(
                 models_of_interest[k].size() > 7
                     ? models_of_interest[k].size() - 7
                     : 0,
                 ' ');
    }
    out << "\n";
  }
  if (!flags.empty()) {
    out << "regression risks (win rate below 50% vs " << reference << "):\n";
    for (const RegressionFlag& flag : flags) {
      std::snprintf(cell, sizeof(cell), "%.1f%%", 100.0 * flag.win_rate);
      out << "  " << flag.model << " in " << flag.category << " (" << cell
          << ")\n";
    }
  }
  return out.str();
}

}  // namespace promptlb
