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

#ifndef PROMPTLB_ANALYSIS_HPP_
#define PROMPTLB_ANALYSIS_HPP_

#include <map>
#include <string>
#include <vector>

#include "promptlb/aggregation.hpp"
#include "promptlb/catalog.hpp"
#include "promptlb/estimation.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"

namespace promptlb {

struct CategoryLeaderboards {
  std::map<std::string, Leaderboard> by_category;
  std::vector<std::size_t> prompt_counts;  // aligned with map iteration order
  std::size_t skipped_prompts = 0;  // lacked a category at this level
};

// Groups prompts by category_path[level] and aggregates each group over its
// uniform prompt distribution.
CategoryLeaderboards category_leaderboards(const CoefficientProvider& provider,
                                           const std::vector<Prompt>& prompts,
                                           std::size_t level,
                                           const FitConfig& config = {});

// sigmoid(theta_m - theta_ref) per model; the reference's own entry is 0.5.
std::vector<double> win_rate_vs_reference(const Leaderboard& bt_lb,
                                          std::size_t reference_index);

// Per-model sigmoid(beta_m) for a grounded RK leaderboard: the probability
// the model beats the fictitious baseline, a signal of absolute reliability.
std::vector<double> reliability_scores(const Leaderboard& grk_lb);

struct RegressionFlag {
  std::string category;
  std::string model;
  double win_rate = 0.0;  // vs reference, < 0.5 when flagged
};

struct CategoryReport {
  std::string category;
  Leaderboard leaderboard;  // BT aggregate of the category
  std::size_t prompt_count = 0;
  std::vector<double> win_rate_vs_reference;  // per model of interest
  std::vector<double> reliability;  // per model of interest; grounded RK only
};

struct RegressionReport {
  std::string reference;
  std::vector<std::string> models_of_interest;
  std::vector<CategoryReport> categories;  // sorted by label
  std::vector<RegressionFlag> flags;       // candidate worse than reference
  std::size_t skipped_prompts = 0;

  std::string render_text() const;
};

// Per-category win rates of the models of interest against a reference
// model; categories where a candidate's win rate drops below 0.5 are flagged
// as regression risks. With a grounded RK provider the report also carries
// reliability scores from the category-averaged grounded coefficients.
RegressionReport regression_report(const CoefficientProvider& provider,
                                   const ModelCatalog& catalog,
                                   const std::vector<Prompt>& prompts,
                                   const std::vector<std::string>& models_of_interest,
                                   const std::string& reference,
                                   std::size_t level,
                                   const FitConfig& config = {});

}  // namespace promptlb

#endif  // PROMPTLB_ANALYSIS_HPP_
