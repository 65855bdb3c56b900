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

#ifndef PROMPTLB_CATALOG_HPP_
#define PROMPTLB_CATALOG_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace promptlb {

// Expected cost per query: output cost per token times expected output tokens.
struct CostInputs {
  double output_cost_per_token = 0.0;
  double mean_output_tokens = 0.0;
};

double expected_cost(const CostInputs& inputs);

// Immutable registry of models: names (whose position defines the index used
// by every coefficient vector), per-query costs, and the opponent sampling
// distribution q. Thread-safe by virtue of immutability after construction.
class ModelCatalog {
 public:
  // opponent_dist empty -> uniform. Validates: nonempty unique names, costs
  // finite and >= 0, q entries >= 0 summing to 1 within 1e-9 (then
  // renormalized exactly).
  ModelCatalog(std::vector<std::string> models, std::vector<double> costs,
               std::vector<double> opponent_dist = {});

  // Convenience: unit costs, uniform q.
  static ModelCatalog with_default_costs(std::vector<std::string> models);

  static ModelCatalog load(const std::string& path);
  static ModelCatalog from_json_text(const std::string& text);
  void save(const std::string& path) const;
  std::string to_json_text() const;

  std::size_t size() const { return models_.size(); }
  const std::vector<std::string>& models() const { return models_; }
  const std::vector<double>& costs() const { return costs_; }
  const std::vector<double>& opponent_dist() const { return opponent_dist_; }

  const std::string& name(std::size_t index) const { return models_.at(index); }
  double cost(std::size_t index) const { return costs_.at(index); }

  // Throws DataError for unknown names.
  std::size_t index_of(const std::string& name) const;
  std::optional<std::size_t> find(const std::string& name) const;

  double min_cost() const;

 private:
  std::vector<std::string> models_;
  std::vector<double> costs_;
  std::vector<double> opponent_dist_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace promptlb

#endif  // PROMPTLB_CATALOG_HPP_
