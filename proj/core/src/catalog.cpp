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

#include "promptlb/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promptlb/errors.hpp"

namespace promptlb {

using nlohmann::json;

double expected_cost(const CostInputs& inputs) {
  if (!(inputs.output_cost_per_token >= 0.0) ||
      !(inputs.mean_output_tokens >= 0.0) ||
      !std::isfinite(inputs.output_cost_per_token) ||
      !std::isfinite(inputs.mean_output_tokens)) {
    throw DataError("expected_cost: inputs must be finite and nonnegative");
  }
  return inputs.output_cost_per_token * inputs.mean_output_tokens;
}

ModelCatalog::ModelCatalog(std::vector<std::string> models,
                           std::vector<double> costs,
                           std::vector<double> opponent_dist)
    : models_(std::move(models)),
      costs_(std::move(costs)),
      opponent_dist_(std::move(opponent_dist)) {
  if (models_.empty()) throw DataError("catalog: no models");
  if (costs_.size() != models_.size()) {
    throw DataError("catalog: costs size does not match models");
  }
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i].empty()) throw DataError("catalog: empty model name");
    if (!index_.emplace(models_[i], i).second) {
      throw DataError("catalog: duplicate model name '" + models_[i] + "'");
    }
    if (!std::isfinite(costs_[i]) || costs_[i] < 0.0) {
      throw DataError("catalog: cost of '" + models_[i] +
                      "' must be finite and >= 0");
    }
  }
  if (opponent_dist_.empty()) {
    opponent_dist_.assign(models_.size(), 1.0 / models_.size());
  } else {
    if (opponent_dist_.size() != models_.size()) {
      throw DataError("catalog: opponent distribution size mismatch");
    }
    double sum = 0.0;
    for (double w : opponent_dist_) {
      if (!std::isfinite(w) || w < 0.0) {
        throw DataError("catalog: opponent weights must be >= 0");
      }
      sum += w;
    }
    // A few ulps of headroom so sums landing exactly on the documented
    // 1e-9 boundary are accepted.
    if (std::abs(sum - 1.0) > 1e-9 + 1e-15) {
      throw DataError("catalog: opponent weights must sum to 1 within 1e-9");
    }
    for (double& w : opponent_dist_) w /= sum;
  }
}

ModelCatalog ModelCatalog::with_default_costs(
    std::vector<std::string> models) {
  std::vector<double> costs(models.size(), 1.0);
  return ModelCatalog(std::move(models), std::move(costs));
}

ModelCatalog ModelCatalog::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("catalog: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("models") ||
      !doc["models"].is_array()) {
    throw DataError("catalog: expected {\"models\": [...]}");
  }
  std::vector<std::string> names;
  std::vector<double> costs;
  std::vector<double> q;
  std::vector<bool> has_weight;
  for (const auto& entry : doc["models"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string()) {
      throw DataError("catalog: each model needs a string \"name\"");
    }
    names.push_back(entry["name"].get<std::string>());
    if (!entry.contains("cost") || !entry["cost"].is_number()) {
      throw DataError("catalog: model '" + names.back() +
                      "' needs a numeric \"cost\"");
    }
    costs.push_back(entry["cost"].get<double>());
    has_weight.push_back(entry.contains("opponent_weight"));
    q.push_back(has_weight.back() ? entry["opponent_weight"].get<double>()
                                  : 0.0);
  }
  const bool any_weight =
      std::any_of(has_weight.begin(), has_weight.end(), [](bool b) { return b; });
  if (any_weight) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (!has_weight[i]) {
        throw DataError(
            "catalog: opponent_weight must be given for all models or none "
            "(missing for '" + names[i] + "')");
      }
    }
  } else {
    q.clear();
  }
  return ModelCatalog(std::move(names), std::move(costs), std::move(q));
}

ModelCatalog ModelCatalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("catalog: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string ModelCatalog::to_json_text() const {
  json models = json::array();
  for (std::size_t i = 0; i < models_.size(); ++i) {
    models.push_back({{"name", models_[i]},
                      {"cost", costs_[i]},
                      {"opponent_weight", opponent_dist_[i]}});
  }
  return json{{"models", models}}.dump();
}

void ModelCatalog::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("catalog: cannot write '" + path + "'");
  out << to_json_text();
}

std::size_t ModelCatalog::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw DataError("catalog: unknown model '" + name + "'");
  }
  return it->second;
}

std::optional<std::size_t> ModelCatalog::find(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double ModelCatalog::min_cost() const {
  return *std::min_element(costs_.begin(), costs_.end());
}

}  // namespace promptlb
