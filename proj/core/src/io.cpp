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

#include "promptlb/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promptlb/errors.hpp"
#include "promptlb/remote_provider.hpp"

namespace promptlb {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

json leaderboard_to_json_value(const Leaderboard& lb,
                               const std::vector<std::string>& models) {
  json doc;
  doc["kind"] = to_string(lb.kind);
  doc["models"] = models;
  doc["coefficients"] = lb.coefficients;
  if (lb.kind == ModelKind::kRaoKupper) doc["eta"] = lb.eta;
  if (lb.kind == ModelKind::kGroundedRaoKupper) doc["lambda"] = lb.lambda;
  doc["anchor"] = lb.anchor;
  return doc;
}

NamedLeaderboard leaderboard_from_json_value(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") ||
      !doc.contains("coefficients") || !doc["coefficients"].is_array()) {
    throw DataError("leaderboard: expected {\"kind\",\"coefficients\",...}");
  }
  NamedLeaderboard named;
  named.leaderboard.kind =
      model_kind_from_string(doc["kind"].get<std::string>());
  named.leaderboard.coefficients =
      doc["coefficients"].get<std::vector<double>>();
  if (named.leaderboard.coefficients.empty()) {
    throw DataError("leaderboard: no coefficients");
  }
  if (named.leaderboard.kind == ModelKind::kRaoKupper) {
    if (!doc.contains("eta")) throw DataError("leaderboard: rk needs eta");
    named.leaderboard.eta = doc["eta"].get<double>();
  }
  if (named.leaderboard.kind == ModelKind::kGroundedRaoKupper) {
    if (!doc.contains("lambda")) {
      throw DataError("leaderboard: grounded_rk needs lambda");
    }
    named.leaderboard.lambda = doc["lambda"].get<double>();
    if (named.leaderboard.lambda < 1.0) {
      throw DataError("leaderboard: lambda must be >= 1");
    }
  }
  if (doc.contains("anchor")) {
    named.leaderboard.anchor = doc["anchor"].get<std::string>();
  }
  if (doc.contains("models")) {
    named.models = doc["models"].get<std::vector<std::string>>();
    if (!named.models.empty() &&
        named.models.size() != named.leaderboard.coefficients.size()) {
      throw DataError("leaderboard: models/coefficients size mismatch");
    }
  }
  return named;
}

Outcome outcome_from_string(const std::string& name) {
  if (name == "model_a") return Outcome::kWinA;
  if (name == "model_b") return Outcome::kWinB;
  if (name == "tie") return Outcome::kTie;
  if (name == "tie_both_bad") return Outcome::kBothBad;
  throw DataError("unknown outcome '" + name + "'");
}

PreferenceRecord record_from_json_value(const json& doc) {
  if (!doc.is_object()) throw DataError("vote: expected an object");
  for (const char* field : {"prompt", "model_a", "model_b", "outcome"}) {
    if (!doc.contains(field) || !doc[field].is_string()) {
      throw DataError(std::string("vote: missing string field \"") + field +
                      "\"");
    }
  }
  PreferenceRecord record;
  record.prompt.text = doc["prompt"].get<std::string>();
  if (record.prompt.text.empty()) throw DataError("vote: empty prompt");
  if (doc.contains("prompt_id")) {
    record.prompt.id = doc["prompt_id"].get<std::string>();
  }
  if (doc.contains("category_path")) {
    record.prompt.category_path =
        doc["category_path"].get<std::vector<std::string>>();
  }
  record.model_a = doc["model_a"].get<std::string>();
  record.model_b = doc["model_b"].get<std::string>();
  if (record.model_a == record.model_b) {
    throw DataError("vote: model_a equals model_b");
  }
  record.outcome = outcome_from_string(doc["outcome"].get<std::string>());
  if (doc.contains("weight")) {
    record.weight = doc["weight"].get<double>();
    if (!(record.weight > 0.0)) throw DataError("vote: weight must be > 0");
  }
  return record;
}

Prompt prompt_from_json_value(const json& doc) {
  if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
    throw DataError("prompt: expected {\"text\": str, ...}");
  }
  Prompt prompt;
  prompt.text = doc["text"].get<std::string>();
  if (prompt.text.empty()) throw DataError("prompt: empty text");
  if (doc.contains("id")) prompt.id = doc["id"].get<std::string>();
  if (doc.contains("category_path")) {
    prompt.category_path = doc["category_path"].get<std::vector<std::string>>();
  }
  return prompt;
}

template <typename Fn>
void for_each_jsonl_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_number) +
                      ": invalid JSON: " + e.what());
    }
    try {
      fn(doc, line_number);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_number) + ": " + e.what());
    }
  }
}

}  // namespace

std::string leaderboard_to_json(const Leaderboard& lb,
                                const std::vector<std::string>& models) {
  if (!models.empty() && models.size() != lb.num_models()) {
    throw DataError("leaderboard: models/coefficients size mismatch");
  }
  return leaderboard_to_json_value(lb, models).dump();
}

NamedLeaderboard leaderboard_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("leaderboard: invalid JSON: ") + e.what());
  }
  return leaderboard_from_json_value(doc);
}

void save_leaderboard(const std::string& path, const Leaderboard& lb,
                      const std::vector<std::string>& models) {
  write_file(path, leaderboard_to_json(lb, models));
}

NamedLeaderboard load_leaderboard(const std::string& path) {
  return leaderboard_from_json(read_file(path));
}

std::string routing_decision_to_json(const RoutingDecision& decision) {
  json doc;
  doc["model"] = decision.model;
  doc["model_index"] = decision.model_index;
  doc["policy"] = decision.policy.pi;
  doc["predicted_win_rate"] = decision.policy.predicted_win_rate;
  doc["predicted_coefficient"] = decision.policy.predicted_coefficient;
  doc["expected_cost"] = decision.policy.expected_cost;
  return doc.dump();
}

std::vector<PreferenceRecord> votes_from_jsonl(const std::string& text) {
  std::vector<PreferenceRecord> records;
  for_each_jsonl_line(text, [&](const json& doc, std::size_t) {
    records.push_back(record_from_json_value(doc));
  });
  return records;
}

std::vector<PreferenceRecord> load_votes(const std::string& path) {
  return votes_from_jsonl(read_file(path));
}

void save_votes(const std::string& path,
                const std::vector<PreferenceRecord>& records) {
  std::ostringstream out;
  for (const PreferenceRecord& record : records) {
    json doc;
    doc["prompt"] = record.prompt.text;
    if (!record.prompt.id.empty()) doc["prompt_id"] = record.prompt.id;
    if (!record.prompt.category_path.empty()) {
      doc["category_path"] = record.prompt.category_path;
    }
    doc["model_a"] = record.model_a;
    doc["model_b"] = record.model_b;
    doc["outcome"] = to_string(record.outcome);
    if (record.weight != 1.0) doc["weight"] = record.weight;
    out << doc.dump() << "\n";
  }
  write_file(path, out.str());
}

VotesValidation validate_votes_file(const std::string& path) {
  VotesValidation result;
  std::ifstream in(path);
  if (!in) {
    result.ok = false;
    result.error = "cannot open '" + path + "'";
    return result;
  }
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      record_from_json_value(json::parse(line));
      ++result.records;
    } catch (const std::exception& e) {
      result.ok = false;
      result.first_bad_line = line_number;
      result.error = e.what();
      return result;
    }
  }
  return result;
}

std::vector<Prompt> load_prompts(const std::string& path) {
  std::vector<Prompt> prompts;
  for_each_jsonl_line(read_file(path), [&](const json& doc, std::size_t) {
    prompts.push_back(prompt_from_json_value(doc));
  });
  return prompts;
}

void save_prompts(const std::string& path, const std::vector<Prompt>& prompts) {
  std::ostringstream out;
  for (const Prompt& prompt : prompts) {
    json doc;
    if (!prompt.id.empty()) doc["id"] = prompt.id;
    doc["text"] = prompt.text;
    if (!prompt.category_path.empty()) {
      doc["category_path"] = prompt.category_path;
    }
    out << doc.dump() << "\n";
  }
  write_file(path, out.str());
}

void save_table_provider(const std::string& path,
                         const std::map<std::string, Leaderboard>& entries,
                         const std::optional<Leaderboard>& fallback) {
  std::ostringstream out;
  auto line = [&](const std::string& id, const Leaderboard& lb) {
    json doc;
    doc["id"] = id;
    doc["kind"] = to_string(lb.kind);
    doc["coefficients"] = lb.coefficients;
    if (lb.kind == ModelKind::kRaoKupper) doc["eta"] = lb.eta;
    if (lb.kind == ModelKind::kGroundedRaoKupper) doc["lambda"] = lb.lambda;
    out << doc.dump() << "\n";
  };
  if (fallback) line("*", *fallback);
  for (const auto& [id, lb] : entries) line(id, lb);
  write_file(path, out.str());
}

ProviderPtr load_table_provider(const std::string& path) {
  std::map<std::string, Leaderboard> entries;
  std::optional<Leaderboard> fallback;
  for_each_jsonl_line(read_file(path), [&](const json& doc, std::size_t) {
    if (!doc.contains("id") || !doc["id"].is_string()) {
      throw DataError("table entry: missing \"id\"");
    }
    const std::string id = doc["id"].get<std::string>();
    Leaderboard lb = leaderboard_from_json_value(doc).leaderboard;
    if (id == "*") {
      fallback = std::move(lb);
    } else {
      entries[id] = std::move(lb);
    }
  });
  return table_provider(std::move(entries), std::move(fallback));
}

void save_category_provider(
    const std::string& path,
    const std::map<std::string, Leaderboard>& per_category, std::size_t level,
    const std::optional<Leaderboard>& fallback) {
  json categories = json::object();
  for (const auto& [label, lb] : per_category) {
    categories[label] = leaderboard_to_json_value(lb, {});
  }
  json doc;
  doc["level"] = level;
  doc["categories"] = categories;
  if (fallback) doc["fallback"] = leaderboard_to_json_value(*fallback, {});
  write_file(path, doc.dump());
}

ProviderPtr load_category_provider(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(std::string("category provider: invalid JSON: ") +
                    e.what());
  }
  if (!doc.is_object() || !doc.contains("categories") ||
      !doc["categories"].is_object()) {
    throw DataError("category provider: expected {\"level\",\"categories\"}");
  }
  const std::size_t level =
      doc.contains("level") ? doc["level"].get<std::size_t>() : 0;
  std::map<std::string, Leaderboard> per_category;
  for (const auto& [label, value] : doc["categories"].items()) {
    per_category[label] = leaderboard_from_json_value(value).leaderboard;
  }
  std::optional<Leaderboard> fallback;
  if (doc.contains("fallback")) {
    fallback = leaderboard_from_json_value(doc["fallback"]).leaderboard;
  }
  return category_provider(std::move(per_category), level, std::move(fallback));
}

void save_linear_provider(const std::string& path,
                          const FeatureLinearProvider& provider,
                          const std::vector<std::string>& models) {
  json entries = json::array();
  const std::vector<double>& w = provider.weights();
  const std::size_t outputs = provider.num_outputs();
  for (std::size_t row = 0; row < provider.featurizer().dim(); ++row) {
    for (std::size_t col = 0; col < outputs; ++col) {
      const double value = w[row * outputs + col];
      if (value != 0.0) entries.push_back({row, col, value});
    }
  }
  json doc;
  doc["kind"] = to_string(provider.kind());
  doc["dim"] = provider.featurizer().dim();
  doc["num_models"] = provider.num_models();
  if (!models.empty()) doc["models"] = models;
  doc["entries"] = std::move(entries);
  write_file(path, doc.dump());
}

NamedLinearProvider load_linear_provider(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(std::string("linear provider: invalid JSON: ") + e.what());
  }
  for (const char* field : {"kind", "dim", "num_models", "entries"}) {
    if (!doc.contains(field)) {
      throw DataError(std::string("linear provider: missing \"") + field +
                      "\"");
    }
  }
  const ModelKind kind = model_kind_from_string(doc["kind"].get<std::string>());
  const std::size_t dim = doc["dim"].get<std::size_t>();
  const std::size_t num_models = doc["num_models"].get<std::size_t>();
  FeatureLinearProvider provider(kind, num_models, Featurizer(dim));
  std::vector<double>& w = provider.mutable_weights();
  const std::size_t outputs = provider.num_outputs();
  for (const auto& entry : doc["entries"]) {
    if (!entry.is_array() || entry.size() != 3) {
      throw DataError("linear provider: entries must be [row, col, value]");
    }
    const std::size_t row = entry[0].get<std::size_t>();
    const std::size_t col = entry[1].get<std::size_t>();
    if (row >= dim || col >= outputs) {
      throw DataError("linear provider: entry out of range");
    }
    w[row * outputs + col] = entry[2].get<double>();
  }
  NamedLinearProvider named{std::move(provider), {}};
  if (doc.contains("models")) {
    named.models = doc["models"].get<std::vector<std::string>>();
  }
  return named;
}

ProviderPtr make_provider(const std::string& spec,
                          const ModelCatalog& catalog) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) {
    throw DataError("provider spec must look like kind:path, got '" + spec +
                    "'");
  }
  const std::string scheme = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);

  auto check_models = [&](const std::vector<std::string>& models,
                          const char* what) {
    if (models.empty()) return;
    if (models != catalog.models()) {
      throw DataError(std::string(what) +
                      ": model names do not match the catalog order");
    }
  };
  auto check_dim = [&](std::size_t m, const char* what) {
    if (m != catalog.size()) {
      throw DataError(std::string(what) + ": dimension " + std::to_string(m) +
                      " does not match catalog size " +
                      std::to_string(catalog.size()));
    }
  };

  if (scheme == "constant") {
    NamedLeaderboard named = load_leaderboard(rest);
    check_models(named.models, "constant provider");
    check_dim(named.leaderboard.num_models(), "constant provider");
    return constant_provider(std::move(named.leaderboard));
  }
  if (scheme == "table") {
    ProviderPtr provider = load_table_provider(rest);
    check_dim(provider->num_models(), "table provider");
    return provider;
  }
  if (scheme == "category") {
    ProviderPtr provider = load_category_provider(rest);
    check_dim(provider->num_models(), "category provider");
    return provider;
  }
  if (scheme == "linear") {
    NamedLinearProvider named = load_linear_provider(rest);
    check_models(named.models, "linear provider");
    check_dim(named.provider.num_models(), "linear provider");
    return std::make_shared<FeatureLinearProvider>(std::move(named.provider));
  }
  if (scheme == "remote") {
    RemoteProviderConfig config;
    config.endpoint = rest;
    return remote_provider(std::move(config), catalog.models());
  }
  throw DataError("unknown provider scheme '" + scheme + "'");
}

}  // namespace promptlb
