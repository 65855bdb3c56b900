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
// File formats and canonical JSON serialization. The same serializers back
// the CLI and the HTTP service so identical inputs produce byte-identical
// output through either path.
//
//   leaderboard JSON  {"kind","models","coefficients","eta"?,"lambda"?,"anchor"}
//   votes JSONL       {"prompt","prompt_id"?,"category_path"?,"model_a",
//                      "model_b","outcome","weight"?} per line
//   prompts JSONL     {"id"?,"text","category_path"?} per line
//   table JSONL       {"id","kind","coefficients","eta"?,"lambda"?} per line;
//                     id "*" supplies the fallback leaderboard
//   category JSON     {"level",categories:{label: leaderboard},"fallback"?}
//   linear JSON       {"kind","dim","num_models","models"?,
//                      "entries":[[row,col,value],...]}

#ifndef PROMPTLB_IO_HPP_
#define PROMPTLB_IO_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptlb/catalog.hpp"
#include "promptlb/estimation.hpp"
#include "promptlb/feedback_models.hpp"
#include "promptlb/providers.hpp"
#include "promptlb/routing.hpp"

namespace promptlb {

struct NamedLeaderboard {
  Leaderboard leaderboard;
  std::vector<std::string> models;
};

// Compact canonical form; `models` may be empty when names are unknown.
std::string leaderboard_to_json(const Leaderboard& lb,
                                const std::vector<std::string>& models);
NamedLeaderboard leaderboard_from_json(const std::string& text);

void save_leaderboard(const std::string& path, const Leaderboard& lb,
                      const std::vector<std::string>& models);
NamedLeaderboard load_leaderboard(const std::string& path);

// Canonical routing decision JSON (the /v1/route body and `route` output).
std::string routing_decision_to_json(const RoutingDecision& decision);

std::vector<PreferenceRecord> votes_from_jsonl(const std::string& text);
std::vector<PreferenceRecord> load_votes(const std::string& path);
void save_votes(const std::string& path,
                const std::vector<PreferenceRecord>& records);

struct VotesValidation {
  bool ok = true;
  std::size_t records = 0;
  std::size_t first_bad_line = 0;  // 1-based; 0 when ok
  std::string error;
};

// Non-throwing validation pass for the CLI `validate` subcommand.
VotesValidation validate_votes_file(const std::string& path);

std::vector<Prompt> load_prompts(const std::string& path);
void save_prompts(const std::string& path, const std::vector<Prompt>& prompts);

void save_table_provider(const std::string& path,
                         const std::map<std::string, Leaderboard>& entries,
                         const std::optional<Leaderboard>& fallback);
ProviderPtr load_table_provider(const std::string& path);

ProviderPtr load_category_provider(const std::string& path);
void save_category_provider(const std::string& path,
                            const std::map<std::string, Leaderboard>& per_category,
                            std::size_t level,
                            const std::optional<Leaderboard>& fallback);

void save_linear_provider(const std::string& path,
                          const FeatureLinearProvider& provider,
                          const std::vector<std::string>& models);
struct NamedLinearProvider {
  FeatureLinearProvider provider;
  std::vector<std::string> models;
};
NamedLinearProvider load_linear_provider(const std::string& path);

// Resolves a provider spec against a catalog:
//   constant:<leaderboard.json> | table:<entries.jsonl> |
//   category:<categories.json> | linear:<weights.json> | remote:<url>
// Validates dimension (and model names where the file carries them).
ProviderPtr make_provider(const std::string& spec, const ModelCatalog& catalog);

}  // namespace promptlb

#endif  // PROMPTLB_IO_HPP_
