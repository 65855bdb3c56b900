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

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "promptlb/errors.hpp"
#include "test_util.hpp"

using namespace promptlb;
using namespace promptlb::testing;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir =
      std::filesystem::temp_directory_path() / "promptlb_io_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("leaderboard json round trip for every kind") {
  Rng rng(71);
  const std::vector<std::string> models = {"m0", "m1", "m2"};
  for (ModelKind kind : {ModelKind::kBradleyTerry, ModelKind::kRaoKupper,
                         ModelKind::kGroundedRaoKupper}) {
    const Leaderboard lb = random_leaderboard(kind, 3, rng);
    const std::string text = leaderboard_to_json(lb, models);
    const NamedLeaderboard parsed = leaderboard_from_json(text);
    CHECK(parsed.leaderboard.kind == kind);
    CHECK(parsed.leaderboard.coefficients == lb.coefficients);
    CHECK(parsed.models == models);
    if (kind == ModelKind::kRaoKupper) {
      CHECK(parsed.leaderboard.eta == lb.eta);
    }
    if (kind == ModelKind::kGroundedRaoKupper) {
      CHECK(parsed.leaderboard.lambda == lb.lambda);
    }
  }
}

TEST_CASE("leaderboard json rejects malformed input") {
  CHECK_THROWS_AS((void)leaderboard_from_json("not json"), DataError);
  CHECK_THROWS_AS((void)leaderboard_from_json(R"({"kind":"bt"})"), DataError);
  CHECK_THROWS_AS(
      (void)leaderboard_from_json(R"({"kind":"rk","coefficients":[1,2]})"),
      DataError);
  CHECK_THROWS_AS((void)leaderboard_from_json(
                      R"({"kind":"grounded_rk","coefficients":[1,2],"lambda":0.5})"),
                  DataError);
  CHECK_THROWS_AS((void)leaderboard_from_json(
                      R"({"kind":"bt","coefficients":[1,2],"models":["a"]})"),
                  DataError);
}

TEST_CASE("votes jsonl round trip preserves records") {
  std::vector<PreferenceRecord> records;
  PreferenceRecord r;
  r.prompt.text = "compare these";
  r.prompt.id = "p1";
  r.prompt.category_path = {"stem", "math"};
  r.model_a = "alpha";
  r.model_b = "beta";
  r.outcome = Outcome::kTie;
  r.weight = 2.5;
  records.push_back(r);
  r.prompt.id.clear();
  r.prompt.category_path.clear();
  r.outcome = Outcome::kBothBad;
  r.weight = 1.0;
  records.push_back(r);

  const std::string path = temp_path("votes.jsonl");
  save_votes(path, records);
  const std::vector<PreferenceRecord> loaded = load_votes(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].prompt.id == "p1");
  CHECK(loaded[0].prompt.category_path ==
        std::vector<std::string>{"stem", "math"});
  CHECK(loaded[0].outcome == Outcome::kTie);
  CHECK(loaded[0].weight == 2.5);
  CHECK(loaded[1].outcome == Outcome::kBothBad);
  CHECK(loaded[1].weight == 1.0);
}

TEST_CASE("votes validation reports the first bad line") {
  const std::string path = temp_path("bad_votes.jsonl");
  {
    std::ofstream out(path);
    out << R"({"prompt":"x","model_a":"a","model_b":"b","outcome":"model_a"})"
        << "\n";
    out << "\n";  // blank lines are fine
    out << R"({"prompt":"x","model_a":"a","model_b":"b","outcome":"nope"})"
        << "\n";
  }
  const VotesValidation result = validate_votes_file(path);
  CHECK_FALSE(result.ok);
  CHECK(result.first_bad_line == 3);
  CHECK(result.records == 1);

  const VotesValidation missing = validate_votes_file(temp_path("absent"));
  CHECK_FALSE(missing.ok);
}

TEST_CASE("table provider file round trip is coefficient-exact") {
  Rng rng(72);
  std::map<std::string, Leaderboard> entries;
  for (int i = 0; i < 1000; ++i) {
    entries["p" + std::to_string(i)] =
        random_leaderboard(ModelKind::kBradleyTerry, 4, rng, 5.0);
  }
  const Leaderboard fallback =
      random_leaderboard(ModelKind::kBradleyTerry, 4, rng);
  const std::string path = temp_path("table.jsonl");
  save_table_provider(path, entries, fallback);
  const ProviderPtr provider = load_table_provider(path);

  for (int i = 0; i < 1000; i += 37) {
    Prompt p;
    p.id = "p" + std::to_string(i);
    p.text = "t";
    CHECK(provider->evaluate(p).coefficients ==
          entries.at(p.id).coefficients);
  }
  Prompt miss;
  miss.id = "unknown";
  miss.text = "t";
  CHECK(provider->evaluate(miss).coefficients == fallback.coefficients);
}

TEST_CASE("category provider file round trip") {
  std::map<std::string, Leaderboard> cats;
  cats["math"] = Leaderboard::rk({0.5, -0.5}, 0.7);
  cats["chat"] = Leaderboard::rk({-0.1, 0.1}, 0.3);
  const std::string path = temp_path("cats.json");
  save_category_provider(path, cats, 1, std::nullopt);
  const ProviderPtr provider = load_category_provider(path);
  CHECK(provider->kind() == ModelKind::kRaoKupper);
  Prompt p;
  p.text = "t";
  p.category_path = {"root", "math"};
  CHECK(provider->evaluate(p).coefficients == cats.at("math").coefficients);
  CHECK(provider->evaluate(p).eta == 0.7);
}

TEST_CASE("linear provider file round trip preserves weights") {
  Rng rng(73);
  FeatureLinearProvider provider(ModelKind::kGroundedRaoKupper, 3,
                                 Featurizer(1 << 10));
  auto& w = provider.mutable_weights();
  for (int i = 0; i < 500; ++i) {
    w[rng.uniform_index(w.size())] = rng.uniform(-2, 2);
  }
  const std::string path = temp_path("linear.json");
  save_linear_provider(path, provider, {"a", "b", "c"});
  const NamedLinearProvider loaded = load_linear_provider(path);
  CHECK(loaded.models == std::vector<std::string>{"a", "b", "c"});
  CHECK(loaded.provider.weights() == provider.weights());
  CHECK(loaded.provider.kind() == ModelKind::kGroundedRaoKupper);

  Prompt p;
  p.text = "some prompt";
  CHECK(loaded.provider.evaluate(p).coefficients ==
        provider.evaluate(p).coefficients);
}

TEST_CASE("make_provider resolves specs and validates dimensions") {
  const ModelCatalog catalog({"a", "b"}, {1.0, 1.0});

  SUBCASE("constant") {
    const std::string path = temp_path("lb.json");
    save_leaderboard(path, Leaderboard::bt({0.5, -0.5}), {"a", "b"});
    const ProviderPtr provider = make_provider("constant:" + path, catalog);
    CHECK(provider->num_models() == 2);
  }
  SUBCASE("constant with mismatched names") {
    const std::string path = temp_path("lb_bad.json");
    save_leaderboard(path, Leaderboard::bt({0.5, -0.5}), {"b", "a"});
    CHECK_THROWS_AS((void)make_provider("constant:" + path, catalog),
                    DataError);
  }
  SUBCASE("constant with mismatched dimension") {
    const std::string path = temp_path("lb_dim.json");
    save_leaderboard(path, Leaderboard::bt({0.5, -0.5, 0.0}), {});
    CHECK_THROWS_AS((void)make_provider("constant:" + path, catalog),
                    DataError);
  }
  SUBCASE("unknown scheme") {
    CHECK_THROWS_AS((void)make_provider("magic:x", catalog), DataError);
    CHECK_THROWS_AS((void)make_provider("nocolon", catalog), DataError);
  }
}
