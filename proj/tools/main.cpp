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

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "promptlb/aggregation.hpp"
#include "promptlb/analysis.hpp"
#include "promptlb/catalog.hpp"
#include "promptlb/errors.hpp"
#include "promptlb/estimation.hpp"
#include "promptlb/io.hpp"
#include "promptlb/math.hpp"
#include "promptlb/routing.hpp"
#include "promptlb/service.hpp"
#include "promptlb/simulation.hpp"

namespace {

using namespace promptlb;
using nlohmann::json;

// Arena-style display transform, presentation only; fitted coefficients stay
// in natural-log units everywhere else.
constexpr double kDisplayScale = 400.0 / 2.302585092994046;  // 400 / ln 10
constexpr double kDisplayOffset = 1000.0;

double parse_budget(const std::string& text) {
  if (text.empty() || text == "inf" || text == "infinite") {
    return kUnlimitedBudget;
  }
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw DataError("cannot parse budget '" + text + "'");
  }
}

Anchor parse_anchor(const std::string& text) {
  if (text == "sum_zero") return Anchor::sum_zero();
  if (text.rfind("fix:", 0) == 0) return Anchor::fix_model(text.substr(4));
  throw DataError("anchor must be 'sum_zero' or 'fix:<model>', got '" + text +
                  "'");
}

ModelCatalog catalog_from_votes(const std::vector<PreferenceRecord>& records) {
  std::set<std::string> names;
  for (const PreferenceRecord& r : records) {
    names.insert(r.model_a);
    names.insert(r.model_b);
  }
  return ModelCatalog::with_default_costs({names.begin(), names.end()});
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

void print_leaderboard_table(const Leaderboard& lb,
                             const std::vector<std::string>& models,
                             bool arena_scale) {
  std::vector<std::size_t> order(models.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lb.coefficients[a] > lb.coefficients[b];
  });
  for (std::size_t i : order) {
    if (arena_scale) {
      std::printf("%-32s %8.1f\n", models[i].c_str(),
                  kDisplayScale * lb.coefficients[i] + kDisplayOffset);
    } else {
      std::printf("%-32s %+9.4f\n", models[i].c_str(), lb.coefficients[i]);
    }
  }
  if (lb.kind == ModelKind::kRaoKupper) {
    std::printf("%-32s %+9.4f\n", "(tie coefficient eta)", lb.eta);
  }
  if (lb.kind == ModelKind::kGroundedRaoKupper) {
    std::printf("%-32s %9.4f\n", "(tie scale lambda)", lb.lambda);
  }
}

struct FitArgs {
  std::string votes_path;
  std::string kind = "bt";
  std::string catalog_path;
  std::string out_path;
  std::string anchor = "sum_zero";
  double l2 = 0.0;
  std::size_t max_iters = 500;
  double tolerance = 1e-8;
  bool arena_scale = false;
};

void run_fit(const FitArgs& args) {
  const std::vector<PreferenceRecord> records = load_votes(args.votes_path);
  const ModelCatalog catalog = args.catalog_path.empty()
                                   ? catalog_from_votes(records)
                                   : ModelCatalog::load(args.catalog_path);
  FitConfig config;
  config.anchor = parse_anchor(args.anchor);
  config.l2_regularization = args.l2;
  config.max_iters = args.max_iters;
  config.grad_tolerance = args.tolerance;

  const FitReport report =
      fit_marginal(catalog, records, model_kind_from_string(args.kind), config);
  std::fprintf(stderr,
               "fit: %zu records (%zu skipped), nll %.6f, %zu iterations%s%s\n",
               records.size(), report.skipped_records, report.final_nll,
               report.iterations, report.converged ? "" : " (not converged)",
               report.l2_used > 0.0 ? ", l2 active" : "");
  print_leaderboard_table(report.leaderboard, catalog.models(),
                          args.arena_scale);
  if (!args.out_path.empty()) {
    save_leaderboard(args.out_path, report.leaderboard, catalog.models());
  }
}

struct TrainArgs {
  std::string votes_path;
  std::string out_path;
  std::string kind = "bt";
  std::string catalog_path;
  std::size_t dim = Featurizer::kDefaultDim;
  std::size_t epochs = 2;
  std::size_t batch_size = 32;
  double learning_rate = 0.5;
  double l2 = 0.0;
  std::uint64_t seed = 0;
};

void run_train(const TrainArgs& args) {
  const std::vector<PreferenceRecord> records = load_votes(args.votes_path);
  const ModelCatalog catalog = args.catalog_path.empty()
                                   ? catalog_from_votes(records)
                                   : ModelCatalog::load(args.catalog_path);
  FeatureLinearProvider provider(model_kind_from_string(args.kind),
                                 catalog.size(), Featurizer(args.dim));
  TrainConfig config;
  config.epochs = args.epochs;
  config.batch_size = args.batch_size;
  config.learning_rate = args.learning_rate;
  config.l2_regularization = args.l2;
  config.seed = args.seed;

  TrainResult result = train_provider(catalog, records, std::move(provider),
                                      config);
  std::fprintf(stderr, "train: %zu records, %zu steps, loss %.4f -> %.4f\n",
               records.size(), result.loss_history.size(),
               result.loss_history.front(), result.loss_history.back());
  save_linear_provider(args.out_path, result.provider, catalog.models());
}

struct AggregateArgs {
  std::string votes_path;
  std::string prompts_path;
  std::string provider_spec;
  std::string catalog_path;
  std::string out_path;
  std::string anchor = "sum_zero";
  bool arena_scale = false;
};

void run_aggregate(const AggregateArgs& args) {
  const ModelCatalog catalog = ModelCatalog::load(args.catalog_path);
  const ProviderPtr provider = make_provider(args.provider_spec, catalog);

  std::vector<Prompt> prompts;
  if (!args.prompts_path.empty()) {
    prompts = load_prompts(args.prompts_path);
  } else if (!args.votes_path.empty()) {
    for (const PreferenceRecord& r : load_votes(args.votes_path)) {
      prompts.push_back(r.prompt);
    }
  } else {
    throw DataError("aggregate: need --prompts or --votes");
  }

  FitConfig config;
  config.anchor = parse_anchor(args.anchor);
  const Leaderboard lb =
      aggregate(*provider, PromptDistribution::uniform(std::move(prompts)),
                PairDistribution::uniform(catalog.size()), config);
  print_leaderboard_table(lb, catalog.models(), args.arena_scale);
  if (!args.out_path.empty()) {
    save_leaderboard(args.out_path, lb, catalog.models());
  }
}

struct RouteArgs {
  std::string prompt_text;
  std::string budget = "inf";
  std::string catalog_path;
  std::string provider_spec;
  std::string out_path;
  std::uint64_t seed = 0;
  bool explain = false;
};

void run_route(const RouteArgs& args, bool seeded) {
  const ModelCatalog catalog = ModelCatalog::load(args.catalog_path);
  const ProviderPtr provider = make_provider(args.provider_spec, catalog);
  Prompt prompt;
  prompt.text = args.prompt_text;

  Rng rng(args.seed);
  const RoutingDecision decision =
      route(*provider, prompt, catalog, parse_budget(args.budget),
            seeded ? &rng : nullptr);

  const std::string body = routing_decision_to_json(decision);
  std::printf("%s\n", body.c_str());
  if (!args.out_path.empty()) write_text(args.out_path, body);
  if (args.explain) {
    std::fprintf(stderr, "chosen model      %s\n", decision.model.c_str());
    std::fprintf(stderr, "policy pi         [");
    for (std::size_t i = 0; i < decision.policy.pi.size(); ++i) {
      std::fprintf(stderr, "%s%.6f", i ? ", " : "", decision.policy.pi[i]);
    }
    std::fprintf(stderr, "]\n");
    std::fprintf(stderr, "win rate R*       %.6f\n",
                 decision.policy.predicted_win_rate);
    std::fprintf(stderr, "coefficient       %.6f\n",
                 decision.policy.predicted_coefficient);
    std::fprintf(stderr, "expected cost     %.6g\n",
                 decision.policy.expected_cost);
  }
}

struct AnalyzeArgs {
  std::string prompts_path;
  std::string provider_spec;
  std::string catalog_path;
  std::string reference;
  std::vector<std::string> models;
  std::size_t level = 0;
  std::string out_path;
};

json report_to_json(const RegressionReport& report,
                    const std::vector<std::string>& catalog_models) {
  json categories = json::array();
  for (const CategoryReport& c : report.categories) {
    json entry;
    entry["category"] = c.category;
    entry["prompt_count"] = c.prompt_count;
    entry["leaderboard"] =
        json::parse(leaderboard_to_json(c.leaderboard, catalog_models));
    json rates = json::object();
    for (std::size_t k = 0; k < report.models_of_interest.size(); ++k) {
      rates[report.models_of_interest[k]] = c.win_rate_vs_reference[k];
    }
    entry["win_rate_vs_reference"] = rates;
    if (!c.reliability.empty()) {
      json reliability = json::object();
      for (std::size_t k = 0; k < report.models_of_interest.size(); ++k) {
        reliability[report.models_of_interest[k]] = c.reliability[k];
      }
      entry["reliability"] = reliability;
    }
    categories.push_back(std::move(entry));
  }
  json flags = json::array();
  for (const RegressionFlag& flag : report.flags) {
    flags.push_back({{"category", flag.category},
                     {"model", flag.model},
                     {"win_rate", flag.win_rate}});
  }
  return json{{"reference", report.reference},
              {"models", report.models_of_interest},
              {"categories", categories},
              {"flags", flags},
              {"skipped_prompts", report.skipped_prompts}};
}

void run_analyze(const AnalyzeArgs& args) {
  const ModelCatalog catalog = ModelCatalog::load(args.catalog_path);
  const ProviderPtr provider = make_provider(args.provider_spec, catalog);
  const std::vector<Prompt> prompts = load_prompts(args.prompts_path);
  const std::vector<std::string> models =
      args.models.empty() ? catalog.models() : args.models;

  const RegressionReport report = regression_report(
      *provider, catalog, prompts, models, args.reference, args.level);
  std::printf("%s", report.render_text().c_str());
  if (!args.out_path.empty()) {
    write_text(args.out_path, report_to_json(report, catalog.models()).dump());
  }
}

struct SimulateArgs {
  std::string scenario_path;
  std::string out_path;
};

void run_simulate(const SimulateArgs& args) {
  std::ifstream in(args.scenario_path);
  if (!in) throw DataError("cannot open '" + args.scenario_path + "'");
  json scenario;
  try {
    in >> scenario;
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: invalid JSON: ") + e.what());
  }

  const auto seed = scenario.value("seed", std::uint64_t{0});
  const auto num_models = scenario.value("num_models", std::size_t{4});
  const auto categories = scenario.value("categories", std::size_t{2});
  const auto prompts_per_category =
      scenario.value("prompts_per_category", std::size_t{50});
  const auto effect_scale = scenario.value("effect_scale", 1.0);
  const ModelKind kind =
      model_kind_from_string(scenario.value("kind", std::string("bt")));
  const auto n_votes = scenario.value("n_votes", std::size_t{10000});
  const std::string action = scenario.value("action", std::string("deploy"));

  const SyntheticWorld world = make_world(seed, num_models, categories,
                                          prompts_per_category, effect_scale,
                                          kind);
  std::vector<double> q = world.catalog.opponent_dist();
  if (scenario.contains("q") && scenario["q"].is_array()) {
    q = scenario["q"].get<std::vector<double>>();
  }

  json result;
  result["world"] = {{"seed", seed},
                     {"models", world.catalog.models()},
                     {"costs", world.catalog.costs()},
                     {"categories", categories},
                     {"prompts", world.prompt_pool.size()}};

  if (action == "deploy") {
    double budget = kUnlimitedBudget;
    if (scenario.contains("budget") && !scenario["budget"].is_null()) {
      budget = scenario["budget"].get<double>();
    }
    const Router router =
        provider_router(world.provider_true, world.catalog, budget);
    const DeploymentResult deployment =
        deploy_router(world, router, q, n_votes, seed + 1);
    result["deploy"] = {
        {"n_votes", deployment.n_votes},
        {"empirical_win_rate", deployment.empirical_win_rate},
        {"fitted_coefficient", deployment.fitted_coefficient},
        {"fitted_se", deployment.fitted_se},
        {"predicted_coefficient", deployment.predicted_coefficient},
        {"predicted_win_rate", deployment.predicted_win_rate},
        {"mean_expected_cost", deployment.mean_expected_cost},
        {"realized_mean_cost", deployment.realized_mean_cost}};
  } else if (action == "pareto") {
    if (!scenario.contains("budgets") || !scenario["budgets"].is_array()) {
      throw DataError("scenario: pareto needs a 'budgets' array");
    }
    std::vector<double> budgets;
    for (const auto& b : scenario["budgets"]) {
      budgets.push_back(b.is_null() ? kUnlimitedBudget : b.get<double>());
    }
    const std::vector<ParetoRow> rows =
        pareto_sweep(world, budgets, q, n_votes, seed + 1);
    json table = json::array();
    for (const ParetoRow& row : rows) {
      table.push_back({{"budget", std::isinf(row.budget)
                                      ? json(nullptr)
                                      : json(row.budget)},
                       {"feasible", row.feasible},
                       {"exact_win_rate", row.exact_win_rate},
                       {"mc_win_rate", row.mc_win_rate},
                       {"fitted_coefficient", row.fitted_coefficient},
                       {"fitted_se", row.fitted_se},
                       {"predicted_coefficient", row.predicted_coefficient},
                       {"mean_expected_cost", row.mean_expected_cost},
                       {"realized_mean_cost", row.realized_mean_cost}});
    }
    result["pareto"] = std::move(table);
  } else {
    throw DataError("scenario: unknown action '" + action + "'");
  }

  const std::string body = result.dump(2);
  if (!args.out_path.empty()) {
    write_text(args.out_path, body);
  } else {
    std::printf("%s\n", body.c_str());
  }
}

struct ServeArgs {
  std::string listen;
  std::string catalog_path;
  std::string provider_spec;
  std::string budget;
  std::string config_path;
  double timeout = 5.0;
  int max_concurrency = 8;
};

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

void apply_listen(ServiceConfig& config, const std::string& listen) {
  const std::size_t colon = listen.rfind(':');
  if (colon == std::string::npos) {
    throw DataError("listen address must be host:port, got '" + listen + "'");
  }
  config.listen_address = listen.substr(0, colon);
  config.port = std::stoi(listen.substr(colon + 1));
}

// Precedence: flags > environment > config file > defaults.
void run_serve(const ServeArgs& args) {
  ServiceConfig config;
  config.request_timeout_seconds = args.timeout;
  config.max_concurrency = args.max_concurrency;

  std::string config_path = args.config_path;
  if (config_path.empty()) {
    if (const char* env = std::getenv("PROMPTLB_CONFIG")) config_path = env;
  }
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw DataError("cannot open config '" + config_path + "'");
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    if (doc.contains("listen")) apply_listen(config, doc["listen"]);
    if (doc.contains("catalog")) config.catalog_path = doc["catalog"];
    if (doc.contains("provider")) config.provider_spec = doc["provider"];
    if (doc.contains("default_budget") && !doc["default_budget"].is_null()) {
      config.default_budget = doc["default_budget"].get<double>();
    }
    if (doc.contains("request_timeout_seconds")) {
      config.request_timeout_seconds = doc["request_timeout_seconds"];
    }
    if (doc.contains("max_concurrency")) {
      config.max_concurrency = doc["max_concurrency"];
    }
  }
  if (const char* env = std::getenv("PROMPTLB_LISTEN")) {
    apply_listen(config, env);
  }
  if (!args.listen.empty()) apply_listen(config, args.listen);
  if (!args.catalog_path.empty()) config.catalog_path = args.catalog_path;
  if (!args.provider_spec.empty()) config.provider_spec = args.provider_spec;
  if (!args.budget.empty()) config.default_budget = parse_budget(args.budget);

  if (config.catalog_path.empty() || config.provider_spec.empty()) {
    throw DataError("serve: --catalog and --provider are required");
  }

  RoutingService service(config);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  service.start();
  std::fprintf(stderr, "serving on %s:%d\n", config.listen_address.c_str(),
               service.port());
  while (service.running() && !g_shutdown.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  service.stop();
  std::fprintf(stderr, "shut down\n");
}

void run_validate(const std::string& votes_path) {
  const VotesValidation result = validate_votes_file(votes_path);
  if (!result.ok) {
    if (result.first_bad_line > 0) {
      std::fprintf(stderr, "invalid vote at line %zu: %s\n",
                   result.first_bad_line, result.error.c_str());
    } else {
      std::fprintf(stderr, "%s\n", result.error.c_str());
    }
    throw DataError("validation failed");
  }
  std::printf("ok: %zu records\n", result.records);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-conditional leaderboards and cost-optimal routing"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "fit a marginal leaderboard");
  fit->add_option("--votes", fit_args.votes_path, "votes JSONL")->required();
  fit->add_option("--kind", fit_args.kind, "bt|rk|grounded_rk");
  fit->add_option("--catalog", fit_args.catalog_path, "catalog JSON");
  fit->add_option("--out", fit_args.out_path, "output leaderboard JSON");
  fit->add_option("--anchor", fit_args.anchor, "sum_zero|fix:<model>");
  fit->add_option("--l2", fit_args.l2, "L2 regularization");
  fit->add_option("--max-iters", fit_args.max_iters, "iteration cap");
  fit->add_option("--tol", fit_args.tolerance, "gradient tolerance");
  fit->add_flag("--arena-scale", fit_args.arena_scale,
                "display scores as 400/ln10 * theta + 1000");
  fit->callback([&] { run_fit(fit_args); });

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train", "train a featurized linear provider");
  train->add_option("--votes", train_args.votes_path, "votes JSONL")
      ->required();
  train->add_option("--out", train_args.out_path, "output provider JSON")
      ->required();
  train->add_option("--kind", train_args.kind, "bt|rk|grounded_rk");
  train->add_option("--catalog", train_args.catalog_path, "catalog JSON");
  train->add_option("--dim", train_args.dim, "hashed feature dimension");
  train->add_option("--epochs", train_args.epochs, "training epochs");
  train->add_option("--batch", train_args.batch_size, "minibatch size");
  train->add_option("--lr", train_args.learning_rate, "learning rate");
  train->add_option("--l2", train_args.l2, "L2 regularization");
  train->add_option("--seed", train_args.seed, "shuffle seed");
  train->callback([&] { run_train(train_args); });

  AggregateArgs agg_args;
  CLI::App* agg = app.add_subcommand(
      "aggregate", "collapse per-prompt leaderboards over a prompt set");
  agg->add_option("--votes", agg_args.votes_path, "votes JSONL (prompts)");
  agg->add_option("--prompts", agg_args.prompts_path, "prompts JSONL");
  agg->add_option("--provider", agg_args.provider_spec, "provider spec")
      ->required();
  agg->add_option("--catalog", agg_args.catalog_path, "catalog JSON")
      ->required();
  agg->add_option("--out", agg_args.out_path, "output leaderboard JSON");
  agg->add_option("--anchor", agg_args.anchor, "sum_zero|fix:<model>");
  agg->add_flag("--arena-scale", agg_args.arena_scale, "display transform");
  agg->callback([&] { run_aggregate(agg_args); });

  RouteArgs route_args;
  CLI::App* route_cmd =
      app.add_subcommand("route", "pick a model for one prompt");
  route_cmd->add_option("--prompt", route_args.prompt_text, "prompt text")
      ->required();
  route_cmd->add_option("--budget", route_args.budget,
                        "per-query budget (number or 'inf')");
  route_cmd->add_option("--catalog", route_args.catalog_path, "catalog JSON")
      ->required();
  route_cmd->add_option("--provider", route_args.provider_spec,
                        "provider spec")
      ->required();
  CLI::Option* seed_opt = route_cmd->add_option(
      "--seed", route_args.seed, "sample the choice from pi with this seed");
  route_cmd->add_option("--out", route_args.out_path, "write decision JSON");
  route_cmd->add_flag("--explain", route_args.explain,
                      "print pi, R*, theta', expected cost");
  route_cmd->callback(
      [&] { run_route(route_args, seed_opt->count() > 0); });

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "per-category win rates against a reference model");
  analyze->add_option("--prompts", analyze_args.prompts_path, "prompts JSONL")
      ->required();
  analyze->add_option("--provider", analyze_args.provider_spec,
                      "provider spec")
      ->required();
  analyze->add_option("--catalog", analyze_args.catalog_path, "catalog JSON")
      ->required();
  analyze->add_option("--reference", analyze_args.reference, "reference model")
      ->required();
  analyze->add_option("--models", analyze_args.models,
                      "models of interest (default: all)");
  analyze->add_option("--level", analyze_args.level, "category level");
  analyze->add_option("--out", analyze_args.out_path, "report JSON path");
  analyze->callback([&] { run_analyze(analyze_args); });

  SimulateArgs sim_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "run a synthetic-world scenario");
  simulate->add_option("--scenario", sim_args.scenario_path, "scenario JSON")
      ->required();
  simulate->add_option("--out", sim_args.out_path, "results JSON path");
  simulate->callback([&] { run_simulate(sim_args); });

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand("serve", "run the HTTP routing service");
  serve->add_option("--listen", serve_args.listen, "host:port");
  serve->add_option("--catalog", serve_args.catalog_path, "catalog JSON");
  serve->add_option("--provider", serve_args.provider_spec, "provider spec");
  serve->add_option("--budget", serve_args.budget, "default budget");
  serve->add_option("--config", serve_args.config_path, "service config JSON");
  serve->add_option("--timeout", serve_args.timeout, "request timeout (s)");
  serve->add_option("--max-concurrency", serve_args.max_concurrency,
                    "worker threads");
  serve->callback([&] { run_serve(serve_args); });

  std::string validate_votes_path;
  CLI::App* validate = app.add_subcommand("validate", "validate a votes file");
  validate->add_option("--votes", validate_votes_path, "votes JSONL")
      ->required();
  validate->callback([&] { run_validate(validate_votes_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
