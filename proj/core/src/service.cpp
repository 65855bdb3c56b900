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

#include "promptlb/service.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "promptlb/aggregation.hpp"
#include "promptlb/errors.hpp"
#include "promptlb/io.hpp"
#include "promptlb/rng.hpp"

namespace promptlb {

using nlohmann::json;

namespace {

std::string error_body(const std::string& message) {
  return json{{"error", message}}.dump();
}

std::uint64_t text_hash(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

struct RoutingService::Impl {
  ServiceConfig config;
  ModelCatalog catalog;
  ProviderPtr provider;
  httplib::Server server;
  std::thread serve_thread;
  std::atomic<bool> running{false};
  int bound_port = 0;

  Impl(ServiceConfig cfg, ModelCatalog cat, ProviderPtr prov)
      : config(std::move(cfg)),
        catalog(std::move(cat)),
        provider(std::move(prov)) {
    if (!provider) throw DataError("service: provider is null");
    if (provider->num_models() != catalog.size()) {
      throw DataError("service: provider/catalog dimension mismatch");
    }
    if (config.default_budget < catalog.min_cost()) {
      throw DataError("service: default budget below the cheapest model");
    }
    setup_routes();
  }

  void log_request(const char* endpoint, const std::string& prompt,
                   const RoutingDecision* decision, double latency_ms) {
    if (!config.log_requests) return;
    json line;
    line["endpoint"] = endpoint;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(text_hash(prompt)));
    line["prompt_hash"] = hash;
    if (decision) {
      line["model"] = decision->model;
      line["policy"] = decision->policy.pi;
      line["win_rate"] = decision->policy.predicted_win_rate;
      line["coefficient"] = decision->policy.predicted_coefficient;
    }
    line["latency_ms"] = latency_ms;
    std::fprintf(stdout, "%s\n", line.dump().c_str());
    std::fflush(stdout);
  }

  // Runs a handler with the shared error mapping: remote failures -> 502,
  // data problems -> 422.
  template <typename Fn>
  void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const RemoteTimeoutError& e) {
      res.status = 502;
      res.set_content(error_body(e.what()), "application/json");
    } catch (const RemoteProtocolError& e) {
      res.status = 502;
      res.set_content(error_body(e.what()), "application/json");
    } catch (const RemoteDimensionError& e) {
      res.status = 502;
      res.set_content(error_body(e.what()), "application/json");
    } catch (const InfeasibleBudgetError& e) {
      res.status = 422;
      res.set_content(error_body(e.what()), "application/json");
    } catch (const std::exception& e) {
      res.status = 422;
      res.set_content(error_body(e.what()), "application/json");
    }
  }

  void setup_routes() {
    server.new_task_queue = [this] {
      return new httplib::ThreadPool(
          static_cast<std::size_t>(std::max(1, config.max_concurrency)));
    };
    server.set_read_timeout(std::chrono::milliseconds(
        static_cast<long long>(config.request_timeout_seconds * 1000)));

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });

    server.Get("/v1/models",
               [this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(catalog.to_json_text(), "application/json");
               });

    server.Get("/v1/leaderboard", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      guarded(res, [&] {
        if (!req.has_param("prompt")) {
          res.status = 422;
          res.set_content(error_body("missing 'prompt' query parameter"),
                          "application/json");
          return;
        }
        Prompt prompt;
        prompt.text = req.get_param_value("prompt");
        if (prompt.text.empty()) throw DataError("empty prompt");
        const Leaderboard lb = provider->evaluate(prompt);
        res.set_content(leaderboard_to_json(lb, catalog.models()),
                        "application/json");
      });
    });

    server.Post("/v1/route", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      const auto start = std::chrono::steady_clock::now();
      guarded(res, [&] {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::exception&) {
          throw DataError("request body is not valid JSON");
        }
        if (!body.is_object() || !body.contains("prompt") ||
            !body["prompt"].is_string()) {
          throw DataError("request needs a string 'prompt'");
        }
        Prompt prompt;
        prompt.text = body["prompt"].get<std::string>();
        if (prompt.text.empty()) throw DataError("empty prompt");

        double budget = config.default_budget;
        if (body.contains("budget") && !body["budget"].is_null()) {
          budget = body["budget"].get<double>();
        }

        RoutingDecision decision;
        if (body.contains("seed") && !body["seed"].is_null()) {
          Rng rng(body["seed"].get<std::uint64_t>());
          decision = route(*provider, prompt, catalog, budget, &rng);
        } else {
          decision = route(*provider, prompt, catalog, budget, nullptr);
        }
        res.set_content(routing_decision_to_json(decision),
                        "application/json");
        const double latency_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - start)
                .count();
        log_request("/v1/route", prompt.text, &decision, latency_ms);
      });
    });

    server.Post("/v1/leaderboard/aggregate", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
      const auto start = std::chrono::steady_clock::now();
      guarded(res, [&] {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::exception&) {
          throw DataError("request body is not valid JSON");
        }
        if (!body.is_object() || !body.contains("prompts") ||
            !body["prompts"].is_array() || body["prompts"].empty()) {
          throw DataError("request needs a nonempty 'prompts' array");
        }
        if (body["prompts"].size() > 10000) {
          throw DataError("at most 10000 prompts per request");
        }
        std::vector<Prompt> prompts;
        prompts.reserve(body["prompts"].size());
        for (const auto& entry : body["prompts"]) {
          if (!entry.is_string()) {
            throw DataError("'prompts' must be an array of strings");
          }
          Prompt prompt;
          prompt.text = entry.get<std::string>();
          if (prompt.text.empty()) throw DataError("empty prompt");
          prompts.push_back(std::move(prompt));
        }
        const Leaderboard lb =
            aggregate(*provider, PromptDistribution::uniform(std::move(prompts)));
        res.set_content(leaderboard_to_json(lb, catalog.models()),
                        "application/json");
        const double latency_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - start)
                .count();
        log_request("/v1/leaderboard/aggregate", "", nullptr, latency_ms);
      });
    });
  }
};

RoutingService::RoutingService(const ServiceConfig& config) {
  ModelCatalog catalog = ModelCatalog::load(config.catalog_path);
  ProviderPtr provider = make_provider(config.provider_spec, catalog);
  impl_ = std::make_unique<Impl>(config, std::move(catalog),
                                 std::move(provider));
}

RoutingService::RoutingService(const ServiceConfig& config,
                               ModelCatalog catalog, ProviderPtr provider)
    : impl_(std::make_unique<Impl>(config, std::move(catalog),
                                   std::move(provider))) {}

RoutingService::~RoutingService() { stop(); }

void RoutingService::start() {
  if (impl_->running.load()) return;
  if (impl_->config.port == 0) {
    impl_->bound_port =
        impl_->server.bind_to_any_port(impl_->config.listen_address);
    if (impl_->bound_port <= 0) {
      throw DataError("service: failed to bind " +
                      impl_->config.listen_address);
    }
  } else {
    if (!impl_->server.bind_to_port(impl_->config.listen_address,
                                    impl_->config.port)) {
      throw DataError("service: failed to bind " +
                      impl_->config.listen_address + ":" +
                      std::to_string(impl_->config.port));
    }
    impl_->bound_port = impl_->config.port;
  }
  impl_->running.store(true);
  impl_->serve_thread = std::thread([this] {
    impl_->server.listen_after_bind();
    impl_->running.store(false);
  });
  impl_->server.wait_until_ready();
}

void RoutingService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
  impl_->running.store(false);
}

int RoutingService::port() const { return impl_->bound_port; }

bool RoutingService::running() const { return impl_->running.load(); }

const ModelCatalog& RoutingService::catalog() const { return impl_->catalog; }

}  // namespace promptlb
