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

#ifndef PROMPTLB_SERVICE_HPP_
#define PROMPTLB_SERVICE_HPP_

#include <memory>
#include <string>

#include "promptlb/catalog.hpp"
#include "promptlb/providers.hpp"
#include "promptlb/routing.hpp"

namespace promptlb {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::string catalog_path;
  std::string provider_spec;  // constant:|table:|category:|linear:|remote:
  double default_budget = kUnlimitedBudget;
  double request_timeout_seconds = 5.0;
  int max_concurrency = 8;
  bool log_requests = true;
};

// HTTP routing service over an immutable catalog + provider:
//
//   POST /v1/route                {"prompt",budget?,seed?} -> routing decision
//   POST /v1/leaderboard/aggregate {"prompts":[...]}       -> leaderboard
//   GET  /v1/leaderboard?prompt=...                        -> leaderboard
//   GET  /v1/models                                        -> catalog
//   GET  /healthz
//
// Responses use the same canonical serializers as the CLI, so the two paths
// are byte-identical on identical inputs. Routing is deterministic (argmax
// of pi, lowest index on ties) unless the request supplies a "seed".
// Remote-provider failures surface as 502; infeasible budgets and malformed
// bodies as 422. One structured JSON log line per request.
class RoutingService {
 public:
  // Resolves catalog and provider from the config (throws on failure).
  explicit RoutingService(const ServiceConfig& config);
  // In-process construction with prebuilt state.
  RoutingService(const ServiceConfig& config, ModelCatalog catalog,
                 ProviderPtr provider);
  ~RoutingService();

  RoutingService(const RoutingService&) = delete;
  RoutingService& operator=(const RoutingService&) = delete;

  // Binds and serves on a background thread; throws DataError on bind
  // failure. Returns once the socket is accepting connections.
  void start();
  void stop();

  int port() const;
  bool running() const;

  const ModelCatalog& catalog() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptlb

#endif  // PROMPTLB_SERVICE_HPP_
