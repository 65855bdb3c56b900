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
#include <thread>
#include <vector>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "promptlb/aggregation.hpp"
#include "promptlb/errors.hpp"
#include "promptlb/io.hpp"
#include "promptlb/remote_provider.hpp"
#include "test_util.hpp"

using namespace promptlb;
using namespace promptlb::testing;
using nlohmann::json;

namespace {

ServiceConfig ephemeral_config() {
  ServiceConfig config;
  config.listen_address = "127.0.0.1";
  config.port = 0;
  config.log_requests = false;
  return config;
}

// Mock coefficient server covering the remote-provider protocol.
class MockCoefficientServer {
 public:
  explicit MockCoefficientServer(json response, int status = 200)
      : response_(std::move(response)), status_(status) {
    server_.Post("/v1/coefficients", [this](const httplib::Request&,
                                            httplib::Response& res) {
      ++calls_;
      res.status = status_;
      res.set_content(response_.is_string()
                          ? response_.get<std::string>()
                          : response_.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockCoefficientServer() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  int calls() const { return calls_.load(); }

 private:
  json response_;
  int status_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
};

Prompt text_prompt(const std::string& text) {
  Prompt p;
  p.text = text;
  return p;
}

}  // namespace

TEST_CASE("remote provider: happy path, reordering, and caching") {
  const json response = {{"kind", "bt"},
                         {"models", {"beta", "alpha"}},
                         {"coefficients", {-1.0, 1.0}}};
  MockCoefficientServer server(response);
  RemoteProviderConfig config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(server.port());
  const RemoteProvider provider(config, {"alpha", "beta"});

  const Leaderboard lb = provider.evaluate(text_prompt("hi"));
  // Served in (beta, alpha) order; the client re-orders to catalog order.
  CHECK(lb.coefficients == std::vector<double>{1.0, -1.0});
  CHECK(provider.kind() == ModelKind::kBradleyTerry);

  // Cache: the same prompt never hits the network twice.
  for (int i = 0; i < 10; ++i) (void)provider.evaluate(text_prompt("hi"));
  CHECK(server.calls() == 1);
  CHECK(provider.network_calls() == 1);

  (void)provider.evaluate(text_prompt("different"));
  CHECK(server.calls() == 2);
}

TEST_CASE("remote provider error kinds are distinct") {
  SUBCASE("dimension mismatch") {
    const json response = {{"kind", "bt"},
                           {"models", {"alpha"}},
                           {"coefficients", {0.5}}};
    MockCoefficientServer server(response);
    RemoteProviderConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(server.port());
    const RemoteProvider provider(config, {"alpha", "beta"});
    CHECK_THROWS_AS((void)provider.evaluate(text_prompt("x")),
                    RemoteDimensionError);
  }
  SUBCASE("name drift is a dimension error") {
    const json response = {{"kind", "bt"},
                           {"models", {"alpha", "gamma"}},
                           {"coefficients", {0.5, -0.5}}};
    MockCoefficientServer server(response);
    RemoteProviderConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(server.port());
    const RemoteProvider provider(config, {"alpha", "beta"});
    CHECK_THROWS_AS((void)provider.evaluate(text_prompt("x")),
                    RemoteDimensionError);
  }
  SUBCASE("malformed body") {
    MockCoefficientServer server(json("this is not the protocol"));
    RemoteProviderConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(server.port());
    const RemoteProvider provider(config, {"alpha", "beta"});
    CHECK_THROWS_AS((void)provider.evaluate(text_prompt("x")),
                    RemoteProtocolError);
  }
  SUBCASE("connection failure") {
    RemoteProviderConfig config;
    config.endpoint = "http://127.0.0.1:1";  // nothing listens here
    config.timeout_seconds = 0.5;
    const RemoteProvider provider(config, {"alpha", "beta"});
    CHECK_THROWS((void)provider.evaluate(text_prompt("x")));
  }
}

TEST_CASE("service endpoints") {
  const ModelCatalog catalog({"m0", "m1"}, {2.0, 1.0});
  const ProviderPtr provider = constant_provider(Leaderboard::bt({1.0, 0.0}));
  RoutingService service(ephemeral_config(), catalog, provider);
  service.start();
  httplib::Client client("127.0.0.1", service.port());

  SUBCASE("healthz") {
    const auto res = client.Get("/healthz");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "ok");
  }

  SUBCASE("models returns the catalog") {
    const auto res = client.Get("/v1/models");
    REQUIRE(res);
    const json doc = json::parse(res->body);
    CHECK(doc["models"].size() == 2);
    CHECK(doc["models"][0]["name"] == "m0");
  }

  SUBCASE("leaderboard passthrough") {
    const auto res = client.Get("/v1/leaderboard?prompt=hello");
    REQUIRE(res);
    CHECK(res->status == 200);
    const NamedLeaderboard named = leaderboard_from_json(res->body);
    CHECK(named.leaderboard.coefficients == std::vector<double>{1.0, 0.0});
    CHECK(named.models == catalog.models());

    const auto missing = client.Get("/v1/leaderboard");
    REQUIRE(missing);
    CHECK(missing->status == 422);
  }

  SUBCASE("route: unconstrained argmax is deterministic") {
    const auto res = client.Post("/v1/route",
                                 R"({"prompt":"2+2?","budget":null})",
                                 "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json doc = json::parse(res->body);
    CHECK(doc["model"] == "m0");
    CHECK(doc["policy"][0] == 1.0);
  }

  SUBCASE("route: binding budget reproduces the hand example") {
    const auto res = client.Post(
        "/v1/route", R"({"prompt":"2+2?","budget":1.5})", "application/json");
    REQUIRE(res);
    const json doc = json::parse(res->body);
    CHECK(doc["policy"][0].get<double>() == doctest::Approx(0.5));
    CHECK(doc["policy"][1].get<double>() == doctest::Approx(0.5));
    CHECK(doc["predicted_win_rate"].get<double>() == doctest::Approx(0.5));
  }

  SUBCASE("route: infeasible budget is a 422") {
    const auto res = client.Post(
        "/v1/route", R"({"prompt":"x","budget":0.1})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body).contains("error"));
  }

  SUBCASE("route: malformed body is a 422") {
    const auto res = client.Post("/v1/route", "{", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
  }

  SUBCASE("aggregate endpoint") {
    const auto res = client.Post("/v1/leaderboard/aggregate",
                                 R"({"prompts":["a","b","a"]})",
                                 "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const NamedLeaderboard named = leaderboard_from_json(res->body);
    CHECK(named.leaderboard.num_models() == 2);

    // Duplicated prompts equal the deduplicated-with-weights aggregate.
    const Leaderboard weighted =
        aggregate(*provider,
                  PromptDistribution{
                      {text_prompt("a"), text_prompt("b")}, {2.0 / 3, 1.0 / 3}},
                  PairDistribution::uniform(2), {});
    CHECK(max_abs_diff(named.leaderboard.coefficients, weighted.coefficients) <
          1e-9);

    const auto empty = client.Post("/v1/leaderboard/aggregate",
                                   R"({"prompts":[]})", "application/json");
    REQUIRE(empty);
    CHECK(empty->status == 422);

    // Single prompt: the aggregate is that prompt's own leaderboard (up to
    // the anchor).
    const auto single = client.Post("/v1/leaderboard/aggregate",
                                    R"({"prompts":["only one"]})",
                                    "application/json");
    REQUIRE(single);
    const NamedLeaderboard single_lb = leaderboard_from_json(single->body);
    CHECK(single_lb.leaderboard.coefficients[0] -
              single_lb.leaderboard.coefficients[1] ==
          doctest::Approx(1.0).epsilon(1e-7));

    // More than 10^4 prompts is rejected.
    json big;
    big["prompts"] = json::array();
    for (int i = 0; i < 10001; ++i) big["prompts"].push_back("p");
    const auto too_many = client.Post("/v1/leaderboard/aggregate", big.dump(),
                                      "application/json");
    REQUIRE(too_many);
    CHECK(too_many->status == 422);
  }

  service.stop();
}

TEST_CASE("service: remote provider failure surfaces as 502") {
  const ModelCatalog catalog({"m0", "m1"}, {1.0, 1.0});
  RemoteProviderConfig remote_config;
  remote_config.endpoint = "http://127.0.0.1:1";
  remote_config.timeout_seconds = 0.3;
  const ProviderPtr provider =
      remote_provider(remote_config, catalog.models());
  RoutingService service(ephemeral_config(), catalog, provider);
  service.start();
  httplib::Client client("127.0.0.1", service.port());
  const auto res =
      client.Post("/v1/route", R"({"prompt":"x"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 502);
  service.stop();
}

TEST_CASE("64 concurrent identical requests return identical bodies") {
  const ModelCatalog catalog({"m0", "m1", "m2"}, {3.0, 2.0, 1.0});
  const ProviderPtr provider =
      constant_provider(Leaderboard::bt({0.8, 0.2, -1.0}));
  ServiceConfig config = ephemeral_config();
  config.max_concurrency = 16;
  RoutingService service(config, catalog, provider);
  service.start();

  const std::string request = R"({"prompt":"same prompt","budget":2.5})";
  std::vector<std::string> bodies(64);
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 64; ++t) {
    threads.emplace_back([&, t] {
      // Retry transient connect failures (OS-level backlog under the
      // thundering herd); response bodies themselves must be identical.
      for (int attempt = 0; attempt < 5; ++attempt) {
        httplib::Client client("127.0.0.1", service.port());
        client.set_connection_timeout(std::chrono::seconds(5));
        client.set_read_timeout(std::chrono::seconds(5));
        const auto res = client.Post("/v1/route", request, "application/json");
        if (res && res->status == 200) {
          bodies[t] = res->body;
          return;
        }
      }
      ++failures;
    });
  }
  for (std::thread& t : threads) t.join();
  CHECK(failures.load() == 0);
  for (int t = 1; t < 64; ++t) CHECK(bodies[t] == bodies[0]);
  service.stop();
}

TEST_CASE("service rejects a default budget below the cheapest model") {
  const ModelCatalog catalog({"m0", "m1"}, {2.0, 1.0});
  ServiceConfig config = ephemeral_config();
  config.default_budget = 0.25;
  CHECK_THROWS_AS(
      RoutingService(config, catalog,
                     constant_provider(Leaderboard::bt({0.0, 0.0}))),
      DataError);
}
