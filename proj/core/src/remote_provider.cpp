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

#include "promptlb/remote_provider.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "promptlb/errors.hpp"

namespace promptlb {

using nlohmann::json;

RemoteProvider::RemoteProvider(RemoteProviderConfig config,
                               std::vector<std::string> expected_models)
    : config_(std::move(config)),
      expected_models_(std::move(expected_models)) {
  if (expected_models_.empty()) {
    throw DataError("remote provider: expected model list is empty");
  }
  if (config_.cache_capacity == 0) config_.cache_capacity = 1;
}

ModelKind RemoteProvider::kind() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return kind_;
}

std::uint64_t RemoteProvider::network_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return network_calls_;
}

Leaderboard RemoteProvider::evaluate(const Prompt& prompt) const {
  const std::string& key = prompt.id.empty() ? prompt.text : prompt.id;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
  }

  Leaderboard lb = fetch(prompt.text);

  std::lock_guard<std::mutex> lock(mutex_);
  ++network_calls_;
  if (kind_known_ && lb.kind != kind_) {
    throw RemoteProtocolError("remote provider: server changed model kind");
  }
  kind_ = lb.kind;
  kind_known_ = true;
  const auto it = cache_.find(key);
  if (it == cache_.end()) {
    lru_.emplace_front(key, lb);
    cache_[key] = lru_.begin();
    if (lru_.size() > config_.cache_capacity) {
      cache_.erase(lru_.back().first);
      lru_.pop_back();
    }
  }
  return lb;
}

Leaderboard RemoteProvider::fetch(const std::string& prompt_text) const {
  httplib::Client client(config_.endpoint);
  const auto timeout =
      std::chrono::milliseconds(static_cast<long long>(
          std::max(1.0, config_.timeout_seconds * 1000.0)));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const std::string body = json{{"prompt", prompt_text}}.dump();
  httplib::Result res =
      client.Post("/v1/coefficients", body, "application/json");
  if (!res) {
    const httplib::Error err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        err == httplib::Error::Read || err == httplib::Error::Write) {
      throw RemoteTimeoutError("remote provider: request to '" +
                               config_.endpoint + "' timed out");
    }
    throw RemoteProtocolError("remote provider: request to '" +
                              config_.endpoint + "' failed (" +
                              httplib::to_string(err) + ")");
  }
  if (res->status != 200) {
    throw RemoteProtocolError("remote provider: HTTP " +
                              std::to_string(res->status));
  }

  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::exception& e) {
    throw RemoteProtocolError(
        std::string("remote provider: response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc.contains("models") ||
      !doc.contains("coefficients") || !doc["models"].is_array() ||
      !doc["coefficients"].is_array()) {
    throw RemoteProtocolError(
        "remote provider: response missing kind/models/coefficients");
  }

  ModelKind kind;
  try {
    kind = model_kind_from_string(doc["kind"].get<std::string>());
  } catch (const DataError& e) {
    throw RemoteProtocolError(e.what());
  }
  const auto models = doc["models"].get<std::vector<std::string>>();
  const auto coefficients = doc["coefficients"].get<std::vector<double>>();
  if (models.size() != coefficients.size()) {
    throw RemoteProtocolError(
        "remote provider: models/coefficients length mismatch");
  }
  if (models.size() != expected_models_.size()) {
    throw RemoteDimensionError(
        "remote provider: served " + std::to_string(models.size()) +
        " models, catalog has " + std::to_string(expected_models_.size()));
  }

  // Re-order the served coefficients into catalog index order by name.
  std::vector<double> ordered(expected_models_.size());
  for (std::size_t i = 0; i < expected_models_.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < models.size(); ++j) {
      if (models[j] == expected_models_[i]) {
        ordered[i] = coefficients[j];
        found = true;
        break;
      }
    }
    if (!found) {
      throw RemoteDimensionError("remote provider: catalog model '" +
                                 expected_models_[i] +
                                 "' missing from response");
    }
  }
  for (double c : ordered) {
    if (!std::isfinite(c)) {
      throw RemoteProtocolError("remote provider: non-finite coefficient");
    }
  }

  switch (kind) {
    case ModelKind::kBradleyTerry:
      return Leaderboard::bt(std::move(ordered));
    case ModelKind::kRaoKupper: {
      if (!doc.contains("eta")) {
        throw RemoteProtocolError("remote provider: rk response needs eta");
      }
      return Leaderboard::rk(std::move(ordered), doc["eta"].get<double>());
    }
    case ModelKind::kGroundedRaoKupper: {
      if (!doc.contains("lambda")) {
        throw RemoteProtocolError(
            "remote provider: grounded_rk response needs lambda");
      }
      const double lambda = doc["lambda"].get<double>();
      if (lambda < 1.0) {
        throw RemoteProtocolError("remote provider: lambda < 1");
      }
      return Leaderboard::grounded_rk(std::move(ordered), lambda);
    }
  }
  throw std::logic_error("unreachable");
}

ProviderPtr remote_provider(RemoteProviderConfig config,
                            std::vector<std::string> expected_models) {
  return std::make_shared<RemoteProvider>(std::move(config),
                                          std::move(expected_models));
}

}  // namespace promptlb
