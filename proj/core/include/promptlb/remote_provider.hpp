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

#ifndef PROMPTLB_REMOTE_PROVIDER_HPP_
#define PROMPTLB_REMOTE_PROVIDER_HPP_

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "promptlb/providers.hpp"

namespace promptlb {

struct RemoteProviderConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8100
  double timeout_seconds = 5.0;
  std::size_t cache_capacity = 1024;
};

// Client for a served coefficient head speaking the wire protocol
//   POST /v1/coefficients {"prompt": str}
//   -> {"kind","models","coefficients","eta"?,"lambda"?}
//
// The response carries model names, which are re-ordered to the expected
// catalog order on every call; any name-set or dimension drift raises
// RemoteDimensionError rather than silently mis-indexing. Responses are
// cached (LRU, keyed by prompt id when present, else by full text).
// Timeouts, malformed responses, and dimension mismatches surface as the
// three distinct Remote*Error kinds; there is no fallback.
class RemoteProvider : public CoefficientProvider {
 public:
  RemoteProvider(RemoteProviderConfig config,
                 std::vector<std::string> expected_models);

  Leaderboard evaluate(const Prompt& prompt) const override;
  ModelKind kind() const override;
  std::size_t num_models() const override { return expected_models_.size(); }

  // Requests actually sent over the wire (cache hits excluded).
  std::uint64_t network_calls() const;

 private:
  Leaderboard fetch(const std::string& prompt_text) const;

  RemoteProviderConfig config_;
  std::vector<std::string> expected_models_;

  mutable std::mutex mutex_;
  mutable std::list<std::pair<std::string, Leaderboard>> lru_;
  mutable std::unordered_map<std::string, decltype(lru_)::iterator> cache_;
  mutable std::uint64_t network_calls_ = 0;
  mutable bool kind_known_ = false;
  mutable ModelKind kind_ = ModelKind::kBradleyTerry;
};

ProviderPtr remote_provider(RemoteProviderConfig config,
                            std::vector<std::string> expected_models);

}  // namespace promptlb

#endif  // PROMPTLB_REMOTE_PROVIDER_HPP_
