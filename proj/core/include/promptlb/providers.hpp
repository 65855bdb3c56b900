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

#ifndef PROMPTLB_PROVIDERS_HPP_
#define PROMPTLB_PROVIDERS_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptlb/feedback_models.hpp"

namespace promptlb {

struct Prompt {
  std::string id;    // optional stable identifier
  std::string text;  // nonempty UTF-8
  std::vector<std::string> category_path;  // one label per hierarchy level
};

// Maps prompts to leaderboards. Implementations are deterministic (same
// prompt, same leaderboard), emit a fixed dimension, and are safe for
// concurrent callers.
class CoefficientProvider {
 public:
  virtual ~CoefficientProvider() = default;
  virtual Leaderboard evaluate(const Prompt& prompt) const = 0;
  virtual ModelKind kind() const = 0;
  virtual std::size_t num_models() const = 0;
};

using ProviderPtr = std::shared_ptr<const CoefficientProvider>;

// The same leaderboard for every prompt; embeds a marginal regression result
// as a (constant) prompt-conditional provider.
ProviderPtr constant_provider(Leaderboard lb);

// Lookup by prompt id with an optional fallback for misses (and for prompts
// without an id). Missing entry with no fallback is a DataError.
ProviderPtr table_provider(std::map<std::string, Leaderboard> entries,
                           std::optional<Leaderboard> fallback = std::nullopt);

// Selects by category_path[level]; unknown labels or missing levels fall back
// to `fallback` (DataError when absent).
ProviderPtr category_provider(std::map<std::string, Leaderboard> per_category,
                              std::size_t level,
                              std::optional<Leaderboard> fallback = std::nullopt);

struct FeatureEntry {
  std::uint32_t index = 0;
  double value = 0.0;
};

// Hashed bag-of-words featurizer: lowercase, split on non-alphanumerics,
// signed hashing into `dim` buckets. Index 0 is a constant bias feature, so
// tokens hash into [1, dim). Deterministic across platforms (FNV-1a).
class Featurizer {
 public:
  static constexpr std::size_t kDefaultDim = std::size_t{1} << 16;

  explicit Featurizer(std::size_t dim = kDefaultDim);

  // Sparse feature vector, entries sorted by index, bias entry first.
  std::vector<FeatureEntry> featurize(const std::string& text) const;

  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
};

// Linear model over hashed prompt features: theta(z) = W^T phi(z), with one
// output column per model plus a tie column (eta) for RK or a grounding
// column for grounded RK (mapped through lambda = 1 + softplus so the
// constraint lambda >= 1 always holds). Zero weights give the all-zeros BT
// leaderboard, i.e. the uniform 0.5 predictor.
class FeatureLinearProvider : public CoefficientProvider {
 public:
  FeatureLinearProvider(ModelKind kind, std::size_t num_models,
                        Featurizer featurizer = Featurizer());

  Leaderboard evaluate(const Prompt& prompt) const override;
  ModelKind kind() const override { return kind_; }
  std::size_t num_models() const override { return num_models_; }

  const Featurizer& featurizer() const { return featurizer_; }

  // M columns for BT; M+1 for RK/grounded RK (the extra raw output feeds eta
  // or the lambda reparameterization).
  std::size_t num_outputs() const { return num_outputs_; }

  // Row-major [dim x num_outputs] weight matrix.
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& mutable_weights() { return weights_; }

  // Raw linear outputs W^T phi(z), before any reparameterization.
  std::vector<double> raw_outputs(const Prompt& prompt) const;

 private:
  ModelKind kind_;
  std::size_t num_models_;
  std::size_t num_outputs_;
  Featurizer featurizer_;
  std::vector<double> weights_;
};

}  // namespace promptlb

#endif  // PROMPTLB_PROVIDERS_HPP_
