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

#include "promptlb/providers.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

namespace {

void check_dimension(const Leaderboard& lb, std::size_t num_models,
                     const char* what) {
  if (lb.num_models() != num_models) {
    throw DataError(std::string(what) + ": leaderboard dimension mismatch");
  }
}

class ConstantProvider final : public CoefficientProvider {
 public:
  explicit ConstantProvider(Leaderboard lb) : lb_(std::move(lb)) {
    if (lb_.coefficients.empty()) {
      throw DataError("constant provider: empty leaderboard");
    }
  }

  Leaderboard evaluate(const Prompt&) const override { return lb_; }
  ModelKind kind() const override { return lb_.kind; }
  std::size_t num_models() const override { return lb_.num_models(); }

 private:
  Leaderboard lb_;
};

class TableProvider final : public CoefficientProvider {
 public:
  TableProvider(std::map<std::string, Leaderboard> entries,
                std::optional<Leaderboard> fallback)
      : entries_(std::move(entries)), fallback_(std::move(fallback)) {
    if (entries_.empty() && !fallback_) {
      throw DataError("table provider: no entries and no fallback");
    }
    const Leaderboard& ref =
        fallback_ ? *fallback_ : entries_.begin()->second;
    kind_ = ref.kind;
    num_models_ = ref.num_models();
    for (const auto& [id, lb] : entries_) {
      check_dimension(lb, num_models_, "table provider");
      if (lb.kind != kind_) {
        throw DataError("table provider: mixed leaderboard kinds");
      }
    }
  }

  Leaderboard evaluate(const Prompt& prompt) const override {
    if (!prompt.id.empty()) {
      const auto it = entries_.find(prompt.id);
      if (it != entries_.end()) return it->second;
    }
    if (fallback_) return *fallback_;
    if (prompt.id.empty()) {
      throw DataError("table provider: prompt has no id and no fallback set");
    }
    throw DataError("table provider: no entry for prompt id '" + prompt.id +
                    "' and no fallback set");
  }

  ModelKind kind() const override { return kind_; }
  std::size_t num_models() const override { return num_models_; }

 private:
  std::map<std::string, Leaderboard> entries_;
  std::optional<Leaderboard> fallback_;
  ModelKind kind_;
  std::size_t num_models_;
};

class CategoryProvider final : public CoefficientProvider {
 public:
  CategoryProvider(std::map<std::string, Leaderboard> per_category,
                   std::size_t level, std::optional<Leaderboard> fallback)
      : per_category_(std::move(per_category)),
        level_(level),
        fallback_(std::move(fallback)) {
    if (per_category_.empty()) {
      throw DataError("category provider: no categories");
    }
    const Leaderboard& ref = per_category_.begin()->second;
    kind_ = ref.kind;
    num_models_ = ref.num_models();
    for (const auto& [label, lb] : per_category_) {
      check_dimension(lb, num_models_, "category provider");
      if (lb.kind != kind_) {
        throw DataError("category provider: mixed leaderboard kinds");
      }
    }
    if (fallback_) check_dimension(*fallback_, num_models_, "category provider");
  }

  Leaderboard evaluate(const Prompt& prompt) const override {
    if (prompt.category_path.size() > level_) {
      const auto it = per_category_.find(prompt.category_path[level_]);
      if (it != per_category_.end()) return it->second;
    }
    if (fallback_) return *fallback_;
    if (prompt.category_path.size() <= level_) {
      throw DataError("category provider: prompt has no category at level " +
                      std::to_string(level_) + " and no fallback set");
    }
    throw DataError("category provider: unknown category '" +
                    prompt.category_path[level_] + "' and no fallback set");
  }

  ModelKind kind() const override { return kind_; }
  std::size_t num_models() const override { return num_models_; }

 private:
  std::map<std::string, Leaderboard> per_category_;
  std::size_t level_;
  std::optional<Leaderboard> fallback_;
  ModelKind kind_;
  std::size_t num_models_;
};

}  // namespace

ProviderPtr constant_provider(Leaderboard lb) {
  return std::make_shared<ConstantProvider>(std::move(lb));
}

ProviderPtr table_provider(std::map<std::string, Leaderboard> entries,
                           std::optional<Leaderboard> fallback) {
  return std::make_shared<TableProvider>(std::move(entries),
                                         std::move(fallback));
}

ProviderPtr category_provider(std::map<std::string, Leaderboard> per_category,
                              std::size_t level,
                              std::optional<Leaderboard> fallback) {
  return std::make_shared<CategoryProvider>(std::move(per_category), level,
                                            std::move(fallback));
}

Featurizer::Featurizer(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) throw DataError("featurizer: dimension must be >= 2");
}

namespace {

// FNV-1a, 64-bit; the platform-independent choice over std::hash.
std::uint64_t fnv1a(const char* data, std::size_t len) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::vector<FeatureEntry> Featurizer::featurize(const std::string& text) const {
  if (text.empty()) throw DataError("featurizer: empty prompt text");

  std::vector<std::pair<std::uint32_t, double>> hashed;
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) return;
    const std::uint64_t h = fnv1a(token.data(), token.size());
    const auto index =
        static_cast<std::uint32_t>(1 + h % static_cast<std::uint64_t>(dim_ - 1));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    hashed.emplace_back(index, sign);
    token.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      token.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      flush_token();
    }
  }
  flush_token();

  std::sort(hashed.begin(), hashed.end());
  std::vector<FeatureEntry> features;
  features.reserve(hashed.size() + 1);
  features.push_back({0, 1.0});  // bias
  for (std::size_t i = 0; i < hashed.size();) {
    const std::uint32_t index = hashed[i].first;
    double value = 0.0;
    while (i < hashed.size() && hashed[i].first == index) {
      value += hashed[i].second;
      ++i;
    }
    if (value != 0.0) features.push_back({index, value});
  }
  return features;
}

FeatureLinearProvider::FeatureLinearProvider(ModelKind kind,
                                             std::size_t num_models,
                                             Featurizer featurizer)
    : kind_(kind),
      num_models_(num_models),
      num_outputs_(kind == ModelKind::kBradleyTerry ? num_models
                                                    : num_models + 1),
      featurizer_(featurizer),
      weights_(featurizer.dim() * num_outputs_, 0.0) {
  if (num_models_ < 2) {
    throw DataError("feature linear provider: need at least two models");
  }
}

std::vector<double> FeatureLinearProvider::raw_outputs(
    const Prompt& prompt) const {
  std::vector<double> out(num_outputs_, 0.0);
  for (const FeatureEntry& f : featurizer_.featurize(prompt.text)) {
    const double* row = &weights_[std::size_t{f.index} * num_outputs_];
    for (std::size_t c = 0; c < num_outputs_; ++c) out[c] += f.value * row[c];
  }
  return out;
}

Leaderboard FeatureLinearProvider::evaluate(const Prompt& prompt) const {
  std::vector<double> out = raw_outputs(prompt);
  switch (kind_) {
    case ModelKind::kBradleyTerry:
      return Leaderboard::bt(std::move(out));
    case ModelKind::kRaoKupper: {
      const double eta = out.back();
      out.pop_back();
      return Leaderboard::rk(std::move(out), eta);
    }
    case ModelKind::kGroundedRaoKupper: {
      const double lambda = 1.0 + softplus(out.back());
      out.pop_back();
      return Leaderboard::grounded_rk(std::move(out), lambda);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace promptlb
