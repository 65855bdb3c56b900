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

#include "promptlb/feedback_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "promptlb/errors.hpp"
#include "promptlb/math.hpp"

namespace promptlb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_pair(ModelPair pair, std::size_t num_models) {
  if (pair.a == pair.b) {
    throw std::invalid_argument("model pair: A and B must differ");
  }
  if (pair.a >= num_models || pair.b >= num_models) {
    throw std::out_of_range("model pair: index out of range");
  }
}

// Shared grounded-RK evaluation. All terms are scaled by exp(-m) with
// m = max(beta_a, beta_b, 0); the ratios are unchanged and no exp overflows.
struct GrkTerms {
  double ea, eb, e0;      // scaled phi_A, phi_B, 1
  double da, db, s;       // P(A), P(B), P(bad) denominators
  GrkProbs probs;
};

GrkTerms grk_terms(double beta_a, double beta_b, double lambda) {
  if (!(lambda >= 1.0)) {
    throw InvalidParameterError("grounded Rao-Kupper: lambda must be >= 1");
  }
  GrkTerms t;
  const double m = std::max({beta_a, beta_b, 0.0});
  t.ea = std::exp(beta_a - m);
  t.eb = std::exp(beta_b - m);
  t.e0 = std::exp(-m);
  t.da = t.ea + lambda * t.eb + t.e0;
  t.db = t.eb + lambda * t.ea + t.e0;
  t.s = t.e0 + t.ea + t.eb;
  t.probs.win_a = t.ea / t.da;
  t.probs.win_b = t.eb / t.db;
  t.probs.both_bad = t.e0 / t.s;
  // For lambda >= 1 the tie mass is nonnegative (zero exactly at lambda = 1);
  // clamp the subtraction's rounding residue.
  t.probs.tie = std::max(
      0.0, 1.0 - t.probs.win_a - t.probs.win_b - t.probs.both_bad);
  return t;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBradleyTerry:
      return "bt";
    case ModelKind::kRaoKupper:
      return "rk";
    case ModelKind::kGroundedRaoKupper:
      return "grounded_rk";
  }
  return "bt";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "bt") return ModelKind::kBradleyTerry;
  if (name == "rk") return ModelKind::kRaoKupper;
  if (name == "grounded_rk") return ModelKind::kGroundedRaoKupper;
  throw DataError("unknown model kind: '" + name + "'");
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kWinA:
      return "model_a";
    case Outcome::kWinB:
      return "model_b";
    case Outcome::kTie:
      return "tie";
    case Outcome::kBothBad:
      return "tie_both_bad";
  }
  return "model_a";
}

Leaderboard Leaderboard::bt(std::vector<double> theta) {
  Leaderboard lb;
  lb.kind = ModelKind::kBradleyTerry;
  lb.coefficients = std::move(theta);
  return lb;
}

Leaderboard Leaderboard::rk(std::vector<double> theta, double eta) {
  Leaderboard lb;
  lb.kind = ModelKind::kRaoKupper;
  lb.coefficients = std::move(theta);
  lb.eta = eta;
  return lb;
}

Leaderboard Leaderboard::grounded_rk(std::vector<double> beta, double lambda) {
  Leaderboard lb;
  lb.kind = ModelKind::kGroundedRaoKupper;
  lb.coefficients = std::move(beta);
  lb.lambda = lambda;
  return lb;
}

Leaderboard to_bt(const Leaderboard& lb) {
  Leaderboard out;
  out.kind = ModelKind::kBradleyTerry;
  out.coefficients = lb.coefficients;
  out.anchor = lb.anchor;
  return out;
}

double bt_prob(const BtParams& params, ModelPair pair) {
  check_pair(pair, params.theta.size());
  return sigmoid(params.theta[pair.b] - params.theta[pair.a]);
}

RkProbs rk_probs(const RkParams& params, ModelPair pair) {
  check_pair(pair, params.theta.size());
  const double gap = params.theta[pair.b] - params.theta[pair.a];
  RkProbs p;
  p.win_b = sigmoid(gap - params.eta);
  p.win_a = sigmoid(-gap - params.eta);
  p.tie = 1.0 - p.win_a - p.win_b;
  if (p.tie < -1e-12) {
    throw InvalidParameterError(
        "Rao-Kupper: eta implies negative tie probability");
  }
  p.tie = std::max(0.0, p.tie);
  return p;
}

GrkProbs grk_probs(const GroundedRkParams& params, ModelPair pair) {
  check_pair(pair, params.beta.size());
  return grk_terms(params.beta[pair.a], params.beta[pair.b], params.lambda)
      .probs;
}

OutcomeProbs outcome_probabilities(const Leaderboard& lb, ModelPair pair) {
  check_pair(pair, lb.coefficients.size());
  OutcomeProbs out;
  switch (lb.kind) {
    case ModelKind::kBradleyTerry: {
      out.win_b = sigmoid(lb.coefficients[pair.b] - lb.coefficients[pair.a]);
      out.win_a = 1.0 - out.win_b;
      break;
    }
    case ModelKind::kRaoKupper: {
      const RkProbs p = rk_probs({lb.coefficients, lb.eta}, pair);
      out.win_a = p.win_a;
      out.win_b = p.win_b;
      out.tie = p.tie;
      break;
    }
    case ModelKind::kGroundedRaoKupper: {
      const GrkTerms t =
          grk_terms(lb.coefficients[pair.a], lb.coefficients[pair.b],
                    lb.lambda);
      out.win_a = t.probs.win_a;
      out.win_b = t.probs.win_b;
      out.tie = t.probs.tie;
      out.both_bad = t.probs.both_bad;
      break;
    }
  }
  return out;
}

double log_likelihood(const Leaderboard& lb, ModelPair pair, Outcome outcome) {
  check_pair(pair, lb.coefficients.size());
  switch (lb.kind) {
    case ModelKind::kBradleyTerry: {
      const double gap = lb.coefficients[pair.b] - lb.coefficients[pair.a];
      if (outcome == Outcome::kWinB) return log_sigmoid(gap);
      if (outcome == Outcome::kWinA) return log_sigmoid(-gap);
      throw InvalidParameterError(
          "Bradley-Terry supports only win/loss outcomes");
    }
    case ModelKind::kRaoKupper: {
      const double gap = lb.coefficients[pair.b] - lb.coefficients[pair.a];
      if (outcome == Outcome::kWinB) return log_sigmoid(gap - lb.eta);
      if (outcome == Outcome::kWinA) return log_sigmoid(-gap - lb.eta);
      if (outcome == Outcome::kTie) {
        const double tie =
            1.0 - sigmoid(gap - lb.eta) - sigmoid(-gap - lb.eta);
        return tie > 0.0 ? std::log(tie) : kNegInf;
      }
      throw InvalidParameterError("Rao-Kupper does not support 'both bad'");
    }
    case ModelKind::kGroundedRaoKupper: {
      const GrkTerms t = grk_terms(lb.coefficients[pair.a],
                                   lb.coefficients[pair.b], lb.lambda);
      switch (outcome) {
        case Outcome::kWinA:
          return std::log(t.ea) - std::log(t.da);
        case Outcome::kWinB:
          return std::log(t.eb) - std::log(t.db);
        case Outcome::kBothBad:
          return std::log(t.e0) - std::log(t.s);
        case Outcome::kTie:
          return t.probs.tie > 0.0 ? std::log(t.probs.tie) : kNegInf;
      }
      break;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<double> log_likelihood_gradient(const Leaderboard& lb,
                                            ModelPair pair, Outcome outcome) {
  check_pair(pair, lb.coefficients.size());
  const std::size_t m = lb.coefficients.size();
  const std::size_t a = pair.a;
  const std::size_t b = pair.b;

  switch (lb.kind) {
    case ModelKind::kBradleyTerry: {
      std::vector<double> grad(m, 0.0);
      const double gap = lb.coefficients[b] - lb.coefficients[a];
      if (outcome == Outcome::kWinB) {
        const double c = sigmoid(-gap);  // 1 - P(B wins)
        grad[b] = c;
        grad[a] = -c;
      } else if (outcome == Outcome::kWinA) {
        const double c = sigmoid(gap);
        grad[a] = c;
        grad[b] = -c;
      } else {
        throw InvalidParameterError(
            "Bradley-Terry supports only win/loss outcomes");
      }
      return grad;
    }

    case ModelKind::kRaoKupper: {
      std::vector<double> grad(m + 1, 0.0);
      const double gap = lb.coefficients[b] - lb.coefficients[a];
      const double sb = gap - lb.eta;   // logit of P(B)
      const double sa = -gap - lb.eta;  // logit of P(A)
      if (outcome == Outcome::kWinB) {
        const double c = sigmoid(-sb);
        grad[b] = c;
        grad[a] = -c;
        grad[m] = -c;
      } else if (outcome == Outcome::kWinA) {
        const double c = sigmoid(-sa);
        grad[a] = c;
        grad[b] = -c;
        grad[m] = -c;
      } else if (outcome == Outcome::kTie) {
        const double tie = 1.0 - sigmoid(sa) - sigmoid(sb);
        if (tie <= 0.0) {
          throw InvalidParameterError(
              "Rao-Kupper: zero tie mass has no gradient");
        }
        const double ga = sigmoid_grad(sa);
        const double gb = sigmoid_grad(sb);
        grad[b] = (ga - gb) / tie;
        grad[a] = (gb - ga) / tie;
        grad[m] = (ga + gb) / tie;
      } else {
        throw InvalidParameterError("Rao-Kupper does not support 'both bad'");
      }
      return grad;
    }

    case ModelKind::kGroundedRaoKupper: {
      std::vector<double> grad(m + 1, 0.0);
      const GrkTerms t =
          grk_terms(lb.coefficients[a], lb.coefficients[b], lb.lambda);
      const double lambda = lb.lambda;
      switch (outcome) {
        case Outcome::kWinA:
          grad[a] = 1.0 - t.ea / t.da;
          grad[b] = -lambda * t.eb / t.da;
          grad[m] = -t.eb / t.da;
          break;
        case Outcome::kWinB:
          grad[b] = 1.0 - t.eb / t.db;
          grad[a] = -lambda * t.ea / t.db;
          grad[m] = -t.ea / t.db;
          break;
        case Outcome::kBothBad:
          grad[a] = -t.ea / t.s;
          grad[b] = -t.eb / t.s;
          break;
        case Outcome::kTie: {
          if (t.probs.tie <= 0.0) {
            throw InvalidParameterError(
                "grounded Rao-Kupper: zero tie mass has no gradient");
          }
          // d tie = -(d pA + d pB + d pBad) for each coordinate.
          const double pa = t.probs.win_a;
          const double pb = t.probs.win_b;
          const double pbad = t.probs.both_bad;
          const double d_a = pa * (1.0 - t.ea / t.da) +
                             pb * (-lambda * t.ea / t.db) +
                             pbad * (-t.ea / t.s);
          const double d_b = pa * (-lambda * t.eb / t.da) +
                             pb * (1.0 - t.eb / t.db) + pbad * (-t.eb / t.s);
          const double d_l = pa * (-t.eb / t.da) + pb * (-t.ea / t.db);
          grad[a] = -d_a / t.probs.tie;
          grad[b] = -d_b / t.probs.tie;
          grad[m] = -d_l / t.probs.tie;
          break;
        }
      }
      return grad;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace promptlb
