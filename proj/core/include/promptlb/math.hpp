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

#ifndef PROMPTLB_MATH_HPP_
#define PROMPTLB_MATH_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace promptlb {

// Two-branch logistic sigmoid; never exponentiates a positive argument, so it
// is overflow-free for any finite x and satisfies sigmoid(x)+sigmoid(-x)==1
// to within one ulp.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without intermediate underflow.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// d/dx sigmoid(x) = sigmoid(x) * (1 - sigmoid(x)).
inline double sigmoid_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

// softplus(x) = log(1 + exp(x)), overflow-free.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Inverse of softplus on (0, inf): softplus(inverse_softplus(y)) == y.
inline double inverse_softplus(double y) { return std::log(std::expm1(y)); }

// Binary cross-entropy of predicted probability q against soft label p,
// evaluated from the logit s of q:  -p*log(sigmoid(s)) - (1-p)*log(sigmoid(-s)).
inline double bce_from_logit(double s, double p) {
  return -p * log_sigmoid(s) - (1.0 - p) * log_sigmoid(-s);
}

// Finds the root of a strictly increasing function f on [lo, hi], assuming
// f(lo) <= 0 <= f(hi). Secant steps refined against a maintained bracket,
// falling back to bisection whenever the secant proposal leaves the bracket
// or fails to shrink it. Stops when |f(x)| <= f_tol or the bracket collapses.
double find_root_increasing(const std::function<double(double)>& f, double lo,
                            double hi, double f_tol);

struct LbfgsOptions {
  std::size_t max_iters = 500;
  double grad_tolerance = 1e-8;  // infinity norm
  std::size_t history = 10;
};

struct LbfgsResult {
  std::vector<double> x;
  double fx = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double grad_inf_norm = 0.0;
};

// Limited-memory BFGS with Armijo backtracking. `fn` evaluates the objective
// at x and writes its gradient; it may return +inf to reject a point (the
// line search then backtracks). Intended for smooth convex objectives of
// modest dimension.
LbfgsResult lbfgs_minimize(
    const std::function<double(const std::vector<double>&,
                               std::vector<double>&)>& fn,
    std::vector<double> x0, const LbfgsOptions& options = {});

}  // namespace promptlb

#endif  // PROMPTLB_MATH_HPP_
