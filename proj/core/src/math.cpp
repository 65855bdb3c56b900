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

#include "promptlb/math.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace promptlb {

double find_root_increasing(const std::function<double(double)>& f, double lo,
                            double hi, double f_tol) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (std::abs(f_lo) <= f_tol) return lo;
  if (std::abs(f_hi) <= f_tol) return hi;
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw std::invalid_argument("find_root_increasing: root not bracketed");
  }

  double x = 0.5 * (lo + hi);
  double previous_width = hi - lo;
  bool force_bisect = false;
  for (int iter = 0; iter < 200; ++iter) {
    // Secant proposal from the bracket endpoints, falling back to bisection
    // when degenerate, out of bounds, or when the last step failed to halve
    // the bracket (guarantees at least linear convergence).
    double s = (f_hi != f_lo) ? lo - f_lo * (hi - lo) / (f_hi - f_lo)
                              : 0.5 * (lo + hi);
    const double margin = 1e-3 * (hi - lo);
    if (force_bisect || !(s > lo + margin && s < hi - margin)) {
      s = 0.5 * (lo + hi);
    }
    const double f_s = f(s);
    x = s;
    if (std::abs(f_s) <= f_tol) return x;
    if (f_s < 0.0) {
      lo = s;
      f_lo = f_s;
    } else {
      hi = s;
      f_hi = f_s;
    }
    force_bisect = (hi - lo) > 0.5 * previous_width;
    previous_width = hi - lo;
    if (hi - lo <= std::numeric_limits<double>::epsilon() *
                       (std::abs(lo) + std::abs(hi) + 1.0)) {
      break;
    }
  }
  return std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(
    const std::function<double(const std::vector<double>&,
                               std::vector<double>&)>& fn,
    std::vector<double> x0, const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);

  std::vector<double> grad(n, 0.0);
  double fx = fn(result.x, grad);
  if (!std::isfinite(fx)) {
    throw std::invalid_argument("lbfgs_minimize: objective not finite at x0");
  }

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  std::vector<double> direction(n), x_new(n), grad_new(n);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    result.grad_inf_norm = inf_norm(grad);
    if (result.grad_inf_norm <= options.grad_tolerance) {
      result.converged = true;
      break;
    }
    result.iterations = iter + 1;

    // Two-loop recursion.
    direction = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], direction);
      for (std::size_t i = 0; i < n; ++i)
        direction[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) /
                           std::max(dot(y_hist.back(), y_hist.back()), 1e-300);
      for (double& d : direction) d *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], direction);
      for (std::size_t i = 0; i < n; ++i)
        direction[i] += (alpha[k] - beta) * s_hist[k][i];
    }
    for (double& d : direction) d = -d;

    double dir_dot_grad = dot(direction, grad);
    if (dir_dot_grad >= 0.0) {
      // Not a descent direction; reset to steepest descent.
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      dir_dot_grad = -dot(grad, grad);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Armijo backtracking.
    constexpr double kArmijo = 1e-4;
    double step = 1.0;
    double fx_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i)
        x_new[i] = result.x[i] + step * direction[i];
      fx_new = fn(x_new, grad_new);
      if (std::isfinite(fx_new) &&
          fx_new <= fx + kArmijo * step * dir_dot_grad) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // numerically stuck; report best point so far

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - result.x[i];
      y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    result.x.swap(x_new);
    grad.swap(grad_new);
    fx = fx_new;
    result.grad_inf_norm = inf_norm(grad);
    if (result.grad_inf_norm <= options.grad_tolerance) {
      result.converged = true;
      break;
    }
  }

  result.fx = fx;
  result.grad_inf_norm = inf_norm(grad);
  if (result.grad_inf_norm <= options.grad_tolerance) result.converged = true;
  return result;
}

}  // namespace promptlb
