// Copyright 2026 The smodice-tabular Authors.
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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

#include "smodice/error.hpp"
#include "smodice/mdp.hpp"

namespace smodice {

enum class FDivKind { ChiSquared, KL };

inline std::string_view to_string(FDivKind kind) {
  return kind == FDivKind::ChiSquared ? "chi2" : "kl";
}

inline FDivKind parse_fdiv_kind(std::string_view name) {
  if (name == "chi2" || name == "chi-squared") return FDivKind::ChiSquared;
  if (name == "kl") return FDivKind::KL;
  throw ValidationError("unknown divergence '" + std::string(name) + "' (expected chi2 or kl)");
}

/**
 * A convex generator f with f(1) = 0, its Fenchel conjugate and the
 * conjugate's derivative.
 *
 * The conjugate is taken over the ratio domain x >= 0, which is where density
 * ratios live: f*(y) = sup_{x>=0} x*y - f(x). Its derivative is the maximizing
 * ratio, i.e. the importance weight.
 */
struct FDivergenceSpec {
  FDivKind kind;
  std::function<double(double)> f;
  std::function<double(double)> f_conj;
  std::function<double(double)> f_conj_deriv;
};

inline FDivergenceSpec chi_squared() {
  return {FDivKind::ChiSquared,
          [](double x) { return x < 0.0 ? std::numeric_limits<double>::infinity()
                                        : 0.5 * (x - 1.0) * (x - 1.0); },
          [](double y) { return y >= -1.0 ? 0.5 * (y + 1.0) * (y + 1.0) - 0.5 : -0.5; },
          [](double y) { return std::max(0.0, y + 1.0); }};
}

inline FDivergenceSpec kullback_leibler() {
  return {FDivKind::KL,
          [](double x) {
            if (x < 0.0) return std::numeric_limits<double>::infinity();
            return x == 0.0 ? 0.0 : x * std::log(x);
          },
          [](double y) { return std::exp(y - 1.0); },
          [](double y) { return std::exp(y - 1.0); }};
}

inline FDivergenceSpec make_divergence(FDivKind kind) {
  return kind == FDivKind::ChiSquared ? chi_squared() : kullback_leibler();
}

/// D_f(p || q) = sum_x q(x) f(p(x) / q(x)).
inline double divergence(const FDivergenceSpec& spec, const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw ValidationError("divergence: p and q differ in size");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0) throw SupportMismatchError(static_cast<std::size_t>(i), p[i], q[i]);
      continue;
    }
    total += q[i] * spec.f(p[i] / q[i]);
  }
  return total;
}

struct ConjugateValue {
  double value;
  double deriv;
};

/**
 * The chi-squared conjugate in the form used by the dual value objective,
 * 1/2 (y+1)^2 with derivative y+1. It differs from the exact conjugate of
 * 1/2 (x-1)^2 over the reals by the constant 1/2, which does not move minimizers.
 */
inline ConjugateValue conjugate_chi2(double y) {
  return {0.5 * (y + 1.0) * (y + 1.0), y + 1.0};
}

/// log sum_i w_i exp(v_i), shifted by the max over the support of w.
inline double conjugate_kl_expectation(const Vector& values, const Vector& weights) {
  if (values.size() != weights.size())
    throw ValidationError("conjugate_kl_expectation: size mismatch");
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (weights[i] > 0.0) shift = std::max(shift, values[i]);
  if (!std::isfinite(shift))
    throw ValidationError("conjugate_kl_expectation: weights have no finite support");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (weights[i] > 0.0) acc += weights[i] * std::exp(values[i] - shift);
  return shift + std::log(acc);
}

/**
 * Importance weights xi = d* / d^O implied by advantages y = R + gamma*TV - V.
 *
 * Chi-squared: xi = max(0, y + 1); the floor means sum d^O xi need not be 1.
 * KL: xi = exp(y) / E_{d^O}[exp(y)], normalized so that sum d^O xi = 1.
 * Pairs outside the support of d^O get weight 0 under KL.
 */
inline Vector primal_weights(const FDivergenceSpec& spec, const Vector& advantages,
                             const Vector& d_O) {
  if (advantages.size() != d_O.size()) throw ValidationError("primal_weights: size mismatch");
  Vector xi(advantages.size());
  if (spec.kind == FDivKind::ChiSquared) {
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = std::max(0.0, advantages[i] + 1.0);
    return xi;
  }
  const double log_norm = conjugate_kl_expectation(advantages, d_O);
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    xi[i] = d_O[i] > 0.0 ? std::exp(advantages[i] - log_norm) : 0.0;
  return xi;
}

/// sum_x (p+eps) log((p+eps)/(q+eps)); finite even when supports differ.
inline double kl_smoothed(const Vector& p, const Vector& q, double eps = 1e-8) {
  if (p.size() != q.size()) throw ValidationError("kl_smoothed: size mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = p[i] + eps, b = q[i] + eps;
    total += a * std::log(a / b);
  }
  return total;
}

}  // namespace smodice
