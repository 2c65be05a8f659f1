#pragma once

// Empirical risks of the mean-localization model in terms of the standardized
// noise xi, with Xbar = mu0 + s xi and s = sigma / sqrt(n).
//
// On binary hypotheses the squared loss, the linear form and the hit form
// differ only by mu-independent constants (the hit form needs |mu|_1 = k),
// so they induce the same Gibbs distribution at every beta.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gcsim/hypothesis.hpp"
#include "gcsim/model.hpp"

namespace gcsim {

enum class CostKind {
  squared_l2,  // ||mu - Xbar||_2^2
  linear,      // mu^T (1 - 2 s xi - 2 mu0)
  hits,        // -2 [h + s mu^T xi]
  l1_squared,  // ||mu - Xbar||_1^2
  l1,          // ||mu - Xbar||_1
};

inline std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::squared_l2: return "l2";
    case CostKind::linear: return "linear";
    case CostKind::hits: return "hits";
    case CostKind::l1_squared: return "l1_squared";
    case CostKind::l1: return "l1";
  }
  return "?";
}

inline CostKind parse_cost_kind(std::string_view s) {
  if (s == "l2" || s == "squared_l2") return CostKind::squared_l2;
  if (s == "linear") return CostKind::linear;
  if (s == "hits") return CostKind::hits;
  if (s == "l1_squared") return CostKind::l1_squared;
  if (s == "l1") return CostKind::l1;
  throw std::invalid_argument("unknown cost kind '" + std::string(s) + "'");
}

// Costs that differ from the squared loss by a mu-independent shift.
constexpr bool is_linear_family(CostKind kind) noexcept {
  return kind == CostKind::squared_l2 || kind == CostKind::linear || kind == CostKind::hits;
}

namespace detail {
inline void check_dims(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params) {
  if (mu.dimension() != params.dimension() || xi.dimension() != params.dimension())
    throw std::domain_error("cost: dimension mismatch");
}
}  // namespace detail

// ||mu - mu0 - s xi||_2^2
inline double risk_sq(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params) {
  detail::check_dims(mu, xi, params);
  const auto x = sample_mean(params, xi);
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = (mu[j] ? 1.0 : 0.0) - x[j];
    sum += r * r;
  }
  return sum;
}

// mu^T (1 - 2 s xi - 2 mu0)
inline double risk_linear(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params) {
  detail::check_dims(mu, xi, params);
  const double s = params.noise_scale();
  const auto& mu0 = params.mu0();
  double sum = 0.0;
  for (Index j : mu.support()) sum += 1.0 - 2.0 * s * xi.xi[j] - (mu0[j] ? 2.0 : 0.0);
  return sum;
}

// -2 [h + s * dot], with h = mu^T mu0 and dot = mu^T xi.
inline double risk_hits(std::size_t h, double dot, const ModelParams& params) {
  return -2.0 * (static_cast<double>(h) + params.noise_scale() * dot);
}

// 2 mu^T (1 - s sqrt(2) xi - 2 mu0): the sum of two linear risks when xi stands
// in for (xi1 + xi2) / sqrt(2).
inline double joint_risk_crn(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params) {
  detail::check_dims(mu, xi, params);
  const double s = params.noise_scale();
  const auto& mu0 = params.mu0();
  double sum = 0.0;
  for (Index j : mu.support()) sum += 1.0 - s * std::sqrt(2.0) * xi.xi[j] - (mu0[j] ? 2.0 : 0.0);
  return 2.0 * sum;
}

// ||mu - Xbar||_1, squared unless `squared` is false.
inline double risk_l1(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params,
                      bool squared = true) {
  detail::check_dims(mu, xi, params);
  const auto x = sample_mean(params, xi);
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) sum += std::abs((mu[j] ? 1.0 : 0.0) - x[j]);
  return squared ? sum * sum : sum;
}

// log of the Boltzmann weight exp(-beta * cost).
inline double boltzmann_logweight(double beta, double cost) {
  if (beta < 0.0) throw std::domain_error("boltzmann_logweight: beta must be >= 0");
  return -beta * cost;
}

// A cost bound to one noise draw. Evaluation touches only the support of the
// hypothesis: cost = f(base + sum_{j in supp} coef_j), with f the identity
// except for the squared L1 norm.
class BoundCost {
 public:
  BoundCost(CostKind kind, const ModelParams& params, const NoiseDraw& noise) : kind_(kind) {
    if (noise.dimension() != params.dimension()) throw std::domain_error("BoundCost: dimension mismatch");
    const std::size_t d = params.dimension();
    const double s = params.noise_scale();
    const auto& mu0 = params.mu0();
    coef_.resize(d);
    switch (kind) {
      case CostKind::squared_l2:
      case CostKind::linear: {
        const auto x = sample_mean(params, noise);
        for (std::size_t j = 0; j < d; ++j) coef_[j] = 1.0 - 2.0 * x[j];
        if (kind == CostKind::squared_l2)
          base_ = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        break;
      }
      case CostKind::hits:
        for (std::size_t j = 0; j < d; ++j) coef_[j] = -2.0 * s * noise.xi[j];
        for (Index j : mu0.support()) coef_[j] -= 2.0;
        break;
      case CostKind::l1_squared:
      case CostKind::l1: {
        const auto x = sample_mean(params, noise);
        for (std::size_t j = 0; j < d; ++j) {
          base_ += std::abs(x[j]);
          coef_[j] = std::abs(1.0 - x[j]) - std::abs(x[j]);
        }
        break;
      }
    }
  }

  // Single-draw form of R(mu, xi1) + R(mu, xi2) for the linear family.
  static BoundCost joint_linear(const ModelParams& params, const NoiseDraw& noise) {
    if (noise.dimension() != params.dimension()) throw std::domain_error("BoundCost: dimension mismatch");
    BoundCost c;
    c.kind_ = CostKind::linear;
    const double s = params.noise_scale() * std::sqrt(2.0);
    c.coef_.resize(params.dimension());
    for (std::size_t j = 0; j < c.coef_.size(); ++j) c.coef_[j] = 2.0 * (1.0 - s * noise.xi[j]);
    for (Index j : params.mu0().support()) c.coef_[j] -= 4.0;
    return c;
  }

  CostKind kind() const noexcept { return kind_; }

  double operator()(const Hypothesis& mu) const { return (*this)(mu.support()); }

  double operator()(std::span<const Index> support) const {
    double v = base_;
    for (Index j : support) v += coef_[j];
    return kind_ == CostKind::l1_squared ? v * v : v;
  }

 private:
  BoundCost() = default;

  CostKind kind_ = CostKind::linear;
  double base_ = 0.0;
  std::vector<double> coef_;
};

}  // namespace gcsim
