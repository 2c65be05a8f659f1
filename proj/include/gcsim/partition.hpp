#pragma once

// Log partition functions log Z_beta(xi1), log Z_beta(xi2) and the joint
// log Delta Z_beta(xi1, xi2), evaluated exactly or estimated from a weighted
// hypothesis sample.
//
// Every estimator reduces to a HypothesisSet: hypotheses mu_j with log
// multipliers l_j, and
//
//     log Z = log sum_j exp(l_j - beta * cost(mu_j)).
//
// Exhaustive evaluation uses l_j = 0 over the whole space (absolute
// normalization). Sampling estimators use l_j = log w(mu_j) - log r, so the
// result is the log of a sample mean of weighted Boltzmann factors (mean
// normalization), an estimate of log(Z / |C|).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcsim/cost.hpp"
#include "gcsim/errors.hpp"
#include "gcsim/hypothesis.hpp"
#include "gcsim/log_sum_exp.hpp"
#include "gcsim/model.hpp"
#include "gcsim/rng.hpp"

namespace gcsim {

// Largest space the exhaustive paths will enumerate.
inline constexpr std::uint64_t kEnumerationGuard = std::uint64_t{1} << 24;
// Above this many terms exhaustive sums stream instead of buffering hypotheses.
inline constexpr std::uint64_t kBufferedEnumeration = std::uint64_t{1} << 20;

enum class Normalization {
  absolute,  // log of the full sum over the space
  mean,      // log of a (weighted) sample mean
};

struct LogPartitionTriple {
  double log_z1 = 0.0;
  double log_z2 = 0.0;
  double log_dz = 0.0;
  Normalization normalization = Normalization::absolute;
};

// Flat storage of hypothesis supports with per-hypothesis log multipliers.
class HypothesisSet {
 public:
  HypothesisSet(std::size_t dimension, Normalization normalization)
      : dimension_(dimension), normalization_(normalization) {}

  void push(std::span<const Index> support, double log_multiplier) {
    flat_.insert(flat_.end(), support.begin(), support.end());
    offsets_.push_back(flat_.size());
    log_multiplier_.push_back(log_multiplier);
  }

  void push(const Hypothesis& mu, double log_multiplier) { push(mu.support(), log_multiplier); }

  void reserve(std::size_t n, std::size_t support_size) {
    flat_.reserve(n * support_size);
    offsets_.reserve(n + 1);
    log_multiplier_.reserve(n);
  }

  std::size_t size() const noexcept { return log_multiplier_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  Normalization normalization() const noexcept { return normalization_; }

  std::span<const Index> support(std::size_t i) const noexcept {
    return std::span<const Index>(flat_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  Hypothesis hypothesis(std::size_t i) const {
    auto s = support(i);
    return Hypothesis(dimension_, std::vector<Index>(s.begin(), s.end()));
  }
  double log_multiplier(std::size_t i) const noexcept { return log_multiplier_[i]; }
  std::span<const double> log_multipliers() const noexcept { return log_multiplier_; }

 private:
  std::size_t dimension_;
  Normalization normalization_;
  std::vector<Index> flat_;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> log_multiplier_;
};

namespace detail {

inline std::optional<std::size_t> sparsity_of(const FullSpace&) { return std::nullopt; }
inline std::optional<std::size_t> sparsity_of(const SparseSpace& s) { return s.sparsity(); }

inline std::string describe(const FullSpace& s) { return "d=" + std::to_string(s.dimension()); }
inline std::string describe(const SparseSpace& s) {
  return "d=" + std::to_string(s.dimension()) + ", k=" + std::to_string(s.sparsity());
}

}  // namespace detail

// Number of hypotheses in `space`, or capacity_error if it exceeds the guard.
template <typename Space>
std::uint64_t enumerable_size(const Space& space) {
  const auto n = space.cardinality();
  if (!n || *n > kEnumerationGuard) {
    throw capacity_error("space (" + detail::describe(space) +
                             ") is too large to enumerate; use a sampling estimator",
                         space.dimension(), detail::sparsity_of(space));
  }
  return *n;
}

template <typename Space>
HypothesisSet enumerate_space(const Space& space) {
  const auto n = enumerable_size(space);
  HypothesisSet set(space.dimension(), Normalization::absolute);
  set.reserve(n, detail::sparsity_of(space).value_or(space.dimension() / 2));
  for (std::uint64_t i = 0; i < n; ++i) set.push(space.at(i), 0.0);
  return set;
}

// r i.i.d. uniform draws, each with multiplier 1/r.
template <typename Space>
HypothesisSet draw_uniform_sample(const Space& space, std::size_t r, Rng& rng) {
  if (r < 1) throw std::domain_error("draw_uniform_sample: r must be >= 1");
  HypothesisSet set(space.dimension(), Normalization::mean);
  const double lm = -std::log(static_cast<double>(r));
  for (std::size_t j = 0; j < r; ++j) set.push(sample_uniform(space, rng), lm);
  return set;
}

// r i.i.d. draws from the stratified proposal, each with multiplier w(mu)/r.
inline HypothesisSet draw_importance_sample(const SparseSpace& space, const Hypothesis& mu0, std::size_t r,
                                            Rng& rng) {
  if (r < 1) throw std::domain_error("draw_importance_sample: r must be >= 1");
  HypothesisSet set(space.dimension(), Normalization::mean);
  set.reserve(r, space.sparsity());
  const double log_r = std::log(static_cast<double>(r));
  std::vector<double> log_w;
  for (std::size_t h = 0; h <= space.sparsity(); ++h)
    log_w.push_back(h < space.min_hits() ? 0.0 : log_importance_weight(h, space));
  for (std::size_t j = 0; j < r; ++j) {
    auto draw = sample_stratified(space, mu0, rng);
    set.push(draw.hypothesis, log_w[draw.hits] - log_r);
  }
  return set;
}

// Test hook: the whole space with the exact uniform probabilities 1/|C| in
// place of a random sample.
template <typename Space>
HypothesisSet enumerate_uniform_proposal(const Space& space) {
  const auto n = enumerable_size(space);
  HypothesisSet set(space.dimension(), Normalization::mean);
  const double lp = -space.log_cardinality();
  for (std::uint64_t i = 0; i < n; ++i) set.push(space.at(i), lp);
  return set;
}

// Test hook: the whole space with multipliers q(mu) * w(mu), each factor
// computed separately from the proposal and the importance weight.
inline HypothesisSet enumerate_importance_proposal(const SparseSpace& space, const Hypothesis& mu0) {
  const auto n = enumerable_size(space);
  HypothesisSet set(space.dimension(), Normalization::mean);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto mu = space.at(i);
    const auto h = hit_count(mu, mu0);
    set.push(mu, log_proposal_probability(h, space) + log_importance_weight(h, space));
  }
  return set;
}

// Per-hypothesis costs of a set under the two single-set costs and the joint cost.
struct TermCosts {
  std::vector<double> cost1;
  std::vector<double> cost2;
  std::vector<double> joint;
};

template <typename C1, typename C2, typename CJ>
TermCosts evaluate_costs(const HypothesisSet& set, const C1& cost1, const C2& cost2, const CJ& joint) {
  TermCosts out;
  const std::size_t n = set.size();
  out.cost1.resize(n);
  out.cost2.resize(n);
  out.joint.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = set.support(i);
    out.cost1[i] = cost1(s);
    out.cost2[i] = cost2(s);
    out.joint[i] = joint(s);
  }
  return out;
}

namespace detail {

inline double weighted_log_sum_exp(std::span<const double> lm, std::span<const double> cost, double beta) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cost.size(); ++i) top = std::max(top, lm[i] - beta * cost[i]);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (std::size_t i = 0; i < cost.size(); ++i) sum += std::exp(lm[i] - beta * cost[i] - top);
  return top + std::log(sum);
}

}  // namespace detail

// Triples for every beta from precomputed costs.
inline std::vector<LogPartitionTriple> log_partitions(const HypothesisSet& set, const TermCosts& costs,
                                                      std::span<const double> betas) {
  if (set.size() == 0) throw std::domain_error("log_partitions: empty hypothesis set");
  std::vector<LogPartitionTriple> out;
  out.reserve(betas.size());
  const auto lm = set.log_multipliers();
  for (double beta : betas) {
    if (beta < 0.0) throw std::domain_error("log_partitions: beta must be >= 0");
    out.push_back({detail::weighted_log_sum_exp(lm, costs.cost1, beta),
                   detail::weighted_log_sum_exp(lm, costs.cost2, beta),
                   detail::weighted_log_sum_exp(lm, costs.joint, beta), set.normalization()});
  }
  return out;
}

template <typename C1, typename C2, typename CJ>
std::vector<LogPartitionTriple> log_partitions(const HypothesisSet& set, std::span<const double> betas,
                                               const C1& cost1, const C2& cost2, const CJ& joint) {
  return log_partitions(set, evaluate_costs(set, cost1, cost2, joint), betas);
}

// Exact triples over the whole space. Spaces above kBufferedEnumeration are
// streamed through per-beta accumulators instead of being materialized.
template <typename Space, typename C1, typename C2, typename CJ>
std::vector<LogPartitionTriple> exhaustive_log_partitions(std::span<const double> betas, const Space& space,
                                                          const C1& cost1, const C2& cost2, const CJ& joint) {
  const auto n = enumerable_size(space);
  if (n <= kBufferedEnumeration) return log_partitions(enumerate_space(space), betas, cost1, cost2, joint);

  std::vector<LogSumExpAccumulator> acc(3 * betas.size());
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto mu = space.at(i);
    const double c1 = cost1(mu.support()), c2 = cost2(mu.support()), cj = joint(mu.support());
    for (std::size_t b = 0; b < betas.size(); ++b) {
      acc[3 * b].add(-betas[b] * c1);
      acc[3 * b + 1].add(-betas[b] * c2);
      acc[3 * b + 2].add(-betas[b] * cj);
    }
  }
  std::vector<LogPartitionTriple> out;
  for (std::size_t b = 0; b < betas.size(); ++b)
    out.push_back({acc[3 * b].value(), acc[3 * b + 1].value(), acc[3 * b + 2].value(), Normalization::absolute});
  return out;
}

// ---------------------------------------------------------------------------
// Single-beta entry points with the squared-loss family of costs. The joint
// term uses cost(mu, xi1) + cost(mu, xi2).

namespace detail {

struct CostPair {
  BoundCost c1, c2;
  double operator()(std::span<const Index> s) const { return c1(s) + c2(s); }
};

}  // namespace detail

template <typename Space>
LogPartitionTriple exhaustive_log_partitions(double beta, const NoiseDraw& xi1, const NoiseDraw& xi2,
                                             const Space& space, CostKind kind, const ModelParams& params) {
  detail::CostPair pair{BoundCost(kind, params, xi1), BoundCost(kind, params, xi2)};
  const double b[] = {beta};
  return exhaustive_log_partitions(std::span<const double>(b), space, pair.c1, pair.c2, pair).front();
}

template <typename Space>
LogPartitionTriple uniform_sample_log_partitions(double beta, const NoiseDraw& xi1, const NoiseDraw& xi2,
                                                 const Space& space, CostKind kind, const ModelParams& params,
                                                 std::size_t r, Rng& rng) {
  detail::CostPair pair{BoundCost(kind, params, xi1), BoundCost(kind, params, xi2)};
  const double b[] = {beta};
  return log_partitions(draw_uniform_sample(space, r, rng), std::span<const double>(b), pair.c1, pair.c2, pair)
      .front();
}

inline LogPartitionTriple importance_sample_log_partitions(double beta, const NoiseDraw& xi1,
                                                           const NoiseDraw& xi2, const SparseSpace& space,
                                                           CostKind kind, const ModelParams& params,
                                                           std::size_t r, Rng& rng) {
  detail::CostPair pair{BoundCost(kind, params, xi1), BoundCost(kind, params, xi2)};
  const double b[] = {beta};
  return log_partitions(draw_importance_sample(space, params.mu0(), r, rng), std::span<const double>(b),
                        pair.c1, pair.c2, pair)
      .front();
}

}  // namespace gcsim
