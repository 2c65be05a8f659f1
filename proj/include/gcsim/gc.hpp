#pragma once

// Generalization capacity: information content of a cost function as a
// function of the resolution beta, averaged over pairs of noise draws and
// maximized over a grid of betas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gcsim/cost.hpp"
#include "gcsim/hypothesis.hpp"
#include "gcsim/log_sum_exp.hpp"
#include "gcsim/model.hpp"
#include "gcsim/parallel.hpp"
#include "gcsim/partition.hpp"
#include "gcsim/rng.hpp"

namespace gcsim {

class BetaGrid {
 public:
  explicit BetaGrid(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw std::domain_error("BetaGrid: empty grid");
    for (std::size_t i = 0; i < betas_.size(); ++i) {
      if (!(betas_[i] > 0.0) || !std::isfinite(betas_[i]))
        throw std::domain_error("BetaGrid: betas must be positive and finite");
      if (i > 0 && !(betas_[i] > betas_[i - 1]))
        throw std::domain_error("BetaGrid: betas must be strictly increasing");
    }
  }

  static BetaGrid log_spaced(double lo, double hi, std::size_t count) {
    if (count == 1) return BetaGrid({lo});
    std::vector<double> b(count);
    const double a = std::log(lo), z = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
      b[i] = std::exp(a + (z - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    b.front() = lo;
    b.back() = hi;
    return BetaGrid(std::move(b));
  }

  static BetaGrid linear(double lo, double hi, std::size_t count) {
    if (count == 1) return BetaGrid({lo});
    std::vector<double> b(count);
    for (std::size_t i = 0; i < count; ++i)
      b[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return BetaGrid(std::move(b));
  }

  std::span<const double> values() const noexcept { return betas_; }
  std::size_t size() const noexcept { return betas_.size(); }
  double operator[](std::size_t i) const { return betas_[i]; }

 private:
  std::vector<double> betas_;
};

enum class Method { exhaustive, uniform, importance };

// How the 2m noise draws feed log Z(xi1), log Z(xi2) and log Delta Z.
enum class CrnScheme {
  crn1,  // draws 1..m feed both Z terms, draws m+1..2m feed Delta Z (single-draw form)
  crn2,  // each of the 2m draws feeds both Z terms and Delta Z (single-draw form)
  crn3,  // pair (j, m+j) feeds Z(xi1), Z(xi2) and Delta Z(xi1, xi2)
};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::exhaustive: return "exhaustive";
    case Method::uniform: return "uniform";
    case Method::importance: return "importance";
  }
  return "?";
}

inline std::string_view to_string(CrnScheme s) {
  switch (s) {
    case CrnScheme::crn1: return "crn1";
    case CrnScheme::crn2: return "crn2";
    case CrnScheme::crn3: return "crn3";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "exhaustive") return Method::exhaustive;
  if (s == "uniform") return Method::uniform;
  if (s == "importance") return Method::importance;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

inline CrnScheme parse_crn_scheme(std::string_view s) {
  if (s == "crn1" || s == "1") return CrnScheme::crn1;
  if (s == "crn2" || s == "2") return CrnScheme::crn2;
  if (s == "crn3" || s == "3") return CrnScheme::crn3;
  throw std::invalid_argument("unknown CRN scheme '" + std::string(s) + "'");
}

struct EstimatorSpec {
  Method method = Method::exhaustive;
  std::size_t r = 100;  // hypotheses per repetition (sampling methods)
  std::size_t m = 100;  // repetitions
  CrnScheme crn = CrnScheme::crn3;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (m < 2) throw std::domain_error("EstimatorSpec: m must be >= 2");
    if (method != Method::exhaustive && r < 1) throw std::domain_error("EstimatorSpec: r must be >= 1");
  }
};

struct GcOptions {
  CostKind cost = CostKind::squared_l2;
  unsigned workers = 1;
  bool keep_repetitions = false;
};

struct GcResult {
  std::vector<double> betas;
  std::vector<double> per_beta_mean;      // mean information content per beta
  std::vector<double> per_beta_variance;  // sample variance of the per-repetition values
  std::size_t beta_star_index = 0;
  double beta_star = 0.0;
  double gc_estimate = 0.0;
  double std_at_beta_star = 0.0;
  std::size_t repetitions = 0;  // per-repetition values averaged at each beta
  std::vector<std::vector<double>> per_repetition;  // [repetition][beta], if kept

  double standard_error() const { return std_at_beta_star / std::sqrt(static_cast<double>(repetitions)); }
};

// log(|C| Delta Z / (Z1 Z2)). For mean-normalized triples the log|C| terms
// cancel, so log_cardinality must be 0.
inline double information_content(const LogPartitionTriple& t, double log_cardinality) {
  if (t.normalization == Normalization::mean && log_cardinality != 0.0)
    throw std::domain_error("information_content: mean-normalized triple needs log_cardinality = 0");
  return log_cardinality + t.log_dz - t.log_z1 - t.log_z2;
}

// ---------------------------------------------------------------------------
// CRN plans

struct NoiseAssignment {
  std::size_t z1 = 0;
  std::size_t z2 = 0;
  std::size_t dz_first = 0;
  std::optional<std::size_t> dz_second;  // empty: Delta Z from the single-draw joint risk
};

struct NoisePlan {
  CrnScheme scheme = CrnScheme::crn3;
  std::vector<std::uint64_t> draw_seeds;  // one substream seed per pool draw
  std::vector<NoiseAssignment> assignments;  // one per repetition
};

inline NoisePlan crn_noise_plan(CrnScheme scheme, std::size_t m, std::uint64_t master_seed) {
  NoisePlan plan;
  plan.scheme = scheme;
  plan.draw_seeds.resize(2 * m);
  for (std::size_t j = 0; j < 2 * m; ++j) plan.draw_seeds[j] = substream_seed(master_seed, StreamTag::noise, j);
  switch (scheme) {
    case CrnScheme::crn1:
      for (std::size_t i = 0; i < m; ++i) plan.assignments.push_back({i, i, m + i, std::nullopt});
      break;
    case CrnScheme::crn2:
      for (std::size_t j = 0; j < 2 * m; ++j) plan.assignments.push_back({j, j, j, std::nullopt});
      break;
    case CrnScheme::crn3:
      for (std::size_t i = 0; i < m; ++i) plan.assignments.push_back({i, m + i, i, m + i});
      break;
  }
  return plan;
}

inline NoiseDraw draw_from_seed(const ModelParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return draw_noise(params, rng);
}

// ---------------------------------------------------------------------------
// Estimation

namespace detail {

struct SummedCost {
  const BoundCost* a;
  const BoundCost* b;
  double operator()(std::span<const Index> s) const { return (*a)(s) + (*b)(s); }
};

template <typename Space>
GcResult estimate_gc_in(const ModelParams& params, const Space& space, const BetaGrid& grid,
                        const EstimatorSpec& spec, const GcOptions& opts) {
  const auto plan = crn_noise_plan(spec.crn, spec.m, spec.master_seed);
  const bool paired = spec.crn == CrnScheme::crn3;
  if (!paired && !is_linear_family(opts.cost))
    throw std::domain_error("CRN-1/CRN-2 need a cost of the squared-loss family (single-draw joint form)");
  // Outside CRN-3 the three terms see different draws, so every term must use
  // the same (linear) representative of the cost to keep the shifts consistent.
  const CostKind single_kind = paired ? opts.cost : CostKind::linear;

  const bool exhaustive = spec.method == Method::exhaustive;
  const double log_card = exhaustive ? space.log_cardinality() : 0.0;
  std::optional<HypothesisSet> shared;
  if (exhaustive && enumerable_size(space) <= kBufferedEnumeration) shared = enumerate_space(space);

  const auto betas = grid.values();
  const std::size_t reps = plan.assignments.size();
  std::vector<std::vector<double>> values(reps);

  parallel_for(reps, opts.workers, [&](std::size_t t) {
    const auto& a = plan.assignments[t];
    const NoiseDraw xi1 = draw_from_seed(params, plan.draw_seeds[a.z1]);
    const NoiseDraw xi2 = a.z2 == a.z1 ? xi1 : draw_from_seed(params, plan.draw_seeds[a.z2]);
    const BoundCost c1(single_kind, params, xi1);
    const BoundCost c2(single_kind, params, xi2);
    std::optional<BoundCost> joint_single;
    if (!a.dz_second) joint_single = BoundCost::joint_linear(params, draw_from_seed(params, plan.draw_seeds[a.dz_first]));

    auto run = [&](const auto& joint) {
      if (exhaustive) {
        if (shared) return log_partitions(*shared, betas, c1, c2, joint);
        return exhaustive_log_partitions(betas, space, c1, c2, joint);
      }
      Rng rng = make_substream(spec.master_seed, StreamTag::hypotheses, t);
      if (spec.method == Method::uniform)
        return log_partitions(draw_uniform_sample(space, spec.r, rng), betas, c1, c2, joint);
      if constexpr (std::is_same_v<Space, SparseSpace>) {
        return log_partitions(draw_importance_sample(space, params.mu0(), spec.r, rng), betas, c1, c2, joint);
      } else {
        throw std::domain_error("importance sampling requires a sparse hypothesis space");
        return std::vector<LogPartitionTriple>{};
      }
    };
    const auto triples = joint_single ? run(*joint_single) : run(SummedCost{&c1, &c2});

    auto& row = values[t];
    row.resize(betas.size());
    for (std::size_t b = 0; b < betas.size(); ++b) {
      row[b] = information_content(triples[b], log_card);
      // |C| Delta Z <= |C| Z1 Z2 termwise, so an exact paired evaluation can never exceed log|C|
      if (exhaustive && paired && row[b] > log_card + 1e-9 * std::max(1.0, log_card))
        throw std::logic_error("information content exceeds log|C| in exhaustive evaluation");
    }
  });

  GcResult out;
  out.betas.assign(betas.begin(), betas.end());
  out.repetitions = reps;
  out.per_beta_mean.assign(betas.size(), 0.0);
  out.per_beta_variance.assign(betas.size(), 0.0);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < reps; ++t) mean += values[t][b];
    mean /= static_cast<double>(reps);
    double ss = 0.0;
    for (std::size_t t = 0; t < reps; ++t) ss += (values[t][b] - mean) * (values[t][b] - mean);
    out.per_beta_mean[b] = mean;
    out.per_beta_variance[b] = ss / static_cast<double>(reps - 1);
  }
  // smallest maximizing beta
  std::size_t best = 0;
  for (std::size_t b = 1; b < betas.size(); ++b)
    if (out.per_beta_mean[b] > out.per_beta_mean[best]) best = b;
  out.beta_star_index = best;
  out.beta_star = betas[best];
  out.gc_estimate = out.per_beta_mean[best];
  out.std_at_beta_star = std::sqrt(out.per_beta_variance[best]);
  if (opts.keep_repetitions) out.per_repetition = std::move(values);
  return out;
}

}  // namespace detail

inline GcResult estimate_gc(const ModelParams& params, const BetaGrid& grid, const EstimatorSpec& spec,
                            const GcOptions& opts = {}) {
  spec.validate();
  if (params.is_sparse()) return detail::estimate_gc_in(params, params.sparse_space(), grid, spec, opts);
  if (opts.cost == CostKind::hits)
    throw std::domain_error("the hit-count cost form needs a fixed-popcount hypothesis space");
  if (spec.method == Method::importance)
    throw std::domain_error("importance sampling requires a sparse hypothesis space");
  return detail::estimate_gc_in(params, params.full_space(), grid, spec, opts);
}

// ---------------------------------------------------------------------------
// Gibbs distributions

// P_G(mu) = exp(-beta cost(mu)) / Z over the enumerable space, in canonical order.
template <typename Space>
std::vector<double> gibbs_distribution(double beta, const NoiseDraw& xi, const Space& space, CostKind kind,
                                       const ModelParams& params) {
  if (beta < 0.0) throw std::domain_error("gibbs_distribution: beta must be >= 0");
  const auto set = enumerate_space(space);
  const BoundCost cost(kind, params, xi);
  std::vector<double> logw(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) logw[i] = boltzmann_logweight(beta, cost(set.support(i)));
  const double log_z = log_sum_exp(logw);
  for (auto& v : logw) v = std::exp(v - log_z);
  return logw;
}

// P_G(mu_j = 1) for every component j.
template <typename Space>
std::vector<double> componentwise_gibbs(double beta, const NoiseDraw& xi, const Space& space, CostKind kind,
                                        const ModelParams& params) {
  const auto p = gibbs_distribution(beta, xi, space, kind, params);
  std::vector<double> marginal(space.dimension(), 0.0);
  for (std::uint64_t i = 0; i < p.size(); ++i) {
    const Hypothesis mu = space.at(i);
    for (Index j : mu.support()) marginal[j] += p[i];
  }
  return marginal;
}

}  // namespace gcsim
