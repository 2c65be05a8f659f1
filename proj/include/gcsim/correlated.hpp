#pragma once

// Stratified estimator of E_xi[log Z_beta(xi)] on the sparse space, for noise
// with arbitrary covariance. With the linear cost every Boltzmann factor is
// exp(-beta k) exp(beta (2h + eta(mu))), eta(mu) = 2 s mu^T xi, so per draw
//
//     log Z(xi) = -beta k + log C(d,k) + log E_H[exp(2 beta H) Y_H(xi) / |C_H|]
//
// with H hypergeometric and Y_h = sum over stratum h of exp(beta eta(mu)).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "gcsim/binomial.hpp"
#include "gcsim/errors.hpp"
#include "gcsim/hypothesis.hpp"
#include "gcsim/log_sum_exp.hpp"
#include "gcsim/model.hpp"
#include "gcsim/parallel.hpp"
#include "gcsim/partition.hpp"
#include "gcsim/rng.hpp"

namespace gcsim {

// Number of hits between a uniform popcount-k vector and a fixed one:
// k successes in a population of d, k draws.
class HypergeometricLaw {
 public:
  HypergeometricLaw(std::size_t d, std::size_t k) : d_(d), k_(k) {
    if (k > d) throw std::domain_error("HypergeometricLaw: k > d");
    const double log_total = log_binomial(d, k);
    for (std::size_t h = min_hits(); h <= k; ++h) pmf_.push_back(std::exp(log_stratum_size(d, k, h) - log_total));
    sampler_ = std::discrete_distribution<std::size_t>(pmf_.begin(), pmf_.end());
  }

  std::size_t dimension() const noexcept { return d_; }
  std::size_t sparsity() const noexcept { return k_; }
  std::size_t min_hits() const noexcept { return 2 * k_ > d_ ? 2 * k_ - d_ : 0; }
  std::size_t max_hits() const noexcept { return k_; }

  double pmf(std::size_t h) const noexcept {
    if (h < min_hits() || h > k_) return 0.0;
    return pmf_[h - min_hits()];
  }

  double mean() const noexcept { return d_ == 0 ? 0.0 : static_cast<double>(k_ * k_) / static_cast<double>(d_); }

  std::size_t sample(Rng& rng) const { return min_hits() + sampler_(rng); }

 private:
  std::size_t d_, k_;
  std::vector<double> pmf_;  // indexed by h - min_hits()
  mutable std::discrete_distribution<std::size_t> sampler_;
};

inline std::size_t hypergeometric_sample(const HypergeometricLaw& law, Rng& rng) { return law.sample(rng); }

// eta(mu) = 2 s mu^T xi
inline double eta(const Hypothesis& mu, const NoiseDraw& xi, const ModelParams& params) {
  double dot = 0.0;
  for (Index j : mu.support()) dot += xi.xi[j];
  return 2.0 * params.noise_scale() * dot;
}

// log Y_h = log sum_{mu in stratum h} exp(beta eta(mu)), by enumeration.
inline double y_h_exact(double beta, std::size_t h, const NoiseDraw& xi, const ModelParams& params) {
  const std::size_t d = params.dimension(), k = params.sparsity();
  check_hits(d, k, h);
  if (log_stratum_size(d, k, h) > std::log(static_cast<double>(kEnumerationGuard)) + 1e-9)
    throw capacity_error("stratum h=" + std::to_string(h) + " of (d=" + std::to_string(d) + ", k=" +
                             std::to_string(k) + ") is too large to enumerate",
                         d, k);
  const SparseSpace space(d, k);
  LogSumExpAccumulator acc;
  for_each_in_stratum(space, params.mu0(), h, [&](const Hypothesis& mu) { acc.add(beta * eta(mu, xi, params)); });
  return acc.value();
}

// log(|C_h| exp(beta eta_h)): the stratum sum when eta is constant on the stratum.
inline double y_h_eta_approx(double beta, std::size_t h, double eta_h, std::size_t d, std::size_t k) {
  return log_stratum_size(d, k, h) + beta * eta_h;
}

// How log Y_h is obtained inside the estimator.
struct YhApproximator {
  enum class Strategy { exact, eta_h, custom };
  // Representative eta for stratum h under the eta_h strategy.
  using EtaFn = std::function<double(std::size_t h, const NoiseDraw& xi, const ModelParams& params, Rng& rng)>;
  // Full replacement for log Y_h.
  using LogYFn =
      std::function<double(double beta, std::size_t h, const NoiseDraw& xi, const ModelParams& params, Rng& rng)>;

  Strategy strategy = Strategy::exact;
  EtaFn eta_fn;    // empty: eta at one uniform member of the stratum
  LogYFn custom;

  static YhApproximator exact() { return {}; }
  static YhApproximator eta_h(EtaFn fn = {}) { return {Strategy::eta_h, std::move(fn), {}}; }
  static YhApproximator with_hook(LogYFn fn) { return {Strategy::custom, {}, std::move(fn)}; }

  double log_y(double beta, std::size_t h, const NoiseDraw& xi, const ModelParams& params, Rng& rng) const {
    switch (strategy) {
      case Strategy::exact:
        return y_h_exact(beta, h, xi, params);
      case Strategy::eta_h: {
        double e;
        if (eta_fn) {
          e = eta_fn(h, xi, params, rng);
        } else {
          e = eta(sample_in_stratum(params.sparse_space(), params.mu0(), h, rng), xi, params);
        }
        return y_h_eta_approx(beta, h, e, params.dimension(), params.sparsity());
      }
      case Strategy::custom:
        if (!custom) throw std::invalid_argument("YhApproximator: custom strategy without a hook");
        return custom(beta, h, xi, params, rng);
    }
    return 0.0;
  }
};

enum class InnerMode {
  sample,     // p hypergeometric draws of H
  enumerate,  // every h, weighted by its exact probability (p ignored)
};

struct CorrelatedEstimate {
  double value = 0.0;           // estimate of E[log Z]
  double standard_error = 0.0;  // sd of the per-draw terms / sqrt(m)
  std::vector<double> per_draw;  // log Z estimate for each outer noise draw
};

// log a_j = 2 beta h + log Y_h - log |C_h|
inline double log_a(double beta, std::size_t h, double log_y, std::size_t d, std::size_t k) {
  return 2.0 * beta * static_cast<double>(h) + log_y - log_stratum_size(d, k, h);
}

// Noise for outer draw i comes from substream (noise, i) of `seed`, so the
// same seed reproduces the draws of estimate_gc's pool.
inline CorrelatedEstimate estimate_elogz_correlated(const ModelParams& params, double beta, std::size_t m,
                                                    std::size_t p, const YhApproximator& approx,
                                                    std::uint64_t seed, InnerMode mode = InnerMode::sample,
                                                    unsigned workers = 1) {
  if (m < 1) throw std::domain_error("estimate_elogz_correlated: m must be >= 1");
  if (p < 1) throw std::domain_error("estimate_elogz_correlated: p must be >= 1");
  if (beta < 0.0) throw std::domain_error("estimate_elogz_correlated: beta must be >= 0");
  if (!params.is_sparse()) throw std::domain_error("estimate_elogz_correlated: needs a sparse model");
  const std::size_t d = params.dimension(), k = params.sparsity();
  const HypergeometricLaw law(d, k);
  const double offset = -beta * static_cast<double>(k) + log_binomial(d, k);

  CorrelatedEstimate out;
  out.per_draw.resize(m);
  parallel_for(m, workers, [&](std::size_t i) {
    Rng noise_rng = make_substream(seed, StreamTag::noise, i);
    const NoiseDraw xi = draw_noise(params, noise_rng);
    Rng inner = make_substream(seed, StreamTag::inner, i);
    double log_abar;
    if (mode == InnerMode::enumerate) {
      LogSumExpAccumulator acc;
      for (std::size_t h = law.min_hits(); h <= k; ++h)
        acc.add(std::log(law.pmf(h)) + log_a(beta, h, approx.log_y(beta, h, xi, params, inner), d, k));
      log_abar = acc.value();
    } else {
      std::vector<double> la(p);
      for (auto& v : la) {
        const std::size_t h = law.sample(inner);
        v = log_a(beta, h, approx.log_y(beta, h, xi, params, inner), d, k);
      }
      log_abar = log_mean_exp(la);
    }
    out.per_draw[i] = offset + log_abar;
  });

  double mean = 0.0;
  for (double v : out.per_draw) mean += v;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : out.per_draw) ss += (v - mean) * (v - mean);
  out.value = mean;
  out.standard_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  return out;
}

// Exhaustive log Z_beta(xi) under the linear cost for each of the m outer
// draws used by estimate_elogz_correlated with the same seed.
inline std::vector<double> exhaustive_log_z_draws(const ModelParams& params, double beta, std::size_t m,
                                                  std::uint64_t seed) {
  const auto set = enumerate_space(params.sparse_space());
  std::vector<double> out(m);
  const double b[] = {beta};
  for (std::size_t i = 0; i < m; ++i) {
    Rng noise_rng = make_substream(seed, StreamTag::noise, i);
    const BoundCost cost(CostKind::linear, params, draw_noise(params, noise_rng));
    out[i] = log_partitions(set, std::span<const double>(b), cost, cost, cost).front().log_z1;
  }
  return out;
}

}  // namespace gcsim
