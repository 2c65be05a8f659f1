#include <gtest/gtest.h>

#include "gcsim/gc.hpp"
#include "gcsim/partition.hpp"
#include "oracles.hpp"

using namespace gcsim;

namespace {

NoiseDraw noise(const ModelParams& p, std::uint64_t seed) {
  Rng rng(seed);
  return draw_noise(p, rng);
}

struct Instance {
  ModelParams params;
  NoiseDraw xi1, xi2;
};

Instance sparse_instance(int d, int k, double sigma, std::uint64_t seed) {
  auto p = ModelParams::sparse(Hypothesis::leading(static_cast<std::size_t>(d), static_cast<std::size_t>(k)), sigma);
  return {p, noise(p, seed), noise(p, seed + 1000)};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Exhaustive, BetaZeroGivesLogCardinality) {
  const auto p = ModelParams::unconstrained(Hypothesis::from_string("10110010"), 1.0);
  const auto t = exhaustive_log_partitions(0.0, noise(p, 1), noise(p, 2), p.full_space(), CostKind::squared_l2, p);
  EXPECT_NEAR(t.log_z1, 8 * std::log(2.0), 1e-12);
  EXPECT_NEAR(t.log_z2, 8 * std::log(2.0), 1e-12);
  EXPECT_NEAR(t.log_dz, 8 * std::log(2.0), 1e-12);
  EXPECT_EQ(t.normalization, Normalization::absolute);

  const auto in = sparse_instance(10, 4, 1.0, 3);
  const auto s = exhaustive_log_partitions(0.0, in.xi1, in.xi2, in.params.sparse_space(), CostKind::linear, in.params);
  EXPECT_NEAR(s.log_z1, std::log(210.0), 1e-12);
  EXPECT_NEAR(s.log_dz, std::log(210.0), 1e-12);
}

// Direct long-double summation without shifting.
TEST(Exhaustive, MatchesDirectSummation) {
  Rng rng(17);
  std::uniform_real_distribution<double> ub(0.0, 3.0), us(0.1, 5.0);
  for (int t = 0; t < 20; ++t) {
    const double beta = ub(rng), sigma = us(rng);
    const auto p = ModelParams::unconstrained(Hypothesis::from_string("101100"), sigma);
    const auto xi1 = noise(p, 100 + static_cast<std::uint64_t>(t)), xi2 = noise(p, 200 + static_cast<std::uint64_t>(t));
    const auto x1 = oracle::xbar(p, xi1), x2 = oracle::xbar(p, xi2);
    std::vector<long double> c1, c2, cj;
    for (const auto& s : oracle::bit_strings(6)) {
      c1.push_back(oracle::sq_cost(s, x1));
      c2.push_back(oracle::sq_cost(s, x2));
      cj.push_back(c1.back() + c2.back());
    }
    const auto tr = exhaustive_log_partitions(beta, xi1, xi2, p.full_space(), CostKind::squared_l2, p);
    EXPECT_LT(rel_err(tr.log_z1, static_cast<double>(oracle::direct_log_z(c1, beta))), 1e-12);
    EXPECT_LT(rel_err(tr.log_z2, static_cast<double>(oracle::direct_log_z(c2, beta))), 1e-12);
    EXPECT_LT(rel_err(tr.log_dz, static_cast<double>(oracle::direct_log_z(cj, beta))), 1e-12);
  }
}

TEST(Exhaustive, StableAtLargeBeta) {
  const auto p = ModelParams::unconstrained(Hypothesis::from_string("11001010"), 0.5);
  const auto xi1 = noise(p, 5), xi2 = noise(p, 6);
  for (double beta : {100.0, 1000.0}) {
    const auto t = exhaustive_log_partitions(beta, xi1, xi2, p.full_space(), CostKind::squared_l2, p);
    EXPECT_TRUE(std::isfinite(t.log_z1) && std::isfinite(t.log_z2) && std::isfinite(t.log_dz));
  }
  // linear-domain evaluation underflows here
  double naive = 0.0;
  const BoundCost c(CostKind::squared_l2, p, xi1);
  for (std::uint64_t i = 0; i < 256; ++i) naive += std::exp(-1000.0 * (c(unrank_full(i, 8)) + 1.0));
  EXPECT_EQ(naive, 0.0);
}

TEST(Exhaustive, CapacityGuard) {
  const auto p = ModelParams::sparse(Hypothesis::leading(40, 20), 1.0);
  const NoiseDraw z{std::vector<double>(40, 0.0)};
  try {
    exhaustive_log_partitions(1.0, z, z, p.sparse_space(), CostKind::linear, p);
    FAIL() << "expected capacity_error";
  } catch (const capacity_error& e) {
    EXPECT_EQ(e.dimension(), 40u);
    EXPECT_EQ(e.sparsity(), 20u);
  }
}

// Streaming path (above the buffer cap) agrees with the buffered two-pass path.
TEST(Exhaustive, StreamingMatchesBuffered) {
  const auto p = ModelParams::unconstrained(Hypothesis::from_string("101100101011010110101"), 2.0);
  ASSERT_GT(*p.full_space().cardinality(), kBufferedEnumeration);
  const auto xi1 = noise(p, 1), xi2 = noise(p, 2);
  const BoundCost c1(CostKind::linear, p, xi1), c2(CostKind::linear, p, xi2);
  const auto j = [&](std::span<const Index> s) { return c1(s) + c2(s); };
  const std::vector<double> betas{0.3, 2.0};
  const auto streamed = exhaustive_log_partitions(std::span<const double>(betas), p.full_space(), c1, c2, j);
  const auto buffered = log_partitions(enumerate_space(p.full_space()), std::span<const double>(betas), c1, c2, j);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    EXPECT_LT(rel_err(streamed[b].log_z1, buffered[b].log_z1), 1e-11);
    EXPECT_LT(rel_err(streamed[b].log_dz, buffered[b].log_dz), 1e-11);
  }
}

TEST(UniformSample, BetaZeroGivesZero) {
  const auto in = sparse_instance(10, 4, 2.0, 7);
  Rng rng(1);
  for (std::size_t r : {1u, 7u, 100u}) {
    const auto t = uniform_sample_log_partitions(0.0, in.xi1, in.xi2, in.params.sparse_space(), CostKind::linear,
                                                 in.params, r, rng);
    EXPECT_NEAR(t.log_z1, 0.0, 1e-14);
    EXPECT_NEAR(t.log_dz, 0.0, 1e-14);
    EXPECT_EQ(t.normalization, Normalization::mean);
  }
}

// Replacing the random sample by full enumeration with exact probabilities
// reproduces the exhaustive result minus log|C|.
TEST(UniformSample, EnumerationHookMatchesExhaustive) {
  for (int d = 4; d <= 10; ++d) {
    const auto in = sparse_instance(d, d / 2, 1.5, static_cast<std::uint64_t>(d));
    const auto& p = in.params;
    const BoundCost c1(CostKind::squared_l2, p, in.xi1), c2(CostKind::squared_l2, p, in.xi2);
    const auto j = [&](std::span<const Index> s) { return c1(s) + c2(s); };
    const std::vector<double> betas{0.05, 0.8, 4.0};
    const auto hook = log_partitions(enumerate_uniform_proposal(p.sparse_space()), betas, c1, c2, j);
    const auto ex = exhaustive_log_partitions(std::span<const double>(betas), p.sparse_space(), c1, c2, j);
    const double lc = p.sparse_space().log_cardinality();
    for (std::size_t b = 0; b < betas.size(); ++b) {
      EXPECT_LT(rel_err(hook[b].log_z1, ex[b].log_z1 - lc), 1e-9);
      EXPECT_LT(rel_err(hook[b].log_z2, ex[b].log_z2 - lc), 1e-9);
      EXPECT_LT(rel_err(hook[b].log_dz, ex[b].log_dz - lc), 1e-9);
    }
  }
}

TEST(ImportanceSample, EnumerationHookMatchesExhaustive) {
  for (auto [d, k] : {std::pair{6, 2}, std::pair{8, 3}, std::pair{10, 4}, std::pair{7, 5}}) {
    const auto in = sparse_instance(d, k, 2.0, static_cast<std::uint64_t>(d * 10 + k));
    const auto& p = in.params;
    const BoundCost c1(CostKind::linear, p, in.xi1), c2(CostKind::linear, p, in.xi2);
    const auto j = [&](std::span<const Index> s) { return c1(s) + c2(s); };
    const std::vector<double> betas{0.1, 1.0, 5.0};
    const auto hook = log_partitions(enumerate_importance_proposal(p.sparse_space(), p.mu0()), betas, c1, c2, j);
    const auto ex = exhaustive_log_partitions(std::span<const double>(betas), p.sparse_space(), c1, c2, j);
    const double lc = p.sparse_space().log_cardinality();
    for (std::size_t b = 0; b < betas.size(); ++b) {
      EXPECT_LT(rel_err(hook[b].log_z1, ex[b].log_z1 - lc), 1e-9);
      EXPECT_LT(rel_err(hook[b].log_dz, ex[b].log_dz - lc), 1e-9);
    }
  }
}

TEST(ImportanceSample, BetaZeroIsLogMeanWeight) {
  const auto in = sparse_instance(10, 4, 1.0, 9);
  const auto& p = in.params;
  Rng a(5), b(5);
  const auto t = importance_sample_log_partitions(0.0, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p, 50, a);
  const auto set = draw_importance_sample(p.sparse_space(), p.mu0(), 50, b);
  double mean_w = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    mean_w += importance_weight(set.hypothesis(i), p.mu0(), p.sparse_space()) / 50.0;
  EXPECT_NEAR(t.log_z1, std::log(mean_w), 1e-12);
  EXPECT_NEAR(t.log_dz, std::log(mean_w), 1e-12);

  Rng big(6);
  const auto tb =
      importance_sample_log_partitions(0.0, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p, 200000, big);
  EXPECT_NEAR(tb.log_z1, 0.0, 0.01);
}

// exp of the mean-normalized estimate is unbiased for E_p[exp(-beta R)].
TEST(ImportanceSample, LinearDomainUnbiased) {
  const auto in = sparse_instance(8, 3, 3.0, 31);
  const auto& p = in.params;
  const double beta = 1.5;
  const auto ex = exhaustive_log_partitions(beta, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p);
  const double target = std::exp(ex.log_z1 - p.sparse_space().log_cardinality());
  Rng rng(2);
  const int reps = 10000;
  double s = 0.0, ss = 0.0;
  for (int t = 0; t < reps; ++t) {
    const auto tr =
        importance_sample_log_partitions(beta, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p, 10, rng);
    const double v = std::exp(tr.log_z1);
    s += v;
    ss += v * v;
  }
  const double mean = s / reps, se = std::sqrt((ss / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, target, 5 * se);
}

TEST(UniformSample, LinearDomainUnbiased) {
  const auto in = sparse_instance(8, 3, 3.0, 41);
  const auto& p = in.params;
  const double beta = 1.0;
  const auto ex = exhaustive_log_partitions(beta, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p);
  const double target = std::exp(ex.log_dz - p.sparse_space().log_cardinality());
  Rng rng(3);
  const int reps = 10000;
  double s = 0.0, ss = 0.0;
  for (int t = 0; t < reps; ++t) {
    const double v = std::exp(
        uniform_sample_log_partitions(beta, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p, 10, rng).log_dz);
    s += v;
    ss += v * v;
  }
  const double mean = s / reps, se = std::sqrt((ss / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, target, 5 * se);
}

// One hypothesis sample feeds all three sums.
TEST(SharedSample, SameDrawsForAllTerms) {
  const auto in = sparse_instance(10, 4, 1.0, 12);
  const auto& p = in.params;
  Rng a(77), b(77);
  const double beta = 2.0;
  const auto t = uniform_sample_log_partitions(beta, in.xi1, in.xi2, p.sparse_space(), CostKind::linear, p, 20, a);
  const auto set = draw_uniform_sample(p.sparse_space(), 20, b);
  const BoundCost c1(CostKind::linear, p, in.xi1), c2(CostKind::linear, p, in.xi2);
  std::vector<double> l1, l2, lj;
  for (std::size_t i = 0; i < set.size(); ++i) {
    l1.push_back(-beta * c1(set.support(i)) - std::log(20.0));
    l2.push_back(-beta * c2(set.support(i)) - std::log(20.0));
    lj.push_back(-beta * (c1(set.support(i)) + c2(set.support(i))) - std::log(20.0));
  }
  EXPECT_NEAR(t.log_z1, log_sum_exp(l1), 1e-12);
  EXPECT_NEAR(t.log_z2, log_sum_exp(l2), 1e-12);
  EXPECT_NEAR(t.log_dz, log_sum_exp(lj), 1e-12);
}

TEST(Sampling, InvalidSampleSize) {
  const auto in = sparse_instance(6, 2, 1.0, 1);
  Rng rng(1);
  EXPECT_THROW(draw_uniform_sample(in.params.sparse_space(), 0, rng), std::domain_error);
  EXPECT_THROW(draw_importance_sample(in.params.sparse_space(), in.params.mu0(), 0, rng), std::domain_error);
}
