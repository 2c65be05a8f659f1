#pragma once

// Binary hypotheses over {0,1}^d and the sparse class of popcount-k vectors.
//
// Canonical order: a hypothesis is read as a d-bit number whose most
// significant bit is component 0, and hypotheses are ordered by that number
// (ascending lexicographic order of the bit string). For the full space the
// 0-based index is the number itself. For the sparse space the 0-based index
// is the combinadic
//
//     index = C(c_1, 1) + C(c_2, 2) + ... + C(c_k, k),   c_1 < c_2 < ... < c_k,
//
// where c_i are the bit significances (d - 1 - component) of the ones. Ranks
// in the public API are 1-based, index 0 <-> rank 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gcsim/binomial.hpp"
#include "gcsim/rng.hpp"

namespace gcsim {

using Index = std::uint32_t;

// A point of {0,1}^d stored by its support (sorted component indices of the ones).
class Hypothesis {
 public:
  Hypothesis() = default;

  Hypothesis(std::size_t dimension, std::vector<Index> support)
      : dimension_(dimension), support_(std::move(support)) {
    if (!std::is_sorted(support_.begin(), support_.end()) ||
        std::adjacent_find(support_.begin(), support_.end()) != support_.end()) {
      std::sort(support_.begin(), support_.end());
      if (std::adjacent_find(support_.begin(), support_.end()) != support_.end())
        throw std::domain_error("Hypothesis: duplicate support index");
    }
    if (!support_.empty() && support_.back() >= dimension_)
      throw std::domain_error("Hypothesis: support index out of range");
  }

  static Hypothesis zeros(std::size_t d) { return Hypothesis(d, {}); }

  static Hypothesis ones(std::size_t d) {
    std::vector<Index> s(d);
    for (std::size_t j = 0; j < d; ++j) s[j] = static_cast<Index>(j);
    return Hypothesis(d, std::move(s));
  }

  // First k components set.
  static Hypothesis leading(std::size_t d, std::size_t k) {
    if (k > d) throw std::domain_error("Hypothesis::leading: k > d");
    std::vector<Index> s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = static_cast<Index>(j);
    return Hypothesis(d, std::move(s));
  }

  // Parses a string of '0'/'1' characters, component 0 first.
  static Hypothesis from_string(std::string_view bits) {
    std::vector<Index> s;
    for (std::size_t j = 0; j < bits.size(); ++j) {
      if (bits[j] == '1') s.push_back(static_cast<Index>(j));
      else if (bits[j] != '0') throw std::domain_error("Hypothesis: expected only '0'/'1' characters");
    }
    return Hypothesis(bits.size(), std::move(s));
  }

  static Hypothesis from_bits(std::span<const std::uint8_t> bits) {
    std::vector<Index> s;
    for (std::size_t j = 0; j < bits.size(); ++j)
      if (bits[j]) s.push_back(static_cast<Index>(j));
    return Hypothesis(bits.size(), std::move(s));
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t popcount() const noexcept { return support_.size(); }
  std::span<const Index> support() const noexcept { return support_; }

  bool operator[](std::size_t j) const {
    return std::binary_search(support_.begin(), support_.end(), static_cast<Index>(j));
  }

  std::vector<std::uint8_t> bits() const {
    std::vector<std::uint8_t> out(dimension_, 0);
    for (Index j : support_) out[j] = 1;
    return out;
  }

  std::string to_string() const {
    std::string out(dimension_, '0');
    for (Index j : support_) out[j] = '1';
    return out;
  }

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;

 private:
  std::size_t dimension_ = 0;
  std::vector<Index> support_;
};

// ---------------------------------------------------------------------------
// Spaces

// All of {0,1}^d.
class FullSpace {
 public:
  explicit FullSpace(std::size_t d) : d_(d) {
    if (d == 0) throw std::domain_error("FullSpace: dimension must be positive");
  }

  std::size_t dimension() const noexcept { return d_; }
  double log_cardinality() const noexcept { return static_cast<double>(d_) * std::log(2.0); }
  std::optional<std::uint64_t> cardinality() const noexcept {
    if (d_ >= 64) return std::nullopt;
    return std::uint64_t{1} << d_;
  }

  Hypothesis at(std::uint64_t index) const;

 private:
  std::size_t d_;
};

// {mu in {0,1}^d : |mu|_1 = k}.
class SparseSpace {
 public:
  SparseSpace(std::size_t d, std::size_t k) : d_(d), k_(k), size_(try_binomial(d, k)) {
    if (d == 0) throw std::domain_error("SparseSpace: dimension must be positive");
    if (k > d) throw std::domain_error("SparseSpace: k must not exceed d");
  }

  std::size_t dimension() const noexcept { return d_; }
  std::size_t sparsity() const noexcept { return k_; }
  std::optional<std::uint64_t> cardinality() const noexcept { return size_; }
  double log_cardinality() const { return log_binomial(d_, k_); }

  // Hit counts range over [min_hits, k].
  std::size_t min_hits() const noexcept { return 2 * k_ > d_ ? 2 * k_ - d_ : 0; }
  std::size_t stratum_count() const noexcept { return k_ - min_hits() + 1; }

  Hypothesis at(std::uint64_t index) const;

 private:
  std::size_t d_;
  std::size_t k_;
  std::optional<std::uint64_t> size_;
};

// ---------------------------------------------------------------------------
// Ranking

inline Hypothesis unrank_full(std::uint64_t i, std::size_t d) {
  if (d == 0 || d > 63) throw std::domain_error("unrank_full: dimension must be in [1, 63]");
  if (i >= (std::uint64_t{1} << d)) throw std::domain_error("unrank_full: index out of range");
  std::vector<Index> s;
  for (std::size_t j = 0; j < d; ++j)
    if ((i >> (d - 1 - j)) & 1u) s.push_back(static_cast<Index>(j));
  return Hypothesis(d, std::move(s));
}

inline std::uint64_t rank_full(const Hypothesis& mu) {
  const std::size_t d = mu.dimension();
  if (d == 0 || d > 63) throw std::domain_error("rank_full: dimension must be in [1, 63]");
  std::uint64_t i = 0;
  for (Index j : mu.support()) i |= std::uint64_t{1} << (d - 1 - j);
  return i;
}

// i-th element (1-based) of the sparse space in canonical order.
inline Hypothesis unrank_sparse(std::uint64_t i, const SparseSpace& space) {
  const auto size = space.cardinality();
  if (!size) throw std::domain_error("unrank_sparse: C(d,k) exceeds the exact 64-bit range");
  if (i < 1 || i > *size) throw std::domain_error("unrank_sparse: rank out of range");
  const std::size_t d = space.dimension();
  const std::size_t k = space.sparsity();

  std::uint64_t rest = i - 1;
  std::vector<Index> s;
  s.reserve(k);
  std::size_t c = d;  // exclusive upper bound on the next significance
  for (std::size_t j = k; j >= 1; --j) {
    // largest c' < c with C(c', j) <= rest; C(j - 1, j) = 0 terminates the scan
    std::uint64_t term = 0;
    do {
      --c;
      auto b = try_binomial(c, j);
      if (b && *b <= rest) {
        term = *b;
        break;
      }
    } while (c > j - 1);
    rest -= term;
    s.push_back(static_cast<Index>(d - 1 - c));
  }
  return Hypothesis(d, std::move(s));
}

inline std::uint64_t rank_sparse(const Hypothesis& mu, const SparseSpace& space) {
  if (mu.dimension() != space.dimension())
    throw std::domain_error("rank_sparse: dimension mismatch");
  if (mu.popcount() != space.sparsity())
    throw std::domain_error("rank_sparse: hypothesis popcount differs from k");
  if (!space.cardinality())
    throw std::domain_error("rank_sparse: C(d,k) exceeds the exact 64-bit range");
  const std::size_t d = mu.dimension();
  const auto supp = mu.support();
  // support ascending -> significances descending; the i-th smallest significance
  // sits at supp[k - i]
  std::uint64_t index = 0;
  const std::size_t k = supp.size();
  for (std::size_t i = 1; i <= k; ++i) index += binomial(d - 1 - supp[k - i], i);
  return index + 1;
}

inline Hypothesis FullSpace::at(std::uint64_t index) const { return unrank_full(index, d_); }
inline Hypothesis SparseSpace::at(std::uint64_t index) const { return unrank_sparse(index + 1, *this); }

// ---------------------------------------------------------------------------
// Hit-count strata

struct Stratum {
  std::size_t h = 0;
  std::optional<std::uint64_t> size;  // exact count when it fits in 64 bits
  double log_size = 0.0;
};

inline void check_hits(std::size_t d, std::size_t k, std::size_t h) {
  const std::size_t lo = 2 * k > d ? 2 * k - d : 0;
  if (k > d || h < lo || h > k)
    throw std::domain_error("hit count " + std::to_string(h) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(k) + "] for d=" + std::to_string(d));
}

// C(k, h) * C(d - k, k - h): number of popcount-k vectors sharing h ones with a fixed one.
inline std::uint64_t stratum_size(std::size_t d, std::size_t k, std::size_t h) {
  check_hits(d, k, h);
  const auto a = binomial(k, h);
  const auto b = binomial(d - k, k - h);
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  if (p > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("stratum_size exceeds 64-bit range");
  return static_cast<std::uint64_t>(p);
}

inline double log_stratum_size(std::size_t d, std::size_t k, std::size_t h) {
  check_hits(d, k, h);
  return log_binomial(k, h) + log_binomial(d - k, k - h);
}

inline std::vector<Stratum> strata(const SparseSpace& space) {
  const std::size_t d = space.dimension(), k = space.sparsity();
  std::vector<Stratum> out;
  for (std::size_t h = space.min_hits(); h <= k; ++h) {
    Stratum s{h, std::nullopt, log_stratum_size(d, k, h)};
    auto a = try_binomial(k, h), b = try_binomial(d - k, k - h);
    if (a && b) {
      unsigned __int128 p = static_cast<unsigned __int128>(*a) * *b;
      if (p <= std::numeric_limits<std::uint64_t>::max()) s.size = static_cast<std::uint64_t>(p);
    }
    out.push_back(s);
  }
  return out;
}

// Number of shared ones, mu^T mu0.
inline std::size_t hit_count(const Hypothesis& mu, const Hypothesis& mu0) {
  if (mu.dimension() != mu0.dimension()) throw std::domain_error("hit_count: dimension mismatch");
  auto a = mu.support(), b = mu0.support();
  std::size_t hits = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++hits; ++i; ++j; }
  }
  return hits;
}

// ---------------------------------------------------------------------------
// Sampling

// Uniform random r-subset of {0, ..., n-1}, sorted (Floyd's selection).
inline std::vector<Index> sample_subset(std::size_t n, std::size_t r, Rng& rng) {
  std::vector<Index> chosen;
  chosen.reserve(r);
  for (std::size_t j = n - r; j < n; ++j) {
    const auto t = static_cast<Index>(std::uniform_int_distribution<std::size_t>(0, j)(rng));
    auto it = std::lower_bound(chosen.begin(), chosen.end(), t);
    if (it != chosen.end() && *it == t) {
      chosen.insert(std::lower_bound(chosen.begin(), chosen.end(), static_cast<Index>(j)),
                    static_cast<Index>(j));
    } else {
      chosen.insert(it, t);
    }
  }
  return chosen;
}

inline Hypothesis sample_uniform(const SparseSpace& space, Rng& rng) {
  return Hypothesis(space.dimension(), sample_subset(space.dimension(), space.sparsity(), rng));
}

inline Hypothesis sample_uniform(const FullSpace& space, Rng& rng) {
  std::vector<Index> s;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t j = 0; j < space.dimension(); ++j)
    if (coin(rng)) s.push_back(static_cast<Index>(j));
  return Hypothesis(space.dimension(), std::move(s));
}

namespace detail {

// Maps sorted ranks among the zeros of mu0 to component indices.
inline std::vector<Index> zero_positions(std::span<const Index> ranks, std::span<const Index> ones) {
  std::vector<Index> out;
  out.reserve(ranks.size());
  std::size_t skipped = 0;
  for (Index r : ranks) {
    Index pos = r + static_cast<Index>(skipped);
    while (skipped < ones.size() && ones[skipped] <= pos) {
      ++skipped;
      ++pos;
    }
    out.push_back(pos);
  }
  return out;
}

}  // namespace detail

// Uniform member of the stratum {mu : |mu|_1 = k, mu^T mu0 = h}.
inline Hypothesis sample_in_stratum(const SparseSpace& space, const Hypothesis& mu0, std::size_t h,
                                    Rng& rng) {
  const std::size_t d = space.dimension(), k = space.sparsity();
  check_hits(d, k, h);
  const auto ones = mu0.support();
  std::vector<Index> s;
  s.reserve(k);
  for (Index i : sample_subset(k, h, rng)) s.push_back(ones[i]);
  const auto misses = sample_subset(d - k, k - h, rng);
  for (Index j : detail::zero_positions(misses, ones)) s.push_back(j);
  return Hypothesis(d, std::move(s));
}

struct StratifiedDraw {
  Hypothesis hypothesis;
  std::size_t hits = 0;
};

// Hit count uniform over its range, then uniform within the stratum.
inline StratifiedDraw sample_stratified(const SparseSpace& space, const Hypothesis& mu0, Rng& rng) {
  if (mu0.dimension() != space.dimension() || mu0.popcount() != space.sparsity())
    throw std::domain_error("sample_stratified: mu0 is not a member of the space");
  const std::size_t h = std::uniform_int_distribution<std::size_t>(space.min_hits(), space.sparsity())(rng);
  return {sample_in_stratum(space, mu0, h, rng), h};
}

// ---------------------------------------------------------------------------
// Stratified proposal q and importance weight w = p / q for the uniform target p.

inline double log_proposal_probability(std::size_t h, const SparseSpace& space) {
  return -std::log(static_cast<double>(space.stratum_count())) -
         log_stratum_size(space.dimension(), space.sparsity(), h);
}

inline double log_importance_weight(std::size_t h, const SparseSpace& space) {
  return std::log(static_cast<double>(space.stratum_count())) +
         log_stratum_size(space.dimension(), space.sparsity(), h) - space.log_cardinality();
}

inline double proposal_probability(const Hypothesis& mu, const Hypothesis& mu0, const SparseSpace& space) {
  return std::exp(log_proposal_probability(hit_count(mu, mu0), space));
}

inline double importance_weight(const Hypothesis& mu, const Hypothesis& mu0, const SparseSpace& space) {
  return std::exp(log_importance_weight(hit_count(mu, mu0), space));
}

// ---------------------------------------------------------------------------
// Enumeration helpers

// Calls fn(span of r sorted indices) for every r-subset of {0..n-1} in
// lexicographic order of the index tuples.
template <typename Fn>
void for_each_subset(std::size_t n, std::size_t r, Fn&& fn) {
  if (r > n) return;
  std::vector<Index> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = static_cast<Index>(i);
  while (true) {
    fn(std::span<const Index>(idx));
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Calls fn(hypothesis) for every member of stratum h.
template <typename Fn>
void for_each_in_stratum(const SparseSpace& space, const Hypothesis& mu0, std::size_t h, Fn&& fn) {
  const std::size_t d = space.dimension(), k = space.sparsity();
  check_hits(d, k, h);
  const auto ones = mu0.support();
  std::vector<Index> s(k);
  for_each_subset(k, h, [&](std::span<const Index> hit) {
    for_each_subset(d - k, k - h, [&](std::span<const Index> miss) {
      for (std::size_t i = 0; i < h; ++i) s[i] = ones[hit[i]];
      const auto zeros = detail::zero_positions(miss, ones);
      std::copy(zeros.begin(), zeros.end(), s.begin() + static_cast<std::ptrdiff_t>(h));
      fn(Hypothesis(d, s));
    });
  });
}

}  // namespace gcsim
