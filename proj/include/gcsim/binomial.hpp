#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace gcsim {

// Exact C(n, k), or nullopt when the result does not fit in 64 bits.
// The running product C(n, i) * (n - i) is kept in 128 bits, so every
// intermediate is exact and divisible by (i + 1).
constexpr std::optional<std::uint64_t> try_binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return std::uint64_t{0};
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    acc = acc * (n - i) / (i + 1);
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(acc);
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (auto v = try_binomial(n, k)) return *v;
  throw std::overflow_error("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                            ") exceeds 64-bit range");
}

// log C(n, k). Exact integer when representable, log-gamma otherwise.
inline double log_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (auto v = try_binomial(n, k)) {
    return std::log(static_cast<double>(*v));
  }
  const auto nn = static_cast<double>(n);
  const auto kk = static_cast<double>(k);
  return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
}

}  // namespace gcsim
