#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace gcsim {

// log sum_i exp(a_i), shifted by the maximum so that no term overflows and
// the largest term contributes exactly exp(0).
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("log_sum_exp: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;  // all -inf, or a +inf/NaN term dominates
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

// log((1/n) sum_i exp(a_i))
inline double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

// Single-pass log-sum-exp with running-max rescaling. Partial accumulators
// combine with merge(), which is associative up to rounding.
class LogSumExpAccumulator {
 public:
  void add(double v) noexcept {
    if (v == -std::numeric_limits<double>::infinity()) return;
    if (v <= max_) {
      sum_ += std::exp(v - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    }
  }

  void merge(const LogSumExpAccumulator& other) noexcept {
    if (other.sum_ == 0.0) return;
    if (sum_ == 0.0) {
      *this = other;
    } else if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  bool empty() const noexcept { return sum_ == 0.0; }

  double value() const noexcept {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

}  // namespace gcsim
