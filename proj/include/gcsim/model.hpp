#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gcsim/hypothesis.hpp"
#include "gcsim/rng.hpp"

namespace gcsim {

// Correlation matrix of the standardized noise: identity, or a symmetric
// positive-definite matrix with unit diagonal. The Cholesky factor is computed
// once at construction and shared between copies.
class Covariance {
 public:
  static Covariance identity(std::size_t d) { return Covariance(d); }

  static Covariance dense(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
      throw std::domain_error("Covariance: matrix must be square and nonempty");
    const auto d = static_cast<std::size_t>(sigma.rows());
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
      if (std::abs(sigma(i, i) - 1.0) > 1e-12)
        throw std::domain_error("Covariance: diagonal entries must equal 1");
      for (Eigen::Index j = 0; j < i; ++j)
        if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12)
          throw std::domain_error("Covariance: matrix must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("Covariance: matrix is not positive definite");
    Covariance c(d);
    c.factor_ = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
    return c;
  }

  // Sigma_ij = rho for i != j.
  static Covariance equicorrelated(std::size_t d, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(d),
                                                  static_cast<Eigen::Index>(d), rho);
    m.diagonal().setOnes();
    return dense(m);
  }

  // Sigma_ij = rho^|i-j|.
  static Covariance ar1(std::size_t d, double rho) {
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return dense(m);
  }

  std::size_t dimension() const noexcept { return d_; }
  bool is_identity() const noexcept { return !factor_; }
  const Eigen::MatrixXd* factor() const noexcept { return factor_.get(); }

  Eigen::MatrixXd matrix() const {
    const auto n = static_cast<Eigen::Index>(d_);
    if (!factor_) return Eigen::MatrixXd::Identity(n, n);
    return *factor_ * factor_->transpose();
  }

 private:
  explicit Covariance(std::size_t d) : d_(d) {}

  std::size_t d_;
  std::shared_ptr<const Eigen::MatrixXd> factor_;
};

// Data-generating model X_i = mu0 + eps_i, eps ~ N(0, sigma^2 Sigma), i = 1..n.
class ModelParams {
 public:
  ModelParams(Hypothesis mu0, double sigma, int n, bool sparse, Covariance covariance)
      : mu0_(std::move(mu0)), sigma_(sigma), n_(n), sparse_(sparse), covariance_(std::move(covariance)) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw std::domain_error("ModelParams: sigma must be > 0");
    if (n_ < 1) throw std::domain_error("ModelParams: n must be >= 1");
    if (mu0_.dimension() == 0) throw std::domain_error("ModelParams: dimension must be positive");
    if (covariance_.dimension() != mu0_.dimension())
      throw std::domain_error("ModelParams: covariance dimension differs from mu0");
  }

  // Hypothesis class {0,1}^d.
  static ModelParams unconstrained(Hypothesis mu0, double sigma, int n = 100) {
    const auto d = mu0.dimension();
    return ModelParams(std::move(mu0), sigma, n, false, Covariance::identity(d));
  }

  // Hypothesis class of popcount-|mu0| vectors.
  static ModelParams sparse(Hypothesis mu0, double sigma, int n = 100) {
    const auto d = mu0.dimension();
    return ModelParams(std::move(mu0), sigma, n, true, Covariance::identity(d));
  }

  ModelParams with_covariance(Covariance c) const {
    return ModelParams(mu0_, sigma_, n_, sparse_, std::move(c));
  }

  ModelParams with_sigma(double sigma) const { return ModelParams(mu0_, sigma, n_, sparse_, covariance_); }

  const Hypothesis& mu0() const noexcept { return mu0_; }
  std::size_t dimension() const noexcept { return mu0_.dimension(); }
  std::size_t sparsity() const noexcept { return mu0_.popcount(); }
  bool is_sparse() const noexcept { return sparse_; }
  double sigma() const noexcept { return sigma_; }
  int n() const noexcept { return n_; }
  const Covariance& covariance() const noexcept { return covariance_; }

  // sigma / sqrt(n): standard deviation of each component of the sample mean.
  double noise_scale() const noexcept { return sigma_ / std::sqrt(static_cast<double>(n_)); }

  SparseSpace sparse_space() const { return SparseSpace(dimension(), sparsity()); }
  FullSpace full_space() const { return FullSpace(dimension()); }

 private:
  Hypothesis mu0_;
  double sigma_;
  int n_;
  bool sparse_;
  Covariance covariance_;
};

// Standardized sample-mean noise xi, so that Xbar = mu0 + (sigma / sqrt(n)) xi.
struct NoiseDraw {
  std::vector<double> xi;

  std::size_t dimension() const noexcept { return xi.size(); }
};

inline NoiseDraw draw_noise(const ModelParams& params, Rng& rng) {
  const std::size_t d = params.dimension();
  std::normal_distribution<double> normal;
  NoiseDraw out{std::vector<double>(d)};
  for (auto& v : out.xi) v = normal(rng);
  if (const auto* L = params.covariance().factor()) {
    Eigen::Map<Eigen::VectorXd> z(out.xi.data(), static_cast<Eigen::Index>(d));
    z = (L->triangularView<Eigen::Lower>() * z).eval();
  }
  return out;
}

// Sample mean Xbar implied by a noise draw.
inline std::vector<double> sample_mean(const ModelParams& params, const NoiseDraw& noise) {
  const double s = params.noise_scale();
  std::vector<double> x(noise.xi.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = s * noise.xi[j];
  for (Index j : params.mu0().support()) x[j] += 1.0;
  return x;
}

}  // namespace gcsim
