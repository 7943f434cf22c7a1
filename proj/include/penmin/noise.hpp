#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "penmin/models.hpp"

namespace penmin {

// Reproducible random stream keyed by (seed, stream_id). Replicate r of an
// experiment uses stream_id = r, so results never depend on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal() { return normal_(engine_); }
  void fill_normal(std::span<double> out);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Gaussian noise law, either sigma^2 I_n or N(0, Sigma) with Sigma = A^T A = A^2
// for a symmetric factor A.
class NoiseSpec {
 public:
  enum class Kind { IidGaussian, FactorGaussian };

  // Throws InvalidArgument unless sigma2 > 0 and finite.
  static NoiseSpec iid(double sigma2);
  // Throws InvalidArgument unless A is square, finite and symmetric to 1e-10.
  static NoiseSpec factor(Eigen::MatrixXd a);
  // Factor of Sigma_ij = scale * rho^|i-j| via the symmetric square root.
  static NoiseSpec ar1(std::size_t n, double rho, double scale);

  Kind kind() const { return kind_; }
  double sigma2() const { return sigma2_; }
  const Eigen::MatrixXd& factor_a() const { return a_; }

 private:
  NoiseSpec() = default;
  Kind kind_ = Kind::IidGaussian;
  double sigma2_ = 1.0;
  Eigen::MatrixXd a_;
};

// Symmetric PSD square root: returns A = A^T with A^2 = sigma (negative
// eigenvalues from round-off are clamped to zero).
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma);
// Sigma_ij = scale * rho^|i-j|.
Eigen::MatrixXd ar1_covariance(std::size_t n, double rho, double scale);

// sqrt(sigma2) * xi, or A * xi; xi ~ N(0, I_n) drawn from rng.
Vector sample_noise(const NoiseSpec& spec, std::size_t n, RngStream& rng);
// sigma2 I_n or A^2.
Eigen::MatrixXd covariance(const NoiseSpec& spec, std::size_t n);
// Y = F + sample_noise(spec, |F|, rng).
Vector generate_sample(std::span<const double> signal, const NoiseSpec& spec, RngStream& rng);

}  // namespace penmin
