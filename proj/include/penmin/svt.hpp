#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace penmin::svt {

// 2 sqrt(n) sigma: the bulk edge of the singular values of an n x n matrix
// of iid N(0, sigma^2) entries.
double minimal_threshold(std::size_t n, double sigma);
// (4 / sqrt(3)) sqrt(n) sigma = (2 / sqrt(3)) minimal_threshold.
double optimal_threshold(std::size_t n, double sigma);

// Zeroes the singular values below lambda and reconstructs.
Eigen::MatrixXd hard_threshold_denoise(const Eigen::MatrixXd& m, double lambda);

// Singular values, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

struct SvtConfig {
  std::size_t n = 200;
  double sigma = 1.0;
  std::size_t rank = 1;
  std::vector<double> signal_singular_values{};
  std::size_t replicates = 50;
  std::uint64_t seed = 1;

  // Throws InvalidArgument on a violated invariant.
  void validate() const;
};

struct ThresholdRow {
  std::string name;
  double lambda = 0.0;
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  std::size_t replicates = 0;
};

struct SvtReport {
  std::vector<ThresholdRow> rows;  // "minimal", then "optimal"
  // Per-replicate MSE(minimal) - MSE(optimal).
  double paired_diff_mean = 0.0;
  double paired_diff_stderr = 0.0;
  // Largest singular value of the noise part alone, per replicate.
  std::vector<double> noise_top_singular_values;
};

// X = S + sigma Z with S = U diag(s) V^T for random orthonormal U, V and Z
// standard Gaussian; per-entry Frobenius MSE of the denoised matrix at both
// thresholds. Replicate r draws from stream (seed, r).
SvtReport svt_experiment(const SvtConfig& config);

// Rows (threshold_name, lambda, mse_mean, mse_stderr, replicates).
std::string report_to_csv(const SvtReport& report);

}  // namespace penmin::svt
