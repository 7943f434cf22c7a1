#include <cmath>

#include "doctest.h"
#include "penmin/error.hpp"
#include "penmin/noise.hpp"

using namespace penmin;
using doctest::Approx;

TEST_CASE("NoiseSpec validation") {
  CHECK_THROWS_AS(NoiseSpec::iid(0.0), InvalidArgument);
  CHECK_THROWS_AS(NoiseSpec::iid(-1.0), InvalidArgument);
  CHECK_THROWS_AS(NoiseSpec::iid(NAN), InvalidArgument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(NoiseSpec::factor(asym), InvalidArgument);
  CHECK_THROWS_AS(NoiseSpec::factor(Eigen::MatrixXd::Identity(2, 3)), InvalidArgument);
}

TEST_CASE("covariance examples") {
  CHECK(covariance(NoiseSpec::iid(2.0), 3) == 2.0 * Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd a = Eigen::Vector2d(1, 2).asDiagonal();
  CHECK(covariance(NoiseSpec::factor(a), 2) == Eigen::Matrix2d(Eigen::Vector2d(1, 4).asDiagonal()));

  RngStream rng(1, 0);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd m(6, 6);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const Eigen::MatrixXd s = covariance(NoiseSpec::factor(sym), 6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("sample_noise size mismatch") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_noise(NoiseSpec::factor(Eigen::MatrixXd::Identity(3, 3)), 4, rng), InvalidArgument);
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  const Vector va = sample_noise(NoiseSpec::iid(1.0), 16, a);
  CHECK(va == sample_noise(NoiseSpec::iid(1.0), 16, b));
  CHECK(va != sample_noise(NoiseSpec::iid(1.0), 16, c));
  CHECK(va != sample_noise(NoiseSpec::iid(1.0), 16, d));
}

TEST_CASE("factor A = sigma I reproduces the iid draw exactly") {
  const double sigma = 1.7;
  RngStream a(11, 0), b(11, 0);
  const Vector iid = sample_noise(NoiseSpec::iid(sigma * sigma), 20, a);
  const Vector fac = sample_noise(NoiseSpec::factor(sigma * Eigen::MatrixXd::Identity(20, 20)), 20, b);
  for (std::size_t i = 0; i < 20; ++i) CHECK(iid[i] == Approx(fac[i]).epsilon(1e-15));
}

TEST_CASE("generate_sample: F = 0 gives Y = eps, fixed rng gives identical Y") {
  const Vector zero(8, 0.0);
  RngStream a(5, 1), b(5, 1);
  CHECK(generate_sample(zero, NoiseSpec::iid(1.0), a) == sample_noise(NoiseSpec::iid(1.0), 8, b));
  RngStream c(5, 2), d(5, 2);
  const Vector f{1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(generate_sample(f, NoiseSpec::iid(0.5), c) == generate_sample(f, NoiseSpec::iid(0.5), d));
}

TEST_CASE("Monte-Carlo: mean of Y matches F within 4 standard errors") {
  const std::size_t n = 10, reps = 10000;
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<double>(i) - 4.5;
  const NoiseSpec spec = NoiseSpec::ar1(n, 0.5, 2.0);
  const Eigen::MatrixXd sigma = covariance(spec, n);
  Vector mean(n, 0.0);
  RngStream rng(21, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    const Vector y = generate_sample(f, spec, rng);
    for (std::size_t i = 0; i < n; ++i) mean[i] += y[i] / reps;
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(mean[i] - f[i]) <= 4.0 * std::sqrt(sigma(i, i) / reps));
  }
}

TEST_CASE("AR(1) factor: A is symmetric, A^2 = Sigma, lag-1 covariance ~ rho") {
  const std::size_t n = 200, reps = 10000;
  const double rho = 0.6;
  const NoiseSpec spec = NoiseSpec::ar1(n, rho, 1.0);
  const Eigen::MatrixXd& a = spec.factor_a();
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a * a - ar1_covariance(n, rho, 1.0)).cwiseAbs().maxCoeff() <= 1e-10);

  // Lag-1 product at one interior pair; Var(XY) = 1 + rho^2 for unit-variance Gaussians.
  RngStream rng(31, 0);
  double acc = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const Vector e = sample_noise(spec, n, rng);
    acc += e[100] * e[101];
  }
  const double se = std::sqrt((1.0 + rho * rho) / reps);
  CHECK(std::abs(acc / reps - rho) <= 4.0 * se);
}

TEST_CASE("empirical covariance matches covariance(spec) entrywise") {
  const std::size_t n = 6, reps = 100000;
  const NoiseSpec spec = NoiseSpec::ar1(n, -0.4, 1.5);
  const Eigen::MatrixXd sigma = covariance(spec, n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  RngStream rng(41, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    const Vector e = sample_noise(spec, n, rng);
    const Eigen::Map<const Eigen::VectorXd> v(e.data(), n);
    acc.noalias() += v * v.transpose();
  }
  acc /= static_cast<double>(reps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Var(e_i e_j) = Sigma_ii Sigma_jj + Sigma_ij^2 for a centred Gaussian pair.
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / reps);
      CHECK(std::abs(acc(i, j) - sigma(i, j)) <= 5.0 * se);
    }
  }
}

TEST_CASE("symmetric_sqrt clamps round-off negatives") {
  Eigen::MatrixXd s(2, 2);
  s << 1, 1, 1, 1;  // rank one; eigenvalue 0 may come out slightly negative
  const Eigen::MatrixXd a = symmetric_sqrt(s);
  CHECK((a * a - s).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.allFinite());
}
