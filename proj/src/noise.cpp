#include "penmin/noise.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "penmin/error.hpp"
#include "penmin/kernels.hpp"

namespace penmin {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(state);
    words[2 * i] = static_cast<std::uint32_t>(v);
    words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

void RngStream::fill_normal(std::span<double> out) {
  for (double& x : out) x = normal_(engine_);
}

NoiseSpec NoiseSpec::iid(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidArgument("NoiseSpec: sigma2 must be finite and > 0 (got " + std::to_string(sigma2) + ")");
  }
  NoiseSpec s;
  s.kind_ = Kind::IidGaussian;
  s.sigma2_ = sigma2;
  return s;
}

NoiseSpec NoiseSpec::factor(Eigen::MatrixXd a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("NoiseSpec: factor A must be square and non-empty");
  if (!a.allFinite()) throw InvalidArgument("NoiseSpec: factor A has non-finite entries");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw InvalidArgument("NoiseSpec: factor A is not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
  NoiseSpec s;
  s.kind_ = Kind::FactorGaussian;
  s.a_ = std::move(a);
  return s;
}

NoiseSpec NoiseSpec::ar1(std::size_t n, double rho, double scale) {
  return factor(symmetric_sqrt(ar1_covariance(n, rho, scale)));
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw InvalidArgument("symmetric_sqrt: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw NumericError("symmetric_sqrt: eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd a = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  // Exact symmetry so the factor passes NoiseSpec validation.
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd ar1_covariance(std::size_t n, double rho, double scale) {
  if (n == 0) throw InvalidArgument("ar1_covariance: n must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("ar1_covariance: |rho| must be < 1");
  if (!(scale > 0.0)) throw InvalidArgument("ar1_covariance: scale must be > 0");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = scale * std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return s;
}

Vector sample_noise(const NoiseSpec& spec, std::size_t n, RngStream& rng) {
  if (n == 0) throw InvalidArgument("sample_noise: n must be >= 1");
  Vector xi(n);
  rng.fill_normal(xi);
  if (spec.kind() == NoiseSpec::Kind::IidGaussian) {
    simd::scale(std::sqrt(spec.sigma2()), xi, xi);
    return xi;
  }
  const auto& a = spec.factor_a();
  if (static_cast<std::size_t>(a.rows()) != n) {
    throw InvalidArgument("sample_noise: factor A is " + std::to_string(a.rows()) + " x " + std::to_string(a.cols()) +
                          ", expected n = " + std::to_string(n));
  }
  // A is symmetric, so row i of A is column i (contiguous in column-major storage).
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = simd::dot({a.col(static_cast<Eigen::Index>(i)).data(), n}, xi);
  }
  return out;
}

Eigen::MatrixXd covariance(const NoiseSpec& spec, std::size_t n) {
  if (spec.kind() == NoiseSpec::Kind::IidGaussian) {
    return spec.sigma2() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  }
  const auto& a = spec.factor_a();
  if (static_cast<std::size_t>(a.rows()) != n) throw InvalidArgument("covariance: factor A does not match n");
  Eigen::MatrixXd s = a.transpose() * a;
  return 0.5 * (s + s.transpose());
}

Vector generate_sample(std::span<const double> signal, const NoiseSpec& spec, RngStream& rng) {
  if (signal.empty()) throw InvalidArgument("generate_sample: empty signal");
  Vector y = sample_noise(spec, signal.size(), rng);
  simd::axpy(1.0, signal, y);
  return y;
}

}  // namespace penmin
