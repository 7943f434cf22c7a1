#include "penmin/svt.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <Eigen/SVD>

#include "penmin/error.hpp"
#include "penmin/noise.hpp"

namespace penmin::svt {

namespace {

void require_scale(std::size_t n, double sigma) {
  if (n == 0) throw InvalidArgument("threshold: n must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("threshold: sigma must be finite and > 0");
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd z(rows, cols);
  rng.fill_normal({z.data(), static_cast<std::size_t>(z.size())});
  return z;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index k, RngStream& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(n, k, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

double minimal_threshold(std::size_t n, double sigma) {
  require_scale(n, sigma);
  return 2.0 * std::sqrt(static_cast<double>(n)) * sigma;
}

double optimal_threshold(std::size_t n, double sigma) {
  require_scale(n, sigma);
  return 4.0 / std::sqrt(3.0) * std::sqrt(static_cast<double>(n)) * sigma;
}

Eigen::MatrixXd hard_threshold_denoise(const Eigen::MatrixXd& m, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("hard_threshold_denoise: lambda must be >= 0");
  if (!m.allFinite()) throw NumericError("hard_threshold_denoise: non-finite input");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("hard_threshold_denoise: SVD failed");
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) >= lambda) ++keep;
  if (keep == s.size()) return m;
  return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  if (svd.info() != Eigen::Success) throw NumericError("singular_values: SVD failed");
  return svd.singularValues();
}

void SvtConfig::validate() const {
  if (n == 0) throw InvalidArgument("SvtConfig: n must be >= 1");
  if (!(sigma > 0.0)) throw InvalidArgument("SvtConfig: sigma must be > 0");
  if (rank > n) throw InvalidArgument("SvtConfig: rank must be <= n");
  if (signal_singular_values.size() != rank) {
    throw InvalidArgument("SvtConfig: need exactly `rank` signal singular values");
  }
  for (double s : signal_singular_values) {
    if (!(s > 0.0)) throw InvalidArgument("SvtConfig: signal singular values must be > 0");
  }
  if (replicates == 0) throw InvalidArgument("SvtConfig: replicates must be >= 1");
}

SvtReport svt_experiment(const SvtConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto r = static_cast<Eigen::Index>(config.rank);
  const double lam_min = minimal_threshold(config.n, config.sigma);
  const double lam_opt = optimal_threshold(config.n, config.sigma);
  const double entries = static_cast<double>(n) * static_cast<double>(n);

  std::vector<double> mse_min;
  std::vector<double> mse_opt;
  std::vector<double> diff;
  SvtReport report;
  for (std::size_t rep = 0; rep < config.replicates; ++rep) {
    RngStream rng(config.seed, rep);
    Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(n, n);
    if (r > 0) {
      const Eigen::MatrixXd u = random_orthonormal(n, r, rng);
      const Eigen::MatrixXd v = random_orthonormal(n, r, rng);
      const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(config.signal_singular_values.data(), r);
      signal = u * s.asDiagonal() * v.transpose();
    }
    const Eigen::MatrixXd noise = config.sigma * gaussian_matrix(n, n, rng);
    const Eigen::MatrixXd x = signal + noise;
    const double a = (hard_threshold_denoise(x, lam_min) - signal).squaredNorm() / entries;
    const double b = (hard_threshold_denoise(x, lam_opt) - signal).squaredNorm() / entries;
    mse_min.push_back(a);
    mse_opt.push_back(b);
    diff.push_back(a - b);
    report.noise_top_singular_values.push_back(singular_values(noise)(0));
  }
  report.rows.push_back({"minimal", lam_min, mean_of(mse_min), stderr_of(mse_min), config.replicates});
  report.rows.push_back({"optimal", lam_opt, mean_of(mse_opt), stderr_of(mse_opt), config.replicates});
  report.paired_diff_mean = mean_of(diff);
  report.paired_diff_stderr = stderr_of(diff);
  return report;
}

std::string report_to_csv(const SvtReport& report) {
  std::ostringstream os;
  os << "threshold_name,lambda,mse_mean,mse_stderr,replicates\n";
  for (const auto& row : report.rows) {
    os << fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", row.name, row.lambda, row.mse_mean, row.mse_stderr,
                      row.replicates);
  }
  return os.str();
}

}  // namespace penmin::svt
