#include "penmin/theory.hpp"

#include <cmath>

#include "penmin/error.hpp"
#include "penmin/kernels.hpp"
#include "penmin/path.hpp"

namespace penmin {

namespace {

void require_sigma(const ProjectionModel& model, const Eigen::MatrixXd& sigma) {
  if (static_cast<std::size_t>(sigma.rows()) != model.n() || static_cast<std::size_t>(sigma.cols()) != model.n()) {
    throw InvalidArgument("Sigma must be n x n with n = " + std::to_string(model.n()));
  }
}

void require_signal(const ProjectionModel& model, std::span<const double> signal) {
  if (signal.size() != model.n()) {
    throw InvalidArgument("signal length " + std::to_string(signal.size()) + " does not match n = " +
                          std::to_string(model.n()));
  }
}

void require_sigma2(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("sigma2 must be finite and > 0");
}

}  // namespace

Penalties penalties(const ProjectionModel& model, const Eigen::MatrixXd& sigma) {
  require_sigma(model, sigma);
  Penalties p;
  p.pen_min = model.trace_product(sigma) / static_cast<double>(model.n());
  p.pen_opt = 2.0 * p.pen_min;
  return p;
}

ExpectedRisks expected_risks(const ProjectionModel& model, std::span<const double> signal,
                             const Eigen::MatrixXd& sigma) {
  require_sigma(model, sigma);
  require_signal(model, signal);
  const double n = static_cast<double>(model.n());
  const double b = bias(model, signal);
  const double tr_pi = model.trace_product(sigma) / n;
  const double tr = sigma.trace() / n;
  return {b + tr_pi, b + tr - tr_pi};
}

TheoremConstants theorem_constants(const BiasProfile& profile, std::size_t n, std::size_t card_m, double sigma2,
                                   double gamma) {
  require_sigma2(sigma2);
  if (!(gamma >= 0.0)) throw InvalidArgument("theorem_constants: gamma must be >= 0");
  if (!profile.has_m2()) {
    throw PreconditionError("theorem hypothesis D_{m2} <= D_{m1}/20 unsatisfiable");
  }
  if (profile.d_m1 == 0) throw PreconditionError("theorem hypothesis needs D_{m1} > 0");

  TheoremConstants k;
  k.b = profile.b;
  k.b_prime = profile.b_prime;
  k.m1 = profile.m1;
  k.m2 = profile.m2;
  k.d_m1 = profile.d_m1;
  k.gamma = gamma;
  k.sigma2 = sigma2;
  k.n = n;
  k.card_m = card_m;

  const double nn = static_cast<double>(n);
  const double sigma = std::sqrt(sigma2);
  const double ratio = nn / static_cast<double>(profile.d_m1);
  const double rate = std::sqrt(gamma * std::log(nn) / nn);
  k.eta_minus = ratio * (57.0 * sigma * std::sqrt(k.b) + 41.0 * sigma2) * rate / sigma2;
  k.eta_plus =
      ratio * (20.0 * (k.b_prime - k.b) + (114.0 * sigma * std::sqrt(k.b_prime) + 82.0 * sigma2) * rate) / sigma2;
  k.prob_bound = 4.0 * static_cast<double>(card_m) * std::pow(nn, -gamma);
  return k;
}

TheoremConstants theorem_constants(const ModelCollection& collection, std::span<const double> signal, double sigma2,
                                   double gamma) {
  if (collection.empty()) throw InvalidArgument("theorem_constants: empty collection");
  return theorem_constants(collection_bias_profile(collection, signal), collection.n(), collection.size(), sigma2,
                           gamma);
}

ProofThresholds proof_thresholds(const TheoremConstants& k, double sigma2, double x) {
  require_sigma2(sigma2);
  if (!(x >= 0.0)) throw InvalidArgument("proof_thresholds: x must be >= 0");
  if (!std::isfinite(k.b_prime) || k.m2.empty()) {
    throw PreconditionError("theorem hypothesis D_{m2} <= D_{m1}/20 unsatisfiable");
  }
  const double n = static_cast<double>(k.n);
  const double sigma = std::sqrt(sigma2);
  const double lead = 20.0 * n / static_cast<double>(k.d_m1);
  const double r = std::sqrt(x / n);
  const double r2 = std::sqrt(2.0 * x / n);
  ProofThresholds t;
  t.c1 = sigma2 - lead * (2.0 * sigma2 * r + 3.0 * sigma2 * x / n + 2.0 * sigma * r2 * std::sqrt(k.b));
  t.c2 = sigma2 + lead * (k.b_prime - k.b + 2.0 * sigma * r2 * (std::sqrt(k.b) + std::sqrt(k.b_prime)) +
                          2.0 * sigma2 * (2.0 * r + 3.0 * x / n));
  return t;
}

double crit_c(const ProjectionModel& model, std::span<const double> signal, double sigma2, double c) {
  require_signal(model, signal);
  if (!(c >= 0.0)) throw InvalidArgument("crit_c: C must be >= 0");
  const double n = static_cast<double>(model.n());
  return bias(model, signal) + (c - sigma2) * static_cast<double>(model.dim()) / n;
}

double deviation_bound(const ProjectionModel& model, std::span<const double> signal, double sigma2, double x) {
  require_signal(model, signal);
  require_sigma2(sigma2);
  if (!(x >= 0.0)) throw InvalidArgument("deviation_bound: x must be >= 0");
  const double n = static_cast<double>(model.n());
  const double residual_norm = std::sqrt(bias(model, signal) * n);
  return 2.0 * sigma2 * (std::sqrt(x / n) + x / n) + 2.0 * std::sqrt(sigma2) * std::sqrt(2.0 * x) / n * residual_norm;
}

double recentred_criterion(const ProjectionModel& model, std::span<const double> y, std::span<const double> noise,
                           double c) {
  require_signal(model, y);
  require_signal(model, noise);
  const double n = static_cast<double>(model.n());
  const FitResult f = fit(model, y);
  return f.emp_risk + c * static_cast<double>(model.dim()) / n - simd::sum_sq(noise) / n;
}

ModelId oracle_model(const ModelCollection& collection, std::span<const double> signal, std::span<const double> y) {
  if (collection.empty()) throw InvalidArgument("oracle_model: empty collection");
  if (signal.size() != collection.n() || y.size() != collection.n()) {
    throw InvalidArgument("oracle_model: signal and Y must have length n");
  }
  std::vector<PathLine> lines;
  lines.reserve(collection.size());
  const double n = static_cast<double>(collection.n());
  Vector proj(collection.n());
  for (const auto& m : collection.models()) {
    m.project(y, proj);
    lines.push_back({m.id(), simd::sq_dist(proj, signal) / n, static_cast<double>(m.dim()) / n});
  }
  return brute_force_select(lines, 0.0);
}

}  // namespace penmin
