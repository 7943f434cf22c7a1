#include <cmath>
#include <random>

#include "doctest.h"
#include "penmin/error.hpp"
#include "penmin/noise.hpp"
#include "penmin/theory.hpp"

using namespace penmin;
using doctest::Approx;

namespace {

BiasProfile profile(double b, double b_prime, std::size_t d_m1) { return {b, "m1", d_m1, b_prime, "m2"}; }

Eigen::MatrixXd random_psd(std::size_t n, std::mt19937_64& g) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(g);
  return a.transpose() * a / static_cast<double>(n);
}

ProjectionModel random_basis_model(std::size_t n, std::size_t dim, std::mt19937_64& g) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd cols(n, dim);
  for (Eigen::Index i = 0; i < cols.size(); ++i) cols.data()[i] = d(g);
  return ProjectionModel::from_basis("rand", cols);
}

}  // namespace

TEST_CASE("penalties") {
  const ProjectionModel m = ProjectionModel::regressogram("r", 12, 3);
  const Penalties p = penalties(m, 2.0 * Eigen::MatrixXd::Identity(12, 12));
  CHECK(p.pen_min == Approx(2.0 * 3 / 12));
  CHECK(p.pen_opt == Approx(2.0 * 2.0 * 3 / 12));
  const Penalties z = penalties(ProjectionModel::null_model("z", 4), Eigen::MatrixXd::Identity(4, 4));
  CHECK(z.pen_min == 0.0);
  CHECK(z.pen_opt == 0.0);
  CHECK_THROWS_AS(penalties(m, Eigen::MatrixXd::Identity(3, 3)), InvalidArgument);

  std::mt19937_64 g(4);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd s = random_psd(15, g);
    const Penalties q = penalties(random_basis_model(15, 4, g), s);
    CHECK(q.pen_opt == 2.0 * q.pen_min);
  }
}

TEST_CASE("expected risks: closed forms") {
  std::mt19937_64 g(6);
  const std::size_t n = 16;
  const Eigen::MatrixXd s = random_psd(n, g);
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(static_cast<double>(i));

  const ExpectedRisks full = expected_risks(ProjectionModel::regressogram("full", n, n), f, s);
  CHECK(full.risk == Approx(s.trace() / n));
  CHECK(full.emp_risk == Approx(0.0).epsilon(1e-12));

  const Vector zero(n, 0.0);
  const ExpectedRisks null = expected_risks(ProjectionModel::null_model("z", n), zero, s);
  CHECK(null.risk == 0.0);
  CHECK(null.emp_risk == Approx(s.trace() / n));

  // risk + emp_risk = 2 bias + tr(Sigma) / n
  for (int t = 0; t < 20; ++t) {
    const ProjectionModel m = random_basis_model(n, 1 + t % 7, g);
    const ExpectedRisks e = expected_risks(m, f, s);
    CHECK(e.risk + e.emp_risk == Approx(2.0 * bias(m, f) + s.trace() / n).epsilon(1e-12));
  }
}

TEST_CASE("expected risks: Monte-Carlo within 4 standard errors") {
  const std::size_t n = 100, reps = 10000;
  const NoiseSpec spec = NoiseSpec::ar1(n, 0.6, 1.0);
  const Eigen::MatrixXd s = covariance(spec, n);
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::cos(0.1 * static_cast<double>(i));
  const std::vector<std::size_t> k{1, 5, 20};
  const ModelCollection c = regressogram_collection(n, k);
  std::vector<std::vector<double>> risk(c.size()), emp(c.size());
  RngStream rng(17, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    const Vector y = generate_sample(f, spec, rng);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const FitResult fr = fit(c[i], y);
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d += (fr.fitted[j] - f[j]) * (fr.fitted[j] - f[j]);
      risk[i].push_back(d / n);
      emp[i].push_back(fr.emp_risk);
    }
  }
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / (v.size() - 1) / v.size())};
  };
  for (std::size_t i = 0; i < c.size(); ++i) {
    const ExpectedRisks e = expected_risks(c[i], f, s);
    const auto [mr, sr] = mean_se(risk[i]);
    const auto [me, se] = mean_se(emp[i]);
    CHECK(std::abs(mr - e.risk) <= 4 * sr);
    CHECK(std::abs(me - e.emp_risk) <= 4 * se);
  }
}

TEST_CASE("theorem constants: reference values") {
  // 41 sqrt(ln(1e6) / 1e6), evaluated independently
  const TheoremConstants k = theorem_constants(profile(0.0, 0.0, 1000000), 1000000, 7, 1.0, 1.0);
  CHECK(k.eta_minus == Approx(0.15239).epsilon(1e-4));
  CHECK(k.eta_minus == Approx(41.0 * std::sqrt(std::log(1e6) / 1e6)).epsilon(1e-14));
  CHECK(k.eta_plus == Approx(2.0 * k.eta_minus).epsilon(1e-14));
  CHECK(k.prob_bound == Approx(4.0 * 7 / 1e6));
  CHECK_FALSE(k.vacuous());

  // sigma^2 = 4, B = 0.01, B' = 0.05, n = 5000, D = 1000, gamma = 2
  const double sigma = 2.0, b = 0.01, bp = 0.05, n = 5000, d = 1000, gamma = 2.0;
  const double root = std::sqrt(gamma * std::log(n) / n);
  const TheoremConstants q = theorem_constants(profile(b, bp, 1000), 5000, 3, sigma * sigma, gamma);
  CHECK(q.eta_minus == Approx((n / d) * (57 * sigma * std::sqrt(b) + 41 * sigma * sigma) * root / (sigma * sigma)));
  CHECK(q.eta_plus ==
        Approx((n / d) * (20 * (bp - b) + (114 * sigma * std::sqrt(bp) + 82 * sigma * sigma) * root) / (sigma * sigma)));
}

TEST_CASE("theorem constants: B' = B drops the bias-gap term") {
  const TheoremConstants a = theorem_constants(profile(0.2, 0.2, 400), 4000, 3, 1.0, 1.0);
  const double root = std::sqrt(std::log(4000.0) / 4000.0);
  CHECK(a.eta_plus == Approx(10.0 * (114 * std::sqrt(0.2) + 82) * root));
}

TEST_CASE("theorem constants: precondition") {
  BiasProfile p{0.0, "m1", 10, INFINITY, ""};
  CHECK_THROWS_AS(theorem_constants(p, 10, 1, 1.0, 1.0), PreconditionError);
  try {
    theorem_constants(p, 10, 1, 1.0, 1.0);
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()) == "theorem hypothesis D_{m2} <= D_{m1}/20 unsatisfiable");
  }
  const std::vector<std::size_t> k{8, 16};
  CHECK_THROWS_AS(theorem_constants(regressogram_collection(16, k), Vector(16, 0.0), 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(theorem_constants(profile(0, 0, 10), 10, 1, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("theorem constants: monotone in D_m1 and gamma") {
  double prev = INFINITY;
  double prev_plus = INFINITY;
  for (std::size_t d : {100, 200, 400, 800}) {
    const auto k = theorem_constants(profile(0.1, 0.3, d), 10000, 5, 1.0, 1.0);
    CHECK(k.eta_minus <= prev);
    CHECK(k.eta_plus <= prev_plus);
    prev = k.eta_minus;
    prev_plus = k.eta_plus;
  }
  prev = -1.0;
  prev_plus = -1.0;
  for (double gamma : {0.0, 0.5, 1.0, 2.0}) {
    const auto k = theorem_constants(profile(0.1, 0.3, 400), 10000, 5, 1.0, gamma);
    CHECK(k.eta_minus >= prev);
    CHECK(k.eta_plus >= prev_plus);
    prev = k.eta_minus;
    prev_plus = k.eta_plus;
  }
}

TEST_CASE("proof thresholds") {
  const TheoremConstants k = theorem_constants(profile(0.04, 0.09, 500), 10000, 5, 2.0, 1.0);
  const ProofThresholds z = proof_thresholds(k, 2.0, 0.0);
  CHECK(z.c1 == 2.0);
  CHECK(z.c2 == Approx(2.0 + 20.0 * 10000 / 500 * (0.09 - 0.04)));

  const TheoremConstants u = theorem_constants(profile(0.0, 0.0, 500), 10000, 5, 2.0, 1.0);
  const ProofThresholds uz = proof_thresholds(u, 2.0, 0.0);
  CHECK(uz.c1 == 2.0);
  CHECK(uz.c2 == 2.0);

  CHECK_THROWS_AS(proof_thresholds(k, 2.0, -1.0), InvalidArgument);
  BiasProfile no_m2{0.0, "m1", 10, INFINITY, ""};
  TheoremConstants bad = k;
  bad.b_prime = INFINITY;
  CHECK_THROWS_AS(proof_thresholds(bad, 2.0, 1.0), PreconditionError);
}

TEST_CASE("proof thresholds sit inside the eta bands at x = gamma ln n") {
  // The reduction needs sqrt(x / n) <= 1/60, so n is kept large.
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 100000 + static_cast<std::size_t>(u(g) * 900000);
    const std::size_t d = 20 + static_cast<std::size_t>(u(g) * (n - 20));
    const double sigma2 = 0.1 + 5 * u(g);
    const double b = u(g) * u(g);
    const double bp = b + u(g);
    const double gamma = 0.1 + 1.9 * u(g);
    const TheoremConstants k = theorem_constants(profile(b, bp, d), n, 10, sigma2, gamma);
    const ProofThresholds p = proof_thresholds(k, sigma2, gamma * std::log(static_cast<double>(n)));
    CHECK(sigma2 * (1 - k.eta_minus) <= p.c1);
    CHECK(p.c2 <= sigma2 * (1 + k.eta_plus));
    CHECK(p.c1 <= sigma2);
    CHECK(sigma2 <= p.c2);
  }
}

TEST_CASE("crit_c and deviation_bound") {
  const std::size_t n = 8;
  const ProjectionModel m = ProjectionModel::regressogram("r", n, 2);
  const Vector f{1, 0, 1, 0, 2, 2, 2, 2};
  CHECK(crit_c(m, f, 1.5, 1.5) == Approx(bias(m, f)));
  const ProjectionModel full = ProjectionModel::regressogram("full", n, n);
  CHECK(crit_c(full, f, 1.5, 4.0) == Approx(2.5));
  CHECK_THROWS_AS(crit_c(m, f, 1.0, -1.0), InvalidArgument);

  CHECK(deviation_bound(m, f, 1.0, 0.0) == 0.0);
  const Vector in_span{3, 3, 3, 3, -1, -1, -1, -1};
  const double x = 2.0;
  CHECK(deviation_bound(m, in_span, 4.0, x) == Approx(2 * 4.0 * (std::sqrt(x / n) + x / n)));
  const double resid = std::sqrt(n * bias(m, f));
  CHECK(deviation_bound(m, f, 4.0, x) ==
        Approx(2 * 4.0 * (std::sqrt(x / n) + x / n) + 2 * 2.0 * std::sqrt(2 * x) / n * resid));
}

TEST_CASE("expected recentred criterion equals crit_C") {
  // E[G_C] = E[emp_risk] + C D / n - sigma^2 under iid noise.
  std::mt19937_64 g(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + t;
    const double sigma2 = 0.2 + u(g);
    const double c = 3 * u(g);
    Vector f(n);
    for (auto& x : f) x = u(g) - 0.5;
    const ProjectionModel m = random_basis_model(n, 1 + t % 5, g);
    const ExpectedRisks e = expected_risks(m, f, sigma2 * Eigen::MatrixXd::Identity(n, n));
    CHECK(e.emp_risk + c * m.dim() / n - sigma2 == Approx(crit_c(m, f, sigma2, c)).epsilon(1e-12));
  }
}

TEST_CASE("recentred criterion is C-affine and uses the noise energy") {
  const ProjectionModel m = ProjectionModel::regressogram("r", 4, 2);
  const Vector eps{0.5, -0.5, 1.0, 0.0};
  const Vector y{1.5, 0.5, 1.0, 0.0};
  const double g0 = recentred_criterion(m, y, eps, 0.0);
  CHECK(g0 == Approx(fit(m, y).emp_risk - (0.25 + 0.25 + 1.0) / 4));
  CHECK(recentred_criterion(m, y, eps, 2.0) == Approx(g0 + 2.0 * 2 / 4));
}

TEST_CASE("oracle model") {
  const ModelCollection c = dyadic_regressogram_collection(16, 16);
  Vector f(16);
  for (std::size_t i = 0; i < 16; ++i) f[i] = i < 8 ? 1.0 : -2.0;
  CHECK(oracle_model(c, f, f) == "reg2");

  RngStream rng(19, 0);
  for (int t = 0; t < 20; ++t) {
    const Vector y = generate_sample(f, NoiseSpec::iid(1.0), rng);
    const ModelId o = oracle_model(c, f, y);
    auto risk = [&](const ProjectionModel& m) {
      const Vector p = m.project(y);
      double s = 0.0;
      for (std::size_t i = 0; i < 16; ++i) s += (p[i] - f[i]) * (p[i] - f[i]);
      return s / 16;
    };
    for (const auto& m : c.models()) CHECK(risk(c.at(o)) <= risk(m));
  }
  CHECK_THROWS_AS(oracle_model(c, Vector(3), f), InvalidArgument);
}
