#pragma once

// Closed-form quantities for projection estimators under Gaussian noise:
// minimal/optimal penalties, expected risks, the phase-transition constants
// and the deviation bound used to prove them. All logarithms are natural.

#include <span>

#include <Eigen/Dense>

#include "penmin/models.hpp"

namespace penmin {

struct Penalties {
  double pen_min = 0.0;  // tr(Sigma Pi_m) / n
  double pen_opt = 0.0;  // 2 pen_min
};

Penalties penalties(const ProjectionModel& model, const Eigen::MatrixXd& sigma);

struct ExpectedRisks {
  double risk = 0.0;      // E (1/n)||F_hat - F||^2 = bias + tr(Sigma Pi)/n
  double emp_risk = 0.0;  // E (1/n)||F_hat - Y||^2 = bias + (tr Sigma - tr(Sigma Pi))/n
};

ExpectedRisks expected_risks(const ProjectionModel& model, std::span<const double> signal, const Eigen::MatrixXd& sigma);

// Constants of the phase-transition result for iid noise: with probability
// >= 1 - 4 |M| n^-gamma, D_{m_hat(C)} >= 9 D_m1 / 10 for C <= (1 - eta_minus) sigma^2
// and D_{m_hat(C)} <= D_m1 / 10 for C >= (1 + eta_plus) sigma^2.
struct TheoremConstants {
  double b = 0.0;
  double b_prime = 0.0;
  ModelId m1;
  ModelId m2;
  std::size_t d_m1 = 0;
  double eta_minus = 0.0;
  double eta_plus = 0.0;
  double gamma = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::size_t card_m = 0;
  double prob_bound = 0.0;  // 4 |M| n^-gamma

  bool operator==(const TheoremConstants&) const = default;

  // Both bands are informative only when eta < 1.
  bool vacuous() const { return !(eta_minus < 1.0 && eta_plus < 1.0); }
};

// eta_minus = (n / (D_m1 sigma^2)) (57 sigma sqrt(B) + 41 sigma^2) sqrt(gamma ln n / n)
// eta_plus  = (n / (D_m1 sigma^2)) [20 (B' - B) + (114 sigma sqrt(B') + 82 sigma^2) sqrt(gamma ln n / n)]
// Throws PreconditionError when no model has D_m <= D_m1 / 20.
TheoremConstants theorem_constants(const ModelCollection& collection, std::span<const double> signal, double sigma2,
                                   double gamma);
// Same formulas from an already computed bias profile.
TheoremConstants theorem_constants(const BiasProfile& profile, std::size_t n, std::size_t card_m, double sigma2,
                                   double gamma);

struct ProofThresholds {
  double c1 = 0.0;  // below: selected dimension stays >= 9 D_m1 / 10 on the deviation event
  double c2 = 0.0;  // above: selected dimension stays <= D_m1 / 10
};

// C1(x) = sigma^2 - (20 n / D_m1)(2 sigma^2 sqrt(x/n) + 3 sigma^2 x/n + 2 sigma sqrt(2x/n) sqrt(B))
// C2(x) = sigma^2 + (20 n / D_m1)[B' - B + 2 sigma sqrt(2x/n)(sqrt(B) + sqrt(B'))
//                                 + 2 sigma^2 (2 sqrt(x/n) + 3x/n)]
ProofThresholds proof_thresholds(const TheoremConstants& constants, double sigma2, double x);

// (1/n)[||(I - Pi_m) F||^2 + (C - sigma^2) D_m]
double crit_c(const ProjectionModel& model, std::span<const double> signal, double sigma2, double c);

// 2 sigma^2 (sqrt(x/n) + x/n) + (2 sigma sqrt(2x) / n) ||(I - Pi_m) F||
double deviation_bound(const ProjectionModel& model, std::span<const double> signal, double sigma2, double x);

// Empirical criterion recentred by the (unobservable) noise energy:
// G_C(m) = (1/n)||Y - Pi_m Y||^2 + C D_m / n - (1/n)||eps||^2.
double recentred_criterion(const ProjectionModel& model, std::span<const double> y, std::span<const double> noise,
                           double c);

// argmin over m of (1/n)||Pi_m Y - F||^2, ties by smaller D_m, then smaller id.
ModelId oracle_model(const ModelCollection& collection, std::span<const double> signal, std::span<const double> y);

}  // namespace penmin
