#include <cmath>

#include "doctest.h"
#include "penmin/error.hpp"
#include "penmin/noise.hpp"
#include "penmin/svt.hpp"

using namespace penmin;
using doctest::Approx;

TEST_CASE("threshold constants") {
  CHECK(svt::minimal_threshold(100, 1.0) == Approx(20.0));
  CHECK(svt::minimal_threshold(1, 2.0) == Approx(4.0));
  CHECK(svt::optimal_threshold(100, 1.0) == Approx(23.0940).epsilon(1e-5));
  CHECK(svt::optimal_threshold(1, 1.0) == Approx(4.0 / std::sqrt(3.0)));
  for (std::size_t n : {1, 7, 200, 10000}) {
    for (double s : {0.1, 1.0, 3.5}) {
      CHECK(svt::optimal_threshold(n, s) / svt::minimal_threshold(n, s) == Approx(2.0 / std::sqrt(3.0)).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(svt::minimal_threshold(10, 0.0), InvalidArgument);
  CHECK_THROWS_AS(svt::optimal_threshold(0, 1.0), InvalidArgument);
}

TEST_CASE("hard thresholding") {
  RngStream rng(3, 0);
  Eigen::MatrixXd m(12, 12);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();

  CHECK((svt::hard_threshold_denoise(m, 0.0) - m).cwiseAbs().maxCoeff() == 0.0);
  const double top = svt::singular_values(m)(0);
  CHECK(svt::hard_threshold_denoise(m, top * 1.01).isZero());

  const double lam = 0.5 * top;
  const Eigen::MatrixXd once = svt::hard_threshold_denoise(m, lam);
  const Eigen::MatrixXd twice = svt::hard_threshold_denoise(once, lam);
  CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-8);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(12);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(12);
  u(2) = 1.0;
  v(5) = 1.0;
  const Eigen::MatrixXd r1 = 7.0 * u * v.transpose();
  CHECK((svt::hard_threshold_denoise(r1, 3.0) - r1).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(svt::hard_threshold_denoise(m, -1.0), InvalidArgument);
}

TEST_CASE("SvtConfig validation") {
  svt::SvtConfig c;
  c.signal_singular_values = {1.0};
  CHECK_NOTHROW(c.validate());
  c.rank = 2;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.rank = 1;
  c.signal_singular_values = {-1.0};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.signal_singular_values = {1.0};
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("svt experiment: zero signal and determinism") {
  svt::SvtConfig c;
  c.n = 60;
  c.rank = 0;
  c.signal_singular_values = {};
  c.replicates = 10;
  c.seed = 5;
  const svt::SvtReport r = svt::svt_experiment(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].name == "minimal");
  CHECK(r.rows[1].name == "optimal");
  CHECK(r.rows[1].mse_mean <= r.rows[0].mse_mean + 2 * r.rows[0].mse_stderr);
  CHECK(r.noise_top_singular_values.size() == 10);

  const svt::SvtReport again = svt::svt_experiment(c);
  CHECK(svt::report_to_csv(r) == svt::report_to_csv(again));
  CHECK(svt::report_to_csv(r).rfind("threshold_name,lambda,mse_mean,mse_stderr,replicates\n", 0) == 0);
}

TEST_CASE("noise-only bulk edge: top singular value below 1.05 lambda_min") {
  svt::SvtConfig c;
  c.n = 200;
  c.rank = 0;
  c.signal_singular_values = {};
  c.replicates = 20;
  c.seed = 8;
  const svt::SvtReport r = svt::svt_experiment(c);
  std::size_t below = 0;
  for (double s : r.noise_top_singular_values) below += s < 1.05 * svt::minimal_threshold(200, 1.0);
  CHECK(below >= 19);
}
