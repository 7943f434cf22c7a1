#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "penmin/error.hpp"
#include "penmin/harness.hpp"

using namespace penmin;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.scenario = "small";
  c.n = 256;
  c.collection.kind = "dyadic_regressogram";
  c.collection.max_pieces = 256;
  c.signal.kind = "in_span";
  c.signal.pieces = 4;
  c.noise.sigma2 = 1.0;
  c.calibrators.slope_region_frac = 0.75;
  c.check_points = {0.5, 1.5};
  c.deviation_x = std::log(400.0);
  c.replicates = 12;
  c.seed = 99;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.noise.sigma2 = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.collection.kind = "mystery";
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config();
  c.noise.kind = "ar1";
  c.noise.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("config JSON round-trip is lossless") {
  ExperimentConfig c = small_config();
  c.noise.kind = "ar1";
  c.noise.rho = 0.3;
  c.noise.scale = 2.0;
  c.calibrators.jump_merged_delta.reset();
  c.calibrators.slope_robust = true;
  CHECK(experiment_config_from_json(Json::parse(to_json(c).dump())) == c);
  CHECK_THROWS_AS(experiment_config_from_json(Json::object()), InvalidArgument);
}

TEST_CASE("signals") {
  ExperimentConfig c = small_config();
  const Vector f = build_signal(c);
  const ModelCollection col = build_collection(c);
  CHECK(bias(col.at("reg4"), f) == doctest::Approx(0.0));
  CHECK(bias(col.at("reg2"), f) > 0.0);

  c.signal.kind = "piecewise_biased";
  c.signal.bias_level = 0.01;
  const Vector g = build_signal(c);
  // The alternating component is orthogonal to every even-length block model.
  for (const auto& m : col.models()) {
    if (m.dim() < 256) CHECK(bias(m, g) >= 0.01 - 1e-12);
  }
  CHECK(bias(col.at("reg128"), g) == doctest::Approx(0.01));
}

TEST_CASE("run_experiment: record count, determinism, jobs invariance") {
  const ExperimentConfig c = small_config();
  const ExperimentReport a = run_experiment(c, 1);
  const ExperimentReport b = run_experiment(c, 1);
  const ExperimentReport p = run_experiment(c, 3);
  CHECK(a.records.size() == c.replicates);
  CHECK(a == b);
  CHECK(a == p);
  CHECK(to_json(a).dump() == to_json(p).dump());
  CHECK(a.card_m == 9);
  CHECK(a.nested);
  CHECK(a.penalty_shape == "dimension");
  REQUIRE(a.constants.has_value());
  CHECK(a.c1.has_value());

  ExperimentConfig other = c;
  other.seed = 100;
  CHECK_FALSE(run_experiment(other, 1).records == a.records);
}

TEST_CASE("per-replicate invariants") {
  const ExperimentReport r = run_experiment(small_config(), 2);
  for (const auto& rec : r.records) {
    CHECK(rec.oracle_risk <= rec.selected_risk + 1e-15);
    CHECK(rec.segment_ids.size() == rec.breakpoints.size() + 1);
    // Largest nested model interpolates: D(m_hat(0+)) = max D.
    CHECK(rec.segment_dims.front() == 256.0);
    CHECK(std::is_sorted(rec.segment_dims.rbegin(), rec.segment_dims.rend()));
    CHECK(rec.dims_at_check_points.size() == 2);
    CHECK(rec.dim_at(0.0) == 256.0);
    CHECK(rec.deviation_sup.has_value());
  }
}

TEST_CASE("aggregates are recomputable and order-free") {
  const ExperimentReport r = run_experiment(small_config(), 1);
  CHECK(compute_aggregates(r.records) == r.aggregates);
  auto reversed = r.records;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(compute_aggregates(reversed) == r.aggregates);
}

TEST_CASE("quantiles use linear interpolation") {
  const Quantiles q = quantiles_of({4, 1, 3, 2});
  CHECK(q.count == 4);
  CHECK(q.min == 1);
  CHECK(q.max == 4);
  CHECK(q.median == 2.5);
  CHECK(q.q25 == 1.75);
  CHECK(q.mean == 2.5);
}

TEST_CASE("report JSON round-trip") {
  const ExperimentReport r = run_experiment(small_config(), 1);
  const ExperimentReport back = experiment_report_from_json(Json::parse(to_json(r).dump()));
  CHECK(back == r);
}

TEST_CASE("report emission") {
  const fs::path dir = fs::path(PENMIN_TEST_TMP) / "emit";
  fs::remove_all(dir);
  const ExperimentReport r = run_experiment(small_config(), 1);

  const auto json_files = emit_report(r, ReportFormat::Json, dir);
  REQUIRE(json_files.size() == 1);
  CHECK(experiment_report_from_json(Json::parse(slurp(json_files[0]))) == r);

  const auto csv_files = emit_report(r, ReportFormat::Csv, dir);
  CHECK(csv_files.size() == 3);
  const std::string records = slurp(dir / "records.csv");
  CHECK(static_cast<std::size_t>(std::count(records.begin(), records.end(), '\n')) == r.records.size() + 1);
  const std::string segs = slurp(dir / "path_segments.csv");
  CHECK(segs.rfind("C_low,C_high,model_id,dim,emp_risk\n", 0) == 0);
  CHECK(segs.find(",inf,") != std::string::npos);

  const auto svg_files = emit_report(r, ReportFormat::Svg, dir);
  CHECK(svg_files.size() == 3);
  for (const auto& f : svg_files) {
    const std::string s = slurp(f);
    CHECK(s.rfind("<?xml", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(std::count(s.begin(), s.end(), '<') == std::count(s.begin(), s.end(), '>'));
  }

  CHECK(report_format_from_string("svg") == ReportFormat::Svg);
  CHECK_THROWS_AS(report_format_from_string("pdf"), InvalidArgument);
}

TEST_CASE("verify_theorem status logic") {
  ExperimentReport r = run_experiment(small_config(), 1);
  REQUIRE(r.constants.has_value());
  TheoremConstants k = *r.constants;

  k.eta_minus = 1.5;
  CHECK(verify_theorem(r, k).status == VerdictStatus::Vacuous);
  CHECK(to_string(VerdictStatus::Vacuous) == "vacuous bound");

  k.eta_minus = 0.3;
  k.eta_plus = 0.6;
  k.prob_bound = 0.05;
  for (auto& rec : r.records) {
    rec.event_low = true;
    rec.event_high = true;
  }
  CHECK(verify_theorem(r, k).status == VerdictStatus::Pass);
  for (std::size_t i = 0; i < r.records.size() / 2; ++i) r.records[i].event_high = false;
  const TheoremVerdict v = verify_theorem(r, k);
  CHECK(v.status == VerdictStatus::Fail);
  CHECK(v.frequency == doctest::Approx(0.5));

  k.b_prime = INFINITY;
  k.m2.clear();
  CHECK_THROWS_AS(verify_theorem(r, k), PreconditionError);
}

TEST_CASE("theorem hypothesis failure is recorded, not thrown") {
  ExperimentConfig c = small_config();
  c.collection.kind = "regressogram";
  c.collection.piece_counts = {64, 128, 256};
  const ExperimentReport r = run_experiment(c, 1);
  CHECK_FALSE(r.constants.has_value());
  REQUIRE(r.constants_error.has_value());
  CHECK(r.constants_error->find("unsatisfiable") != std::string::npos);
}

TEST_CASE("dependent noise uses the covariance shape") {
  ExperimentConfig c = small_config();
  c.n = 64;
  c.collection.max_pieces = 64;
  c.noise.kind = "ar1";
  c.noise.rho = 0.5;
  c.deviation_x.reset();
  const ExperimentReport r = run_experiment(c, 1);
  CHECK(r.penalty_shape == "covariance");
  CHECK_FALSE(r.constants.has_value());
  CHECK_FALSE(r.records[0].event_low.has_value());
}

TEST_CASE("bias ties up to rounding resolve to the largest model") {
  ExperimentConfig c = small_config();
  c.n = std::size_t{1} << 17;
  c.collection.max_pieces = c.n / 2;
  c.signal.kind = "piecewise_biased";
  c.signal.pieces = 512;
  c.signal.bias_level = 0.01;
  const BiasProfile p = collection_bias_profile(build_collection(c), build_signal(c));
  CHECK(p.m1 == "reg65536");
  CHECK(p.b == doctest::Approx(0.01));
  CHECK(p.b_prime == doctest::Approx(0.01));
}
