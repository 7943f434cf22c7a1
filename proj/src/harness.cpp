#include "penmin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <spdlog/spdlog.h>

#include "penmin/error.hpp"
#include "penmin/kernels.hpp"
#include "penmin/path.hpp"

namespace penmin {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  if (n == 0) throw InvalidArgument("config: n must be >= 1");
  if (replicates == 0) throw InvalidArgument("config: replicates must be >= 1");
  if (!(gamma >= 0.0)) throw InvalidArgument("config: gamma must be >= 0");

  if (collection.kind == "dyadic_regressogram") {
    if (collection.max_pieces == 0 || collection.max_pieces > n) {
      throw InvalidArgument("config: collection.max_pieces must be in [1, n]");
    }
  } else if (collection.kind == "regressogram") {
    if (collection.piece_counts.empty()) throw InvalidArgument("config: collection.piece_counts is empty");
  } else if (collection.kind == "file") {
    if (collection.path.empty()) throw InvalidArgument("config: collection.path is empty");
  } else {
    throw InvalidArgument("config: unknown collection kind '" + collection.kind + "'");
  }

  if (signal.kind == "in_span" || signal.kind == "piecewise_biased") {
    if (signal.pieces == 0 || signal.pieces > n) throw InvalidArgument("config: signal.pieces must be in [1, n]");
    if (!(signal.bias_level >= 0.0)) throw InvalidArgument("config: signal.bias_level must be >= 0");
  } else if (signal.kind != "zero" && signal.kind != "sine") {
    throw InvalidArgument("config: unknown signal kind '" + signal.kind + "'");
  }
  if (!std::isfinite(signal.amplitude)) throw InvalidArgument("config: signal.amplitude must be finite");

  if (noise.kind == "iid") {
    if (!(noise.sigma2 > 0.0) || !std::isfinite(noise.sigma2)) {
      throw InvalidArgument("config: noise.sigma2 must be finite and > 0");
    }
  } else if (noise.kind == "ar1") {
    if (!(std::abs(noise.rho) < 1.0)) throw InvalidArgument("config: noise.rho must satisfy |rho| < 1");
    if (!(noise.scale > 0.0)) throw InvalidArgument("config: noise.scale must be > 0");
  } else if (noise.kind == "factor") {
    if (noise.a_path.empty()) throw InvalidArgument("config: noise.A_path is empty");
  } else {
    throw InvalidArgument("config: unknown noise kind '" + noise.kind + "'");
  }

  const auto& cal = calibrators;
  if (!(0.0 < cal.window_frac_low && cal.window_frac_low < cal.window_frac_high && cal.window_frac_high < 1.0)) {
    throw InvalidArgument("config: need 0 < window_frac_low < window_frac_high < 1");
  }
  if (!(cal.slope_region_frac > 0.0 && cal.slope_region_frac <= 1.0)) {
    throw InvalidArgument("config: slope_region_frac must be in (0, 1]");
  }
  if (cal.jump_merged_delta && !(*cal.jump_merged_delta >= 0.0 && *cal.jump_merged_delta < 1.0)) {
    throw InvalidArgument("config: jump_merged_delta must be in [0, 1)");
  }
  if (!(cal.factor > 0.0)) throw InvalidArgument("config: factor must be > 0");
  const auto method = calibration_method_from_string(cal.final_method);
  const bool enabled = (method == CalibrationMethod::Jump && cal.jump) ||
                       (method == CalibrationMethod::JumpMerged && cal.jump_merged_delta) ||
                       (method == CalibrationMethod::Window && cal.window) ||
                       (method == CalibrationMethod::Slope && cal.slope);
  if (!enabled) throw InvalidArgument("config: final_method '" + cal.final_method + "' is not enabled");

  for (double c : check_points) {
    if (!(c >= 0.0)) throw InvalidArgument("config: check_points must be >= 0");
  }
  if (deviation_x) {
    if (!(*deviation_x >= 0.0)) throw InvalidArgument("config: deviation_x must be >= 0");
    if (noise.kind != "iid") throw InvalidArgument("config: deviation_x requires iid noise");
  }
}

Json to_json(const ExperimentConfig& c) {
  const Json collection{{"kind", c.collection.kind},
                        {"max_pieces", c.collection.max_pieces},
                        {"piece_counts", c.collection.piece_counts},
                        {"path", c.collection.path}};
  const Json noise{{"kind", c.noise.kind},
                   {"sigma2", c.noise.sigma2},
                   {"rho", c.noise.rho},
                   {"scale", c.noise.scale},
                   {"A_path", c.noise.a_path}};

  const auto& k = c.calibrators;
  return {{"scenario", c.scenario},
          {"n", c.n},
          {"collection", collection},
          {"signal",
           {{"kind", c.signal.kind},
            {"pieces", c.signal.pieces},
            {"amplitude", c.signal.amplitude},
            {"bias_level", c.signal.bias_level},
            {"frequency", c.signal.frequency}}},
          {"noise", noise},
          {"gamma", c.gamma},
          {"calibrators",
           {{"jump", k.jump},
            {"jump_merged_delta", optional_to_json(k.jump_merged_delta)},
            {"window", {{"enabled", k.window}, {"frac_high", k.window_frac_high}, {"frac_low", k.window_frac_low}}},
            {"slope", {{"enabled", k.slope}, {"region_frac", k.slope_region_frac}, {"robust", k.slope_robust}}},
            {"final_method", k.final_method},
            {"factor", k.factor}}},
          {"check_points", c.check_points},
          {"deviation_x", optional_to_json(c.deviation_x)},
          {"replicates", c.replicates},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    c.scenario = j.value("scenario", c.scenario);
    c.n = j.at("n").get<std::size_t>();
    const auto& col = j.at("collection");
    c.collection.kind = col.value("kind", c.collection.kind);
    c.collection.max_pieces = col.value("max_pieces", std::size_t{0});
    c.collection.piece_counts = col.value("piece_counts", std::vector<std::size_t>{});
    c.collection.path = col.value("path", std::string{});
    if (j.contains("signal")) {
      const auto& s = j.at("signal");
      c.signal.kind = s.value("kind", c.signal.kind);
      c.signal.pieces = s.value("pieces", c.signal.pieces);
      c.signal.amplitude = s.value("amplitude", c.signal.amplitude);
      c.signal.bias_level = s.value("bias_level", c.signal.bias_level);
      c.signal.frequency = s.value("frequency", c.signal.frequency);
    }
    if (j.contains("noise")) {
      const auto& s = j.at("noise");
      c.noise.kind = s.value("kind", c.noise.kind);
      c.noise.sigma2 = s.value("sigma2", c.noise.sigma2);
      c.noise.rho = s.value("rho", c.noise.rho);
      c.noise.scale = s.value("scale", c.noise.scale);
      c.noise.a_path = s.value("A_path", std::string{});
    }
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("calibrators")) {
      const auto& k = j.at("calibrators");
      auto& o = c.calibrators;
      o.jump = k.value("jump", o.jump);
      if (k.contains("jump_merged_delta")) o.jump_merged_delta = optional_from_json(k.at("jump_merged_delta"));
      if (k.contains("window")) {
        const auto& w = k.at("window");
        o.window = w.value("enabled", o.window);
        o.window_frac_high = w.value("frac_high", o.window_frac_high);
        o.window_frac_low = w.value("frac_low", o.window_frac_low);
      }
      if (k.contains("slope")) {
        const auto& s = k.at("slope");
        o.slope = s.value("enabled", o.slope);
        o.slope_region_frac = s.value("region_frac", o.slope_region_frac);
        o.slope_robust = s.value("robust", o.slope_robust);
      }
      o.final_method = k.value("final_method", o.final_method);
      o.factor = k.value("factor", o.factor);
    }
    c.check_points = j.value("check_points", std::vector<double>{});
    if (j.contains("deviation_x")) c.deviation_x = optional_from_json(j.at("deviation_x"));
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read config " + p.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw InvalidArgument("config " + p.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c = experiment_config_from_json(j);
  const fs::path base = p.parent_path();
  auto resolve = [&](std::string& s) {
    if (!s.empty() && fs::path(s).is_relative()) s = (base / s).lexically_normal().string();
  };
  resolve(c.collection.path);
  resolve(c.noise.a_path);
  return c;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

ModelCollection build_collection(const ExperimentConfig& c, const fs::path& base_dir) {
  if (c.collection.kind == "dyadic_regressogram") return dyadic_regressogram_collection(c.n, c.collection.max_pieces);
  if (c.collection.kind == "regressogram") return regressogram_collection(c.n, c.collection.piece_counts);
  if (c.collection.kind == "file") {
    const fs::path p = resolve(base_dir, c.collection.path);
    std::ifstream in(p);
    if (!in) throw IoError("cannot read collection " + p.string());
    Json j;
    in >> j;
    ModelCollection col = collection_from_json(j, p.parent_path());
    if (col.n() != c.n) throw InvalidArgument("collection file has n = " + std::to_string(col.n()));
    return col;
  }
  throw InvalidArgument("unknown collection kind '" + c.collection.kind + "'");
}

Vector build_signal(const ExperimentConfig& c) {
  Vector f(c.n, 0.0);
  const auto& s = c.signal;
  if (s.kind == "zero") return f;
  if (s.kind == "sine") {
    for (std::size_t i = 0; i < c.n; ++i) {
      f[i] = s.amplitude *
             std::sin(2.0 * std::numbers::pi * s.frequency * (static_cast<double>(i) + 0.5) / static_cast<double>(c.n));
    }
    return f;
  }
  const ProjectionModel partition = ProjectionModel::regressogram("signal", c.n, s.pieces);
  const auto blocks = partition.boundaries();
  for (std::size_t j = 0; j + 1 < blocks.size(); ++j) {
    const double v = s.amplitude * static_cast<double>(1 + j % 3) * (j % 2 == 0 ? 1.0 : -1.0);
    std::fill(f.begin() + static_cast<std::ptrdiff_t>(blocks[j]), f.begin() + static_cast<std::ptrdiff_t>(blocks[j + 1]),
              v);
  }
  if (s.kind == "piecewise_biased") {
    const double h = std::sqrt(s.bias_level);
    for (std::size_t i = 0; i < c.n; ++i) f[i] += i % 2 == 0 ? h : -h;
  }
  return f;
}

NoiseSpec build_noise(const ExperimentConfig& c, const fs::path& base_dir) {
  if (c.noise.kind == "iid") return NoiseSpec::iid(c.noise.sigma2);
  if (c.noise.kind == "ar1") return NoiseSpec::ar1(c.n, c.noise.rho, c.noise.scale);
  if (c.noise.kind == "factor") {
    Eigen::MatrixXd a = read_matrix_blob(resolve(base_dir, c.noise.a_path));
    if (static_cast<std::size_t>(a.rows()) != c.n) throw InvalidArgument("factor A does not match n");
    return NoiseSpec::factor(std::move(a));
  }
  throw InvalidArgument("unknown noise kind '" + c.noise.kind + "'");
}

double ReplicateRecord::dim_at(double c) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), c);
  return segment_dims.at(static_cast<std::size_t>(it - breakpoints.begin()));
}

Quantiles quantiles_of(std::vector<double> v) {
  Quantiles q;
  q.count = v.size();
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  double s = 0.0;
  for (double x : v) s += x;
  q.mean = s / static_cast<double>(v.size());
  q.min = v.front();
  q.q05 = at(0.05);
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  q.q95 = at(0.95);
  q.max = v.back();
  return q;
}

Aggregates compute_aggregates(const std::vector<ReplicateRecord>& records) {
  Aggregates a;
  std::map<std::string, std::vector<double>> per_method;
  std::vector<double> ratios;
  std::size_t events = 0;
  std::size_t event_records = 0;
  std::size_t dev = 0;
  std::size_t dev_records = 0;
  for (const auto& r : records) {
    for (const auto& [method, value] : r.c_hat) {
      auto& bucket = per_method[method];
      a.failures.try_emplace(method, 0);
      if (value) {
        bucket.push_back(*value);
      } else {
        ++a.failures[method];
      }
    }
    if (r.selected && r.oracle_risk > 0.0) ratios.push_back(r.selected_risk / r.oracle_risk);
    if (r.event_low && r.event_high) {
      ++event_records;
      if (*r.event_low && *r.event_high) ++events;
    }
    if (r.deviation_violated) {
      ++dev_records;
      if (*r.deviation_violated) ++dev;
    }
  }
  for (auto& [method, values] : per_method) a.c_hat[method] = quantiles_of(std::move(values));
  a.oracle_ratio = quantiles_of(std::move(ratios));
  if (event_records > 0) a.theorem_frequency = static_cast<double>(events) / static_cast<double>(event_records);
  if (dev_records > 0) {
    a.deviation_violation_frequency = static_cast<double>(dev) / static_cast<double>(dev_records);
  }
  return a;
}

namespace {

struct Setup {
  const ExperimentConfig& config;
  const ModelCollection& collection;
  const Vector& signal;
  const NoiseSpec& noise;
  const PenaltyShape& shape;
  std::map<ModelId, double> dims;
  std::vector<double> biases;
  std::optional<TheoremConstants> constants;
  std::optional<double> c1;
  std::optional<double> c2;
};

ReplicateRecord run_replicate(const Setup& s, std::size_t r, ExamplePath* example) {
  const auto& cfg = s.config;
  const std::size_t n = cfg.n;
  const double nn = static_cast<double>(n);
  RngStream rng(cfg.seed, r);
  const Vector noise = sample_noise(s.noise, n, rng);
  Vector y = noise;
  simd::axpy(1.0, s.signal, y);

  std::vector<PathLine> lines;
  std::vector<PathLine> risk_lines;
  std::map<ModelId, double> emp_risks;
  lines.reserve(s.collection.size());
  Vector fitted(n);
  for (const auto& m : s.collection.models()) {
    m.project(y, fitted);
    const double emp = simd::sq_dist(y, fitted) / nn;
    const double risk = simd::sq_dist(fitted, s.signal) / nn;
    lines.push_back({m.id(), emp, s.shape.at(m.id())});
    risk_lines.push_back({m.id(), risk, static_cast<double>(m.dim()) / nn});
    emp_risks.emplace(m.id(), emp);
  }

  const SelectionPath path = compute_path(lines);
  ReplicateRecord rec;
  rec.replicate = r;
  rec.breakpoints = path.breakpoints;
  for (const auto& seg : path.segments) {
    rec.segment_ids.push_back(seg.id);
    rec.segment_dims.push_back(s.dims.at(seg.id));
  }

  const auto& k = cfg.calibrators;
  std::map<std::string, CalibrationResult> results;
  if (k.jump) results.emplace("jump", c_hat_jump(path, s.dims));
  if (k.jump_merged_delta) results.emplace("jump_merged", c_hat_jump_merged(path, s.dims, *k.jump_merged_delta));
  if (k.window) results.emplace("window", c_hat_window(path, s.dims, k.window_frac_high, k.window_frac_low));
  if (k.slope) results.emplace("slope", c_hat_slope(emp_risks, s.shape, {k.slope_region_frac, k.slope_robust}));
  for (const auto& [name, res] : results) rec.c_hat[name] = res.c_hat;

  const auto& final_result = results.at(k.final_method);
  if (final_result.ok()) {
    rec.selected = select_final(emp_risks, s.shape, final_result, k.factor);
  }

  rec.oracle = brute_force_select(risk_lines, 0.0);
  for (const auto& l : risk_lines) {
    if (l.id == rec.oracle) {
      rec.oracle_risk = l.intercept;
      rec.oracle_dim = s.dims.at(l.id);
    }
    if (rec.selected && l.id == *rec.selected) {
      rec.selected_risk = l.intercept;
      rec.selected_dim = s.dims.at(l.id);
    }
  }

  if (s.constants && s.c1 && s.c2) {
    const double d1 = static_cast<double>(s.constants->d_m1);
    if (*s.c1 >= 0.0) {
      rec.dim_at_c1 = rec.dim_at(*s.c1);
      rec.event_low = *rec.dim_at_c1 >= 0.9 * d1;
    } else {
      rec.event_low = true;
    }
    rec.dim_at_c2 = rec.dim_at(std::max(*s.c2, 0.0));
    rec.event_high = *rec.dim_at_c2 <= d1 / 10.0;
  }
  for (double c : cfg.check_points) rec.dims_at_check_points.push_back(rec.dim_at(c));

  if (cfg.deviation_x) {
    // G_C(m) - crit_C(m) does not depend on C.
    const double sigma2 = s.noise.sigma2();
    const double eps2 = simd::sum_sq(noise) / nn;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.collection.size(); ++i) {
      const auto& m = s.collection[i];
      const double d = static_cast<double>(m.dim());
      const double gap = lines[i].intercept - eps2 - s.biases[i] + sigma2 * d / nn;
      const double bound = 2.0 * sigma2 * (std::sqrt(*cfg.deviation_x / nn) + *cfg.deviation_x / nn) +
                           2.0 * std::sqrt(sigma2) * std::sqrt(2.0 * *cfg.deviation_x) / nn * std::sqrt(s.biases[i] * nn);
      worst = std::max(worst, std::abs(gap) - bound);
    }
    rec.deviation_sup = worst;
    rec.deviation_violated = worst > 0.0;
  }

  if (example != nullptr) {
    example->lines = lines;
    example->dims = s.dims;
    example->breakpoints = path.breakpoints;
    example->segment_ids = rec.segment_ids;
    if (const auto it = results.find("slope"); it != results.end()) example->slope_fit = it->second.slope_fit;
  }
  return rec;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, std::size_t jobs, const fs::path& base_dir) {
  config.validate();
  const ModelCollection collection = build_collection(config, base_dir);
  if (collection.empty()) throw InvalidArgument("config: empty model collection");
  const Vector signal = build_signal(config);
  const NoiseSpec noise = build_noise(config, base_dir);
  const bool iid = noise.kind() == NoiseSpec::Kind::IidGaussian;
  const PenaltyShape shape =
      iid ? PenaltyShape::dimension(collection) : PenaltyShape::covariance(collection, covariance(noise, config.n));

  ExperimentReport report;
  report.config = config;
  report.kernel_backend = std::string(simd::backend_name(simd::active_backend()));
  report.card_m = collection.size();
  report.nested = collection.nested();
  report.penalty_shape = iid ? "dimension" : "covariance";

  Setup setup{config, collection, signal, noise, shape, {}, {}, std::nullopt, std::nullopt, std::nullopt};
  for (const auto& m : collection.models()) {
    setup.dims[m.id()] = static_cast<double>(m.dim());
    setup.biases.push_back(bias(m, signal));
  }
  if (iid) {
    try {
      setup.constants = theorem_constants(collection, signal, noise.sigma2(), config.gamma);
      const auto t = proof_thresholds(*setup.constants, noise.sigma2(), config.gamma * std::log(static_cast<double>(config.n)));
      setup.c1 = t.c1;
      setup.c2 = t.c2;
    } catch (const PreconditionError& e) {
      report.constants_error = e.what();
    }
  } else {
    report.constants_error = "theorem constants are defined for iid noise only";
  }
  report.constants = setup.constants;
  report.c1 = setup.c1;
  report.c2 = setup.c2;

  spdlog::debug("run_experiment '{}': n={} |M|={} replicates={} jobs={} kernels={}", config.scenario, config.n,
                collection.size(), config.replicates, jobs, report.kernel_backend);

  report.records.resize(config.replicates);
  std::vector<std::string> errors(config.replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < config.replicates; r = next++) {
      try {
        report.records[r] = run_replicate(setup, r, r == 0 ? &report.example : nullptr);
      } catch (const std::exception& e) {
        errors[r] = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, config.replicates);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r].empty()) throw std::runtime_error("replicate " + std::to_string(r) + ": " + errors[r]);
  }

  report.aggregates = compute_aggregates(report.records);
  return report;
}

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass:
      return "PASS";
    case VerdictStatus::Fail:
      return "FAIL";
    case VerdictStatus::Vacuous:
      return "vacuous bound";
  }
  return "unknown";
}

TheoremVerdict verify_theorem(const ExperimentReport& report, const TheoremConstants& constants) {
  if (constants.m2.empty() || !std::isfinite(constants.b_prime)) {
    throw PreconditionError("theorem hypothesis D_{m2} <= D_{m1}/20 unsatisfiable");
  }
  TheoremVerdict v;
  v.eta_minus = constants.eta_minus;
  v.eta_plus = constants.eta_plus;
  v.replicates = report.records.size();
  v.target = std::clamp(1.0 - constants.prob_bound, 0.0, 1.0);
  if (constants.vacuous()) {
    v.status = VerdictStatus::Vacuous;
    v.detail = "eta_minus or eta_plus >= 1: the phase-transition bands are not informative at this n";
    return v;
  }
  std::size_t hits = 0;
  std::size_t counted = 0;
  for (const auto& r : report.records) {
    if (!r.event_low || !r.event_high) continue;
    ++counted;
    if (*r.event_low && *r.event_high) ++hits;
  }
  if (counted == 0) throw PreconditionError("report carries no theorem events (was it built with iid noise?)");
  v.frequency = static_cast<double>(hits) / static_cast<double>(counted);
  v.stderr_ = std::sqrt(v.target * (1.0 - v.target) / static_cast<double>(counted));
  v.threshold = v.target - 3.0 * v.stderr_;
  v.status = v.frequency >= v.threshold ? VerdictStatus::Pass : VerdictStatus::Fail;
  v.detail = "joint event frequency vs 1 - 4|M|n^-gamma minus 3 binomial standard errors";
  return v;
}

Json to_json(const TheoremVerdict& v) {
  return {{"status", to_string(v.status)}, {"frequency", v.frequency}, {"target", v.target},
          {"stderr", v.stderr_},           {"threshold", v.threshold}, {"replicates", v.replicates},
          {"eta_minus", number_to_json(v.eta_minus)}, {"eta_plus", number_to_json(v.eta_plus)},
          {"detail", v.detail}};
}

}  // namespace penmin
