// penmin: minimal-penalty calibration and Monte-Carlo verification CLI.
//
//   penmin path --config exp.json --data y.csv [--out dir]
//   penmin calibrate --config exp.json --data y.csv [--out dir]
//   penmin simulate --config exp.json [--seed s] [--replicates r] [--jobs k] [--format json|csv|svg] [--out dir]
//   penmin verify-theorem --config exp.json [...]
//   penmin svt --config svt.json [--seed s] [--replicates r] [--out dir]
//
// Exit status: 0 success or PASS, 2 verdict FAIL, 1 error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "penmin/calibrate.hpp"
#include "penmin/error.hpp"
#include "penmin/harness.hpp"
#include "penmin/kernels.hpp"
#include "penmin/svt.hpp"

namespace fs = std::filesystem;
using namespace penmin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("penmin");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("PENMIN_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

struct CommonOptions {
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::string out;
  std::string format = "json";
  std::size_t jobs = 1;
};

void write_text(const fs::path& p, const std::string& text) {
  if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
}

// Writes to <out>/<name> when --out is given, else to stdout.
void emit(const CommonOptions& o, const std::string& name, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  const fs::path p = fs::path(o.out) / name;
  write_text(p, text);
  spdlog::info("wrote {}", p.string());
}

ExperimentConfig load_config(const CommonOptions& o) {
  ExperimentConfig c = load_experiment_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.replicates) c.replicates = *o.replicates;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

fs::path config_dir(const CommonOptions& o) { return fs::absolute(o.config).parent_path(); }

struct Dataset {
  ModelCollection collection;
  PenaltyShape shape;
  std::map<ModelId, double> emp_risks;
  std::map<ModelId, double> dims;
  std::map<ModelId, double> complexities;  // penalty weight scaled by n
};

Dataset load_dataset(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  const fs::path base = config_dir(o);
  const Vector y = read_vector_csv(o.data);
  if (y.size() != c.n) {
    throw InvalidArgument("data has " + std::to_string(y.size()) + " values but the config declares n = " +
                          std::to_string(c.n));
  }
  ModelCollection collection = build_collection(c, base);
  const NoiseSpec noise = build_noise(c, base);
  PenaltyShape shape = noise.kind() == NoiseSpec::Kind::IidGaussian
                           ? PenaltyShape::dimension(collection)
                           : PenaltyShape::covariance(collection, covariance(noise, c.n));
  Dataset d{std::move(collection), std::move(shape), {}, {}, {}};
  for (const auto& m : d.collection.models()) {
    d.emp_risks[m.id()] = fit(m, y).emp_risk;
    d.dims[m.id()] = static_cast<double>(m.dim());
    d.complexities[m.id()] = d.shape.at(m.id()) * static_cast<double>(c.n);
  }
  return d;
}

int cmd_path(const CommonOptions& o) {
  const Dataset d = load_dataset(o);
  const SelectionPath path = compute_path(d.emp_risks, d.shape);
  emit(o, "path.csv", path_to_csv(path, d.dims));
  return kExitOk;
}

int cmd_calibrate(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  const Dataset d = load_dataset(o);
  const auto& cal = c.calibrators;
  const SelectionPath path = compute_path(d.emp_risks, d.shape);

  Json out = Json::object();
  std::map<std::string, CalibrationResult> results;
  if (cal.jump) results["jump"] = c_hat_jump(path, d.complexities);
  if (cal.jump_merged_delta) results["jump_merged"] = c_hat_jump_merged(path, d.complexities, *cal.jump_merged_delta);
  if (cal.window) {
    results["window"] = c_hat_window(path, d.complexities, cal.window_frac_high, cal.window_frac_low);
  }
  if (cal.slope) results["slope"] = c_hat_slope(d.emp_risks, d.shape, {cal.slope_region_frac, cal.slope_robust});
  for (const auto& [name, r] : results) out["calibrations"][name] = to_json(r);

  const auto it = results.find(cal.final_method);
  if (it == results.end()) throw InvalidArgument("final method '" + cal.final_method + "' is not enabled");
  if (it->second.ok()) {
    const ModelId m = select_final(d.emp_risks, d.shape, it->second, cal.factor);
    out["selected"] = {{"method", cal.final_method}, {"factor", cal.factor}, {"model_id", m}, {"dim", d.dims.at(m)}};
  } else {
    out["selected"] = nullptr;
    spdlog::warn("final calibrator '{}' failed; no model selected", cal.final_method);
  }
  emit(o, "calibration.json", out.dump(2) + "\n");
  return kExitOk;
}

ExperimentReport run(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  spdlog::info("scenario {}: n={} replicates={} seed={} kernels={}", c.scenario, c.n, c.replicates, c.seed,
               simd::backend_name(simd::active_backend()));
  return run_experiment(c, o.jobs, config_dir(o));
}

int cmd_simulate(const CommonOptions& o) {
  const ExperimentReport report = run(o);
  const ReportFormat format = report_format_from_string(o.format);
  if (o.out.empty() && format == ReportFormat::Json) {
    std::cout << to_json(report).dump(2) << "\n";
    return kExitOk;
  }
  const fs::path dir = o.out.empty() ? fs::path(report.config.output_dir) : fs::path(o.out);
  for (const auto& p : emit_report(report, format, dir)) std::cerr << "wrote " << p.string() << "\n";
  return kExitOk;
}

int cmd_verify(const CommonOptions& o) {
  const ExperimentReport report = run(o);
  if (!report.constants) {
    throw PreconditionError(report.constants_error.value_or("theorem constants unavailable for this configuration"));
  }
  const TheoremVerdict v = verify_theorem(report, *report.constants);
  emit(o, "verdict.json", to_json(v).dump(2) + "\n");
  std::cerr << to_string(v.status) << ": " << v.detail << "\n";
  return v.status == VerdictStatus::Fail ? kExitFail : kExitOk;
}

svt::SvtConfig load_svt_config(const CommonOptions& o) {
  std::ifstream f(o.config);
  if (!f) throw IoError("cannot open " + o.config);
  Json j;
  try {
    f >> j;
  } catch (const Json::exception& e) {
    throw InvalidArgument(o.config + ": " + e.what());
  }
  svt::SvtConfig c;
  c.n = j.value("n", c.n);
  c.sigma = j.value("sigma", c.sigma);
  c.rank = j.value("rank", c.rank);
  c.signal_singular_values = j.value("signal_singular_values", c.signal_singular_values);
  c.replicates = j.value("replicates", c.replicates);
  c.seed = j.value("seed", c.seed);
  if (o.seed) c.seed = *o.seed;
  if (o.replicates) c.replicates = *o.replicates;
  c.validate();
  return c;
}

int cmd_svt(const CommonOptions& o) {
  const svt::SvtReport r = svt::svt_experiment(load_svt_config(o));
  emit(o, "svt.csv", svt::report_to_csv(r));
  spdlog::info("paired MSE(minimal) - MSE(optimal) = {:.6g} +/- {:.3g}", r.paired_diff_mean, r.paired_diff_stderr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Minimal-penalty calibration and phase-transition experiments"};
  app.require_subcommand(1);
  CommonOptions o;

  auto add_config = [&](CLI::App* s) { s->add_option("--config", o.config, "Config JSON")->required()->check(CLI::ExistingFile); };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "Output directory (default: stdout)"); };
  auto add_run = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Master seed (overrides config)");
    s->add_option("--replicates", o.replicates, "Replicate count (overrides config)")->check(CLI::PositiveNumber);
    s->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* path = app.add_subcommand("path", "Selection path of one dataset as CSV");
  add_config(path);
  path->add_option("--data", o.data, "One observation per line")->required()->check(CLI::ExistingFile);
  add_out(path);

  auto* calibrate = app.add_subcommand("calibrate", "Calibration results of one dataset as JSON");
  add_config(calibrate);
  calibrate->add_option("--data", o.data, "One observation per line")->required()->check(CLI::ExistingFile);
  add_out(calibrate);

  auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment");
  add_config(simulate);
  add_run(simulate);
  add_out(simulate);
  simulate->add_option("--format", o.format, "json|csv|svg")->check(CLI::IsMember({"json", "csv", "svg"}));

  auto* verify = app.add_subcommand("verify-theorem", "Run an experiment and check the phase-transition bound");
  add_config(verify);
  add_run(verify);
  add_out(verify);

  auto* svt_cmd = app.add_subcommand("svt", "Singular-value thresholding experiment as CSV");
  add_config(svt_cmd);
  add_run(svt_cmd);
  add_out(svt_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*path) return cmd_path(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*simulate) return cmd_simulate(o);
    if (*verify) return cmd_verify(o);
    if (*svt_cmd) return cmd_svt(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
