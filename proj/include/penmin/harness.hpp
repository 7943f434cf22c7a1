#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "penmin/calibrate.hpp"
#include "penmin/models.hpp"
#include "penmin/noise.hpp"
#include "penmin/serialize.hpp"
#include "penmin/theory.hpp"

namespace penmin {

struct CollectionConfig {
  std::string kind = "dyadic_regressogram";  // dyadic_regressogram | regressogram | file
  std::size_t max_pieces = 0;                // dyadic: 1, 2, ..., max_pieces
  std::vector<std::size_t> piece_counts;     // regressogram
  std::string path;                          // file: collection JSON
  bool operator==(const CollectionConfig&) const = default;
};

// zero: F = 0.
// in_span: piecewise constant on `pieces` regressogram blocks,
//   value on block j = amplitude * (1 + j mod 3) * (-1)^j.
// piecewise_biased: in_span + sqrt(bias_level) * (-1)^i, a component
//   orthogonal to every regressogram with even block lengths.
// sine: amplitude * sin(2 pi frequency (i + 0.5) / n).
struct SignalConfig {
  std::string kind = "zero";
  std::size_t pieces = 1;
  double amplitude = 1.0;
  double bias_level = 0.0;
  double frequency = 1.0;
  bool operator==(const SignalConfig&) const = default;
};

// iid {sigma2} | ar1 {rho, scale} | factor {A_path}
struct NoiseConfig {
  std::string kind = "iid";
  double sigma2 = 1.0;
  double rho = 0.0;
  double scale = 1.0;
  std::string a_path;
  bool operator==(const NoiseConfig&) const = default;
};

struct CalibratorConfig {
  bool jump = true;
  std::optional<double> jump_merged_delta = 0.05;
  bool window = true;
  double window_frac_high = 0.9;
  double window_frac_low = 0.1;
  bool slope = true;
  double slope_region_frac = 0.4;
  bool slope_robust = false;
  std::string final_method = "jump";
  double factor = 2.0;
  bool operator==(const CalibratorConfig&) const = default;
};

struct ExperimentConfig {
  std::string scenario = "custom";
  std::size_t n = 0;
  CollectionConfig collection;
  SignalConfig signal;
  NoiseConfig noise;
  double gamma = 1.0;
  CalibratorConfig calibrators;
  // Extra penalty constants at which the selected dimension is recorded.
  std::vector<double> check_points;
  // When set (iid noise only), each replicate checks the deviation bound at this x.
  std::optional<double> deviation_x;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool operator==(const ExperimentConfig&) const = default;

  // Throws InvalidArgument on inconsistent or degenerate settings.
  void validate() const;
};

Json to_json(const ExperimentConfig& c);
// Relative file paths inside the config resolve against base_dir.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& p);

ModelCollection build_collection(const ExperimentConfig& c, const std::filesystem::path& base_dir = {});
Vector build_signal(const ExperimentConfig& c);
NoiseSpec build_noise(const ExperimentConfig& c, const std::filesystem::path& base_dir = {});

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::map<std::string, std::optional<double>> c_hat;  // per calibration method
  std::optional<ModelId> selected;                     // empty if the final calibrator failed
  double selected_dim = 0.0;
  double selected_risk = 0.0;
  ModelId oracle;
  double oracle_dim = 0.0;
  double oracle_risk = 0.0;
  std::vector<double> breakpoints;
  std::vector<ModelId> segment_ids;
  std::vector<double> segment_dims;
  std::optional<double> dim_at_c1;  // empty when C1 < 0 (statement vacuous on C >= 0)
  std::optional<double> dim_at_c2;
  std::optional<bool> event_low;    // D(m_hat(C1)) >= 9 D_m1 / 10
  std::optional<bool> event_high;   // D(m_hat(C2)) <= D_m1 / 10
  std::vector<double> dims_at_check_points;
  std::optional<double> deviation_sup;    // max_m |G_C(m) - crit_C(m)| - bound_m
  std::optional<bool> deviation_violated;
  bool operator==(const ReplicateRecord&) const = default;

  // Selected dimension at C from the stored path.
  double dim_at(double c) const;
};

struct Quantiles {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
  bool operator==(const Quantiles&) const = default;
};

Quantiles quantiles_of(std::vector<double> values);

struct Aggregates {
  std::map<std::string, Quantiles> c_hat;       // successful estimates per method
  std::map<std::string, std::size_t> failures;  // failure markers per method
  Quantiles oracle_ratio;                       // selected risk / oracle risk
  std::optional<double> theorem_frequency;      // joint event frequency
  std::optional<double> deviation_violation_frequency;
  bool operator==(const Aggregates&) const = default;
};

// Replicate 0 in full, for plots.
struct ExamplePath {
  std::vector<PathLine> lines;
  std::map<ModelId, double> dims;
  std::vector<double> breakpoints;
  std::vector<ModelId> segment_ids;
  std::optional<SlopeFitRecord> slope_fit;
  bool operator==(const ExamplePath&) const = default;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string kernel_backend;
  std::size_t card_m = 0;
  bool nested = false;
  std::string penalty_shape;  // "dimension" or "covariance"
  std::optional<TheoremConstants> constants;
  std::optional<std::string> constants_error;
  std::optional<double> c1;
  std::optional<double> c2;
  std::vector<ReplicateRecord> records;
  Aggregates aggregates;
  ExamplePath example;
  bool operator==(const ExperimentReport&) const = default;
};

Aggregates compute_aggregates(const std::vector<ReplicateRecord>& records);

// Per replicate r (stream (seed, r)): draw Y, fit every model, compute the
// path, run the enabled calibrators, select with the final one, evaluate
// true risks and the theorem's events at C1(gamma ln n) and C2(gamma ln n).
// jobs > 1 runs replicates on worker threads; the report is identical.
ExperimentReport run_experiment(const ExperimentConfig& config, std::size_t jobs = 1,
                                const std::filesystem::path& base_dir = {});

Json to_json(const ExperimentReport& r);
ExperimentReport experiment_report_from_json(const Json& j);

enum class VerdictStatus { Pass, Fail, Vacuous };
std::string to_string(VerdictStatus s);

struct TheoremVerdict {
  VerdictStatus status = VerdictStatus::Fail;
  double frequency = 0.0;
  double target = 0.0;   // 1 - 4 |M| n^-gamma
  double stderr_ = 0.0;  // binomial standard error at the target probability
  double threshold = 0.0;
  std::size_t replicates = 0;
  double eta_minus = 0.0;
  double eta_plus = 0.0;
  std::string detail;
};

// PASS iff the joint-event frequency >= target - 3 stderr. Vacuous when
// eta_minus or eta_plus >= 1. Throws PreconditionError when the report was
// not built under the theorem's hypothesis.
TheoremVerdict verify_theorem(const ExperimentReport& report, const TheoremConstants& constants);
Json to_json(const TheoremVerdict& v);

enum class ReportFormat { Json, Csv, Svg };
ReportFormat report_format_from_string(const std::string& s);

// Writes report.json | records.csv + path_segments.csv + aggregates.csv |
// complexity_path.svg + slope_fit.svg + c_hat_hist.svg into dir. Returns the
// written paths.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, ReportFormat format,
                                               const std::filesystem::path& dir);

std::string records_to_csv(const ExperimentReport& report);

}  // namespace penmin
