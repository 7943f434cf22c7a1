#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "penmin/path.hpp"

namespace penmin {

enum class CalibrationMethod { Jump, JumpMerged, Window, Slope };

std::string to_string(CalibrationMethod m);
CalibrationMethod calibration_method_from_string(const std::string& s);

struct JumpRecord {
  double c = 0.0;     // breakpoint (or drop-weighted location of a merged group)
  double drop = 0.0;  // complexity left of c minus complexity right of c
  std::size_t merged = 1;
};

struct PlateauRecord {
  double c_low = 0.0;
  double c_high = 0.0;  // +inf on the last plateau
  double complexity = 0.0;
};

struct WindowRecord {
  double c_high = 0.0;  // sup{C : complexity >= frac_high D*}
  double c_low = 0.0;   // inf{C : complexity <= frac_low D*}
  double midpoint = 0.0;
  double d_star = 0.0;
};

struct SlopeFitRecord {
  std::vector<ModelId> region;
  double region_min_weight = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  bool robust = false;
  bool operator==(const SlopeFitRecord&) const = default;
};

// Estimated minimal-penalty constant plus the diagnostics that produced it.
// c_hat is empty when the method failed; warnings then say why.
struct CalibrationResult {
  CalibrationMethod method = CalibrationMethod::Jump;
  std::optional<double> c_hat;
  std::vector<JumpRecord> jumps;
  std::vector<PlateauRecord> plateaus;
  std::optional<WindowRecord> window;
  std::optional<SlopeFitRecord> slope_fit;
  std::vector<std::string> warnings;

  bool ok() const { return c_hat.has_value(); }
};

// Largest complexity drop along the path (ties: smallest C).
CalibrationResult c_hat_jump(const SelectionPath& path, const std::map<ModelId, double>& complexities);

// Chains of breakpoints with relative gap (C_{j+1} - C_j) / C_{j+1} <= delta_rel
// are merged into one jump located at the drop-weighted mean of its members.
CalibrationResult c_hat_jump_merged(const SelectionPath& path, const std::map<ModelId, double>& complexities,
                                    double delta_rel);

// Midpoint of the window between the last C where complexity >= frac_high D*
// and the first C where complexity <= frac_low D*.
CalibrationResult c_hat_window(const SelectionPath& path, const std::map<ModelId, double>& complexities,
                               double frac_high = 0.9, double frac_low = 0.1);

struct SlopeOptions {
  double region_frac = 0.4;
  bool robust = false;  // repeated-median slope instead of least squares
};

// C_hat = -slope of empirical risk against penalty weight over the models
// with w_m >= (1 - region_frac) max w. Throws InvalidArgument for fewer than
// two region models.
CalibrationResult c_hat_slope(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape,
                              const SlopeOptions& options = {});

// argmin of emp_risk + factor * C_hat * w_m with the path tie rule.
// Throws CalibrationFailed when result carries no C_hat.
ModelId select_final(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape,
                     const CalibrationResult& result, double factor = 2.0);

}  // namespace penmin
