#include "penmin/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penmin/error.hpp"

namespace penmin {

std::string to_string(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::Jump:
      return "jump";
    case CalibrationMethod::JumpMerged:
      return "jump_merged";
    case CalibrationMethod::Window:
      return "window";
    case CalibrationMethod::Slope:
      return "slope";
  }
  return "unknown";
}

CalibrationMethod calibration_method_from_string(const std::string& s) {
  if (s == "jump") return CalibrationMethod::Jump;
  if (s == "jump_merged") return CalibrationMethod::JumpMerged;
  if (s == "window") return CalibrationMethod::Window;
  if (s == "slope") return CalibrationMethod::Slope;
  throw InvalidArgument("unknown calibration method '" + s + "'");
}

namespace {

std::vector<PlateauRecord> plateaus_of(const StepFunction& f) {
  std::vector<PlateauRecord> out;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    out.push_back({j == 0 ? 0.0 : f.breakpoints[j - 1],
                   j < f.breakpoints.size() ? f.breakpoints[j] : std::numeric_limits<double>::infinity(),
                   f.values[j]});
  }
  return out;
}

CalibrationResult pick_largest(CalibrationMethod method, std::vector<JumpRecord> jumps,
                               std::vector<PlateauRecord> plateaus) {
  CalibrationResult r;
  r.method = method;
  r.plateaus = std::move(plateaus);
  if (jumps.empty()) {
    r.warnings.emplace_back("no jump: the path selects a single model for every C");
    return r;
  }
  // Jumps are sorted by C, so the first maximum is the smallest C among ties.
  const auto best = std::max_element(jumps.begin(), jumps.end(),
                                     [](const JumpRecord& a, const JumpRecord& b) { return a.drop < b.drop; });
  if (best->c > 0.0) {
    r.c_hat = best->c;
  } else {
    r.warnings.emplace_back("largest jump is not at a positive C");
  }
  if (best->drop <= 0.0) r.warnings.emplace_back("largest complexity drop is not positive");
  r.jumps = std::move(jumps);
  return r;
}

}  // namespace

CalibrationResult c_hat_jump(const SelectionPath& path, const std::map<ModelId, double>& complexities) {
  const StepFunction f = complexity_path(path, complexities);
  std::vector<JumpRecord> jumps;
  for (std::size_t j = 0; j < f.breakpoints.size(); ++j) {
    jumps.push_back({f.breakpoints[j], f.values[j] - f.values[j + 1], 1});
  }
  return pick_largest(CalibrationMethod::Jump, std::move(jumps), plateaus_of(f));
}

CalibrationResult c_hat_jump_merged(const SelectionPath& path, const std::map<ModelId, double>& complexities,
                                    double delta_rel) {
  if (!(delta_rel >= 0.0 && delta_rel < 1.0)) throw InvalidArgument("c_hat_jump_merged: delta_rel must be in [0, 1)");
  const StepFunction f = complexity_path(path, complexities);
  std::vector<JumpRecord> merged;
  std::size_t j = 0;
  const std::size_t k = f.breakpoints.size();
  while (j < k) {
    std::size_t end = j + 1;
    while (end < k && (f.breakpoints[end] - f.breakpoints[end - 1]) / f.breakpoints[end] <= delta_rel) ++end;
    if (end == j + 1) {
      // Singletons keep their breakpoint bit-for-bit.
      merged.push_back({f.breakpoints[j], f.values[j] - f.values[j + 1], 1});
    } else {
      double drop = 0.0;
      double weighted = 0.0;
      double plain = 0.0;
      for (std::size_t i = j; i < end; ++i) {
        const double d = f.values[i] - f.values[i + 1];
        drop += d;
        weighted += d * f.breakpoints[i];
        plain += f.breakpoints[i];
      }
      const double loc = drop > 0.0 ? weighted / drop : plain / static_cast<double>(end - j);
      merged.push_back({loc, drop, end - j});
    }
    j = end;
  }
  return pick_largest(CalibrationMethod::JumpMerged, std::move(merged), plateaus_of(f));
}

CalibrationResult c_hat_window(const SelectionPath& path, const std::map<ModelId, double>& complexities,
                               double frac_high, double frac_low) {
  if (!(0.0 < frac_low && frac_low < frac_high && frac_high < 1.0)) {
    throw InvalidArgument("c_hat_window: need 0 < frac_low < frac_high < 1");
  }
  const StepFunction f = complexity_path(path, complexities);
  CalibrationResult r;
  r.method = CalibrationMethod::Window;
  r.plateaus = plateaus_of(f);

  const double d_star = *std::max_element(f.values.begin(), f.values.end());
  const double hi_level = frac_high * d_star;
  const double lo_level = frac_low * d_star;
  const double inf = std::numeric_limits<double>::infinity();

  // Last segment at or above the high level; its right end is C_high.
  std::optional<std::size_t> last_high;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    if (f.values[j] >= hi_level) last_high = j;
  }
  std::optional<std::size_t> first_low;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    if (f.values[j] <= lo_level) {
      first_low = j;
      break;
    }
  }
  if (!first_low) {
    r.warnings.emplace_back("complexity never falls to frac_low * D*");
    return r;
  }
  if (!last_high || *last_high >= f.breakpoints.size()) {
    r.warnings.emplace_back("complexity stays above frac_high * D* for every C");
    return r;
  }
  WindowRecord w;
  w.d_star = d_star;
  w.c_high = f.breakpoints[*last_high];
  w.c_low = *first_low == 0 ? 0.0 : f.breakpoints[*first_low - 1];
  w.midpoint = 0.5 * (w.c_high + w.c_low);
  r.window = w;
  if (w.c_low < w.c_high) {
    r.warnings.emplace_back("non-monotone complexity: C_low < C_high");
    return r;
  }
  if (!(w.midpoint > 0.0) || w.midpoint == inf) {
    r.warnings.emplace_back("window midpoint is not a positive finite C");
    return r;
  }
  r.c_hat = w.midpoint;
  return r;
}

namespace {

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

CalibrationResult c_hat_slope(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape,
                              const SlopeOptions& options) {
  if (!(options.region_frac > 0.0 && options.region_frac <= 1.0)) {
    throw InvalidArgument("c_hat_slope: region_frac must be in (0, 1]");
  }
  const auto lines = make_lines(emp_risks, shape);
  double max_w = 0.0;
  for (const auto& l : lines) max_w = std::max(max_w, l.weight);
  const double cutoff = (1.0 - options.region_frac) * max_w;

  std::vector<const PathLine*> region;
  for (const auto& l : lines) {
    if (l.weight >= cutoff) region.push_back(&l);
  }
  if (region.size() < 2) {
    throw InvalidArgument("c_hat_slope: fewer than two models with weight >= " + std::to_string(cutoff));
  }

  const auto m = static_cast<double>(region.size());
  double mean_w = 0.0;
  double mean_a = 0.0;
  for (const auto* l : region) {
    mean_w += l->weight;
    mean_a += l->intercept;
  }
  mean_w /= m;
  mean_a /= m;

  double slope = 0.0;
  if (options.robust) {
    // Siegel repeated median.
    std::vector<double> outer;
    for (const auto* li : region) {
      std::vector<double> inner;
      for (const auto* lj : region) {
        if (lj != li && lj->weight != li->weight) {
          inner.push_back((lj->intercept - li->intercept) / (lj->weight - li->weight));
        }
      }
      if (!inner.empty()) outer.push_back(median(std::move(inner)));
    }
    if (outer.empty()) throw InvalidArgument("c_hat_slope: all region weights are equal");
    slope = median(std::move(outer));
  } else {
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto* l : region) {
      sxx += (l->weight - mean_w) * (l->weight - mean_w);
      sxy += (l->weight - mean_w) * (l->intercept - mean_a);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("c_hat_slope: all region weights are equal");
    slope = sxy / sxx;
  }

  SlopeFitRecord fit;
  fit.robust = options.robust;
  fit.region_min_weight = cutoff;
  fit.slope = slope;
  if (options.robust) {
    std::vector<double> icpt;
    for (const auto* l : region) icpt.push_back(l->intercept - slope * l->weight);
    fit.intercept = median(std::move(icpt));
  } else {
    fit.intercept = mean_a - slope * mean_w;
  }
  double ss = 0.0;
  for (const auto* l : region) {
    const double res = l->intercept - (fit.intercept + slope * l->weight);
    ss += res * res;
    fit.region.push_back(l->id);
  }
  fit.residual_rms = std::sqrt(ss / m);

  CalibrationResult r;
  r.method = CalibrationMethod::Slope;
  r.slope_fit = std::move(fit);
  if (slope >= 0.0) {
    r.warnings.emplace_back("non-negative slope: no minimal-penalty behavior detected");
  } else {
    r.c_hat = -slope;
  }
  return r;
}

ModelId select_final(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape,
                     const CalibrationResult& result, double factor) {
  if (!result.ok()) throw CalibrationFailed("calibration failed: no C_hat available for final selection");
  if (!(factor > 0.0)) throw InvalidArgument("select_final: factor must be > 0");
  return brute_force_select(emp_risks, shape, factor * *result.c_hat);
}

}  // namespace penmin
