#include "penmin/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "penmin/error.hpp"

namespace penmin {

PenaltyShape::PenaltyShape(std::map<ModelId, double> weights) : weights_(std::move(weights)) {
  for (const auto& [id, w] : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("PenaltyShape: weight of '" + id + "' must be finite and >= 0");
    }
  }
}

PenaltyShape PenaltyShape::dimension(const ModelCollection& collection) {
  std::map<ModelId, double> w;
  const auto n = static_cast<double>(collection.n());
  for (const auto& m : collection.models()) w[m.id()] = static_cast<double>(m.dim()) / n;
  return PenaltyShape(std::move(w));
}

PenaltyShape PenaltyShape::covariance(const ModelCollection& collection, const Eigen::MatrixXd& sigma) {
  std::map<ModelId, double> w;
  const auto n = static_cast<double>(collection.n());
  // Round-off can push tr(Sigma Pi) of a tiny model a hair below zero.
  for (const auto& m : collection.models()) w[m.id()] = std::max(0.0, m.trace_product(sigma) / n);
  return PenaltyShape(std::move(w));
}

double PenaltyShape::at(const ModelId& id) const {
  const auto it = weights_.find(id);
  if (it == weights_.end()) throw InvalidArgument("PenaltyShape: no weight for model '" + id + "'");
  return it->second;
}

bool line_preferred(const PathLine& a, const PathLine& b) {
  if (a.weight != b.weight) return a.weight < b.weight;
  if (a.intercept != b.intercept) return a.intercept < b.intercept;
  return a.id < b.id;
}

namespace {

void validate(std::span<const PathLine> lines) {
  if (lines.empty()) throw InvalidArgument("compute_path: no models");
  std::set<ModelId> seen;
  for (const auto& l : lines) {
    if (!seen.insert(l.id).second) throw InvalidArgument("compute_path: duplicate model id '" + l.id + "'");
    if (!std::isfinite(l.intercept) || !std::isfinite(l.weight)) {
      throw InvalidArgument("compute_path: non-finite value for model '" + l.id + "'");
    }
  }
}

constexpr double kTieRel = 1e-12;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kTieRel * std::max({std::abs(a), std::abs(b), 1e-300});
}

// With w_a > w_b > w_c, line b is never strictly below both neighbours iff
// the a/c crossing is at or left of the a/b crossing.
bool middle_redundant(const PathLine& a, const PathLine& b, const PathLine& c) {
  return (c.intercept - a.intercept) * (a.weight - b.weight) <= (b.intercept - a.intercept) * (a.weight - c.weight);
}

double crossing(const PathLine& steep, const PathLine& flat) {
  return (flat.intercept - steep.intercept) / (steep.weight - flat.weight);
}

}  // namespace

SelectionPath compute_path(std::span<const PathLine> lines) {
  validate(lines);
  std::vector<PathLine> sorted(lines.begin(), lines.end());
  // Steepest first; for equal slopes the preferred line leads its group.
  std::sort(sorted.begin(), sorted.end(), [](const PathLine& a, const PathLine& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.intercept != b.intercept) return a.intercept < b.intercept;
    return a.id < b.id;
  });

  // Parallel (or numerically parallel) lines: only the lowest can be selected.
  std::vector<PathLine> distinct;
  for (const auto& l : sorted) {
    if (!distinct.empty() && nearly_equal(distinct.back().weight, l.weight)) {
      if (line_preferred(l, distinct.back()) && l.intercept <= distinct.back().intercept) distinct.back() = l;
      continue;
    }
    distinct.push_back(l);
  }

  std::vector<PathLine> hull;
  for (const auto& l : distinct) {
    // A flatter line with intercept no larger dominates everything before it on C >= 0.
    while (!hull.empty() && l.intercept <= hull.back().intercept) hull.pop_back();
    while (hull.size() >= 2 && middle_redundant(hull[hull.size() - 2], hull.back(), l)) hull.pop_back();
    hull.push_back(l);
  }

  SelectionPath path;
  path.segments = std::move(hull);
  path.breakpoints.reserve(path.segments.size() - 1);
  for (std::size_t j = 0; j + 1 < path.segments.size(); ++j) {
    path.breakpoints.push_back(crossing(path.segments[j], path.segments[j + 1]));
  }
  // Intercepts increase strictly along the hull, so every crossing is > 0;
  // degenerate round-off is dropped so breakpoints stay strictly increasing.
  for (std::size_t j = 0; j < path.breakpoints.size();) {
    const double prev = j == 0 ? 0.0 : path.breakpoints[j - 1];
    if (!(path.breakpoints[j] > prev)) {
      path.breakpoints.erase(path.breakpoints.begin() + static_cast<std::ptrdiff_t>(j));
      path.segments.erase(path.segments.begin() + static_cast<std::ptrdiff_t>(j));
      if (j > 0) {
        path.breakpoints[j - 1] = crossing(path.segments[j - 1], path.segments[j]);
        --j;
      }
      continue;
    }
    ++j;
  }
  return path;
}

std::vector<PathLine> make_lines(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape) {
  if (emp_risks.size() != shape.weights().size()) {
    throw InvalidArgument("empirical risks and penalty shape have different model sets");
  }
  std::vector<PathLine> lines;
  lines.reserve(emp_risks.size());
  for (const auto& [id, a] : emp_risks) {
    const auto it = shape.weights().find(id);
    if (it == shape.weights().end()) throw InvalidArgument("penalty shape has no weight for '" + id + "'");
    lines.push_back({id, a, it->second});
  }
  return lines;
}

SelectionPath compute_path(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape) {
  const auto lines = make_lines(emp_risks, shape);
  return compute_path(lines);
}

ModelId select_at(const SelectionPath& path, double c) {
  if (!(c >= 0.0)) throw InvalidArgument("select_at: C must be >= 0");
  if (path.segments.empty()) throw InvalidArgument("select_at: empty path");
  const auto it = std::upper_bound(path.breakpoints.begin(), path.breakpoints.end(), c);
  return path.segments[static_cast<std::size_t>(it - path.breakpoints.begin())].id;
}

ModelId brute_force_select(std::span<const PathLine> lines, double c) {
  validate(lines);
  if (!(c >= 0.0)) throw InvalidArgument("brute_force_select: C must be >= 0");
  // Criteria within rounding of the minimum count as ties, so that at a
  // computed breakpoint the tie rule (not the last ulp) decides.
  double min_value = std::numeric_limits<double>::infinity();
  for (const auto& l : lines) min_value = std::min(min_value, l.intercept + c * l.weight);
  const PathLine* best = nullptr;
  for (const auto& l : lines) {
    const double v = l.intercept + c * l.weight;
    const double tol = kTieRel * (std::abs(l.intercept) + c * l.weight);
    if (v - min_value <= tol && (best == nullptr || line_preferred(l, *best))) best = &l;
  }
  return best->id;
}

ModelId brute_force_select(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape, double c) {
  const auto lines = make_lines(emp_risks, shape);
  return brute_force_select(lines, c);
}

double StepFunction::operator()(double c) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), c);
  return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

StepFunction complexity_path(const SelectionPath& path, const std::map<ModelId, double>& reported) {
  StepFunction f;
  f.breakpoints = path.breakpoints;
  f.values.reserve(path.segments.size());
  for (const auto& s : path.segments) {
    const auto it = reported.find(s.id);
    if (it == reported.end()) throw InvalidArgument("complexity_path: no reported value for '" + s.id + "'");
    f.values.push_back(it->second);
  }
  return f;
}

std::string path_to_csv(const SelectionPath& path, const std::map<ModelId, double>& dims) {
  std::ostringstream os;
  os << "C_low,C_high,model_id,dim,emp_risk\n";
  for (std::size_t j = 0; j < path.segments.size(); ++j) {
    const double lo = j == 0 ? 0.0 : path.breakpoints[j - 1];
    const std::string hi = j < path.breakpoints.size() ? fmt::format("{:.17g}", path.breakpoints[j]) : "inf";
    const auto it = dims.find(path.segments[j].id);
    if (it == dims.end()) throw InvalidArgument("path_to_csv: no dimension for '" + path.segments[j].id + "'");
    os << fmt::format("{:.17g},{},{},{:.17g},{:.17g}\n", lo, hi, path.segments[j].id, it->second,
                      path.segments[j].intercept);
  }
  return os.str();
}

}  // namespace penmin
