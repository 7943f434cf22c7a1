#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "penmin/models.hpp"

namespace penmin {

// One candidate of the penalized criterion: C -> intercept + C * weight, where
// intercept is the model's empirical risk and weight its penalty shape.
struct PathLine {
  ModelId id;
  double intercept = 0.0;
  double weight = 0.0;
  bool operator==(const PathLine&) const = default;
};

// Penalty shape w_m (per unit of C).
class PenaltyShape {
 public:
  explicit PenaltyShape(std::map<ModelId, double> weights);

  // w_m = D_m / n.
  static PenaltyShape dimension(const ModelCollection& collection);
  // w_m = tr(Sigma Pi_m) / n.
  static PenaltyShape covariance(const ModelCollection& collection, const Eigen::MatrixXd& sigma);

  const std::map<ModelId, double>& weights() const { return weights_; }
  double at(const ModelId& id) const;

 private:
  std::map<ModelId, double> weights_;
};

// Piecewise-constant selection C -> m_hat(C) on [0, inf).
// Segment j is selected on [C_{j-1}, C_j) with C_{-1} = 0 and C_K = inf
// (right-continuous: at a breakpoint the smaller-weight model wins).
struct SelectionPath {
  std::vector<double> breakpoints;  // strictly increasing, > 0
  std::vector<PathLine> segments;   // breakpoints.size() + 1 entries

  std::size_t size() const { return segments.size(); }
};

// Ties on the criterion are broken by smaller weight, then smaller
// intercept, then smaller id.
bool line_preferred(const PathLine& a, const PathLine& b);

// Exact lower envelope over C >= 0 of the given lines. Throws InvalidArgument
// on empty input, duplicate ids or non-finite values.
SelectionPath compute_path(std::span<const PathLine> lines);
SelectionPath compute_path(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape);

ModelId select_at(const SelectionPath& path, double c);

// Linear scan with the same tie rule; the reference for compute_path.
ModelId brute_force_select(std::span<const PathLine> lines, double c);
ModelId brute_force_select(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape, double c);

// Builds lines from matching maps. Throws InvalidArgument on mismatched key sets.
std::vector<PathLine> make_lines(const std::map<ModelId, double>& emp_risks, const PenaltyShape& shape);

// Step function C -> value sharing the path's breakpoints.
struct StepFunction {
  std::vector<double> breakpoints;
  std::vector<double> values;

  double operator()(double c) const;
};

// Reports values[id] on every segment (e.g. D_m). Throws InvalidArgument if a
// segment's id has no value.
StepFunction complexity_path(const SelectionPath& path, const std::map<ModelId, double>& reported);

// Rows (C_low, C_high, model_id, dim, emp_risk); C_high is "inf" on the last row.
std::string path_to_csv(const SelectionPath& path, const std::map<ModelId, double>& dims);

}  // namespace penmin
