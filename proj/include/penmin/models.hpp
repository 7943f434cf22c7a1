#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace penmin {

using Vector = std::vector<double>;
using ModelId = std::string;

// Orthogonal projection of R^n onto a linear subspace S_m.
//
// Two storage forms share one interface: a contiguous partition of {0..n-1}
// (regressogram, projector = blockwise mean, O(k) memory) and an explicit
// orthonormal n x D basis. The projector is never stored.
class ProjectionModel {
 public:
  enum class Kind { Regressogram, Basis };

  // Blocks [ceil(j n / k), ceil((j+1) n / k)) for j = 0..k-1.
  static ProjectionModel regressogram(ModelId id, std::size_t n, std::size_t pieces);
  // Columns are re-orthonormalized (two passes of modified Gram-Schmidt).
  // Throws InvalidArgument when the columns are numerically dependent.
  static ProjectionModel from_basis(ModelId id, const Eigen::MatrixXd& columns);
  // D = 0.
  static ProjectionModel null_model(ModelId id, std::size_t n);

  const ModelId& id() const { return id_; }
  Kind kind() const { return std::holds_alternative<Partition>(storage_) ? Kind::Regressogram : Kind::Basis; }
  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  // Number of pieces for a regressogram, 0 otherwise.
  std::size_t pieces() const;
  // Block boundaries (size pieces()+1) for a regressogram, empty otherwise.
  std::span<const std::size_t> boundaries() const;

  // out = Pi_m y. out may not alias y.
  void project(std::span<const double> y, std::span<double> out) const;
  Vector project(std::span<const double> y) const;

  // tr(Sigma Pi_m) for a symmetric n x n Sigma.
  double trace_product(const Eigen::MatrixXd& sigma) const;

  // n x D orthonormal basis and n x n projector. Intended for small n.
  Eigen::MatrixXd basis() const;
  Eigen::MatrixXd projector() const;

 private:
  struct Partition {
    std::vector<std::size_t> bounds;
  };
  struct Dense {
    Eigen::MatrixXd q;  // n x D, column-major
  };

  ProjectionModel(ModelId id, std::size_t n, std::size_t dim, std::variant<Partition, Dense> s)
      : id_(std::move(id)), n_(n), dim_(dim), storage_(std::move(s)) {}

  ModelId id_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::variant<Partition, Dense> storage_;
};

// Finite, ordered family of models over a common sample size.
class ModelCollection {
 public:
  // Throws InvalidArgument on mixed n or duplicate ids. nested() is computed.
  ModelCollection(std::size_t n, std::vector<ProjectionModel> models);

  std::size_t n() const { return n_; }
  std::size_t size() const { return models_.size(); }
  bool empty() const { return models_.empty(); }
  bool nested() const { return nested_; }
  const std::vector<ProjectionModel>& models() const { return models_; }
  const ProjectionModel& operator[](std::size_t i) const { return models_[i]; }
  // Throws InvalidArgument for an unknown id.
  const ProjectionModel& at(const ModelId& id) const;
  std::size_t max_dim() const;

 private:
  std::size_t n_;
  std::vector<ProjectionModel> models_;
  bool nested_ = false;
};

// True iff span(inner) is contained in span(outer). Exact for two
// regressograms; otherwise projects the materialized basis of inner.
bool span_contains(const ProjectionModel& outer, const ProjectionModel& inner, double tol = 1e-8);

// One regressogram per piece count; ids are "reg<k>".
ModelCollection regressogram_collection(std::size_t n, std::span<const std::size_t> piece_counts);
// Piece counts 1, 2, 4, ..., max_pieces (max_pieces a power of two).
ModelCollection dyadic_regressogram_collection(std::size_t n, std::size_t max_pieces);

struct FitResult {
  Vector fitted;
  double emp_risk = 0.0;
};

// F_hat = Pi_m Y and the empirical risk (1/n)||Y - F_hat||^2.
FitResult fit(const ProjectionModel& model, std::span<const double> y);

// Approximation error (1/n)||(I - Pi_m) F||^2.
double bias(const ProjectionModel& model, std::span<const double> signal);

struct BiasProfile {
  double b = 0.0;
  ModelId m1;
  std::size_t d_m1 = 0;
  // +infinity when no model has D_m <= D_m1 / 20.
  double b_prime = std::numeric_limits<double>::infinity();
  ModelId m2;  // empty when b_prime is infinite
  bool has_m2() const { return !m2.empty(); }
};

// B = min bias, m1 its minimizer (largest D, then smallest id),
// B' = min bias over {D_m <= D_m1 / 20}.
BiasProfile collection_bias_profile(const ModelCollection& collection, std::span<const double> signal);

}  // namespace penmin
