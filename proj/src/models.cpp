#include "penmin/models.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "penmin/error.hpp"
#include "penmin/kernels.hpp"

namespace penmin {

namespace {

void require_length(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw InvalidArgument(std::string(what) + ": length " + std::to_string(got) + " does not match n = " +
                          std::to_string(expected));
  }
}

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

std::span<double> column(Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

}  // namespace

ProjectionModel ProjectionModel::regressogram(ModelId id, std::size_t n, std::size_t pieces) {
  if (n == 0) throw InvalidArgument("regressogram: n must be >= 1");
  if (pieces == 0 || pieces > n) {
    throw InvalidArgument("regressogram: piece count " + std::to_string(pieces) + " outside [1, " +
                          std::to_string(n) + "]");
  }
  Partition p;
  p.bounds.resize(pieces + 1);
  for (std::size_t j = 0; j <= pieces; ++j) p.bounds[j] = (j * n + pieces - 1) / pieces;
  return ProjectionModel(std::move(id), n, pieces, std::move(p));
}

ProjectionModel ProjectionModel::from_basis(ModelId id, const Eigen::MatrixXd& columns) {
  const auto n = static_cast<std::size_t>(columns.rows());
  const auto d = static_cast<std::size_t>(columns.cols());
  if (n == 0) throw InvalidArgument("from_basis: n must be >= 1");
  if (d > n) throw InvalidArgument("from_basis: more columns than rows");
  if (!columns.allFinite()) throw InvalidArgument("from_basis: non-finite entries");

  Eigen::MatrixXd q = columns;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double original = std::sqrt(simd::sum_sq(column(q, j)));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double c = simd::dot(column(q, i), column(q, j));
        simd::axpy(-c, column(q, i), column(q, j));
      }
    }
    const double norm = std::sqrt(simd::sum_sq(column(q, j)));
    if (!(norm > 1e-10 * std::max(original, 1.0))) {
      throw InvalidArgument("from_basis: column " + std::to_string(j) + " is linearly dependent");
    }
    simd::scale(1.0 / norm, column(q, j), column(q, j));
  }
  return ProjectionModel(std::move(id), n, d, Dense{std::move(q)});
}

ProjectionModel ProjectionModel::null_model(ModelId id, std::size_t n) {
  if (n == 0) throw InvalidArgument("null_model: n must be >= 1");
  return ProjectionModel(std::move(id), n, 0, Dense{Eigen::MatrixXd(static_cast<Eigen::Index>(n), 0)});
}

std::size_t ProjectionModel::pieces() const {
  if (const auto* p = std::get_if<Partition>(&storage_)) return p->bounds.size() - 1;
  return 0;
}

std::span<const std::size_t> ProjectionModel::boundaries() const {
  if (const auto* p = std::get_if<Partition>(&storage_)) return p->bounds;
  return {};
}

void ProjectionModel::project(std::span<const double> y, std::span<double> out) const {
  require_length(n_, y.size(), "project");
  require_length(n_, out.size(), "project (output)");
  if (const auto* p = std::get_if<Partition>(&storage_)) {
    for (std::size_t j = 0; j + 1 < p->bounds.size(); ++j) {
      const std::size_t lo = p->bounds[j];
      const std::size_t len = p->bounds[j + 1] - lo;
      const double mean = simd::sum(y.subspan(lo, len)) / static_cast<double>(len);
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(lo), len, mean);
    }
    return;
  }
  const auto& q = std::get<Dense>(storage_).q;
  std::fill(out.begin(), out.end(), 0.0);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    simd::axpy(simd::dot(column(q, j), y), column(q, j), out);
  }
}

Vector ProjectionModel::project(std::span<const double> y) const {
  Vector out(n_);
  project(y, out);
  return out;
}

double ProjectionModel::trace_product(const Eigen::MatrixXd& sigma) const {
  if (static_cast<std::size_t>(sigma.rows()) != n_ || static_cast<std::size_t>(sigma.cols()) != n_) {
    throw InvalidArgument("trace_product: Sigma must be " + std::to_string(n_) + " x " + std::to_string(n_));
  }
  if (const auto* p = std::get_if<Partition>(&storage_)) {
    // Pi = sum_b 1_b 1_b^T / |b|, so tr(Sigma Pi) = sum_b (1/|b|) sum_{i,j in b} Sigma_ij.
    double total = 0.0;
    for (std::size_t b = 0; b + 1 < p->bounds.size(); ++b) {
      const auto lo = static_cast<Eigen::Index>(p->bounds[b]);
      const auto len = static_cast<Eigen::Index>(p->bounds[b + 1] - p->bounds[b]);
      total += sigma.block(lo, lo, len, len).sum() / static_cast<double>(len);
    }
    return total;
  }
  const auto& q = std::get<Dense>(storage_).q;
  double total = 0.0;
  Eigen::VectorXd tmp(static_cast<Eigen::Index>(n_));
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    tmp.noalias() = sigma * q.col(j);
    total += q.col(j).dot(tmp);
  }
  return total;
}

Eigen::MatrixXd ProjectionModel::basis() const {
  if (const auto* p = std::get_if<Partition>(&storage_)) {
    const auto k = static_cast<Eigen::Index>(p->bounds.size() - 1);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto lo = static_cast<Eigen::Index>(p->bounds[j]);
      const auto len = static_cast<Eigen::Index>(p->bounds[j + 1]) - lo;
      b.col(j).segment(lo, len).setConstant(1.0 / std::sqrt(static_cast<double>(len)));
    }
    return b;
  }
  return std::get<Dense>(storage_).q;
}

Eigen::MatrixXd ProjectionModel::projector() const {
  const Eigen::MatrixXd b = basis();
  return b * b.transpose();
}

ModelCollection::ModelCollection(std::size_t n, std::vector<ProjectionModel> models)
    : n_(n), models_(std::move(models)) {
  std::set<ModelId> seen;
  for (const auto& m : models_) {
    if (m.n() != n_) {
      throw InvalidArgument("ModelCollection: model '" + m.id() + "' has n = " + std::to_string(m.n()) +
                            ", expected " + std::to_string(n_));
    }
    if (!seen.insert(m.id()).second) throw InvalidArgument("ModelCollection: duplicate model id '" + m.id() + "'");
  }
  nested_ = !models_.empty();
  for (std::size_t i = 1; i < models_.size() && nested_; ++i) {
    nested_ = models_[i - 1].dim() <= models_[i].dim() && span_contains(models_[i], models_[i - 1]);
  }
}

const ProjectionModel& ModelCollection::at(const ModelId& id) const {
  for (const auto& m : models_) {
    if (m.id() == id) return m;
  }
  throw InvalidArgument("unknown model id '" + id + "'");
}

std::size_t ModelCollection::max_dim() const {
  std::size_t d = 0;
  for (const auto& m : models_) d = std::max(d, m.dim());
  return d;
}

bool span_contains(const ProjectionModel& outer, const ProjectionModel& inner, double tol) {
  if (outer.n() != inner.n()) return false;
  if (inner.dim() == 0) return true;
  if (inner.dim() > outer.dim()) return false;
  if (outer.kind() == ProjectionModel::Kind::Regressogram && inner.kind() == ProjectionModel::Kind::Regressogram) {
    // Every coarse boundary must also be a fine boundary.
    const auto fine = outer.boundaries();
    const auto coarse = inner.boundaries();
    return std::all_of(coarse.begin(), coarse.end(),
                       [&](std::size_t b) { return std::binary_search(fine.begin(), fine.end(), b); });
  }
  const Eigen::MatrixXd basis = inner.basis();
  Vector col(inner.n());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const std::span<const double> v(basis.col(j).data(), inner.n());
    outer.project(v, col);
    if (std::sqrt(simd::sq_dist(v, col)) > tol) return false;
  }
  return true;
}

ModelCollection regressogram_collection(std::size_t n, std::span<const std::size_t> piece_counts) {
  if (n == 0) throw InvalidArgument("regressogram_collection: n must be >= 1");
  std::vector<ProjectionModel> models;
  models.reserve(piece_counts.size());
  for (std::size_t i = 0; i < piece_counts.size(); ++i) {
    if (i > 0 && piece_counts[i] <= piece_counts[i - 1]) {
      throw InvalidArgument("regressogram_collection: piece counts must be strictly increasing");
    }
    models.push_back(ProjectionModel::regressogram("reg" + std::to_string(piece_counts[i]), n, piece_counts[i]));
  }
  return ModelCollection(n, std::move(models));
}

ModelCollection dyadic_regressogram_collection(std::size_t n, std::size_t max_pieces) {
  if (max_pieces == 0 || (max_pieces & (max_pieces - 1)) != 0) {
    throw InvalidArgument("dyadic_regressogram_collection: max_pieces must be a power of two");
  }
  std::vector<std::size_t> counts;
  for (std::size_t k = 1; k <= max_pieces; k *= 2) counts.push_back(k);
  return regressogram_collection(n, counts);
}

FitResult fit(const ProjectionModel& model, std::span<const double> y) {
  require_length(model.n(), y.size(), "fit");
  FitResult r;
  r.fitted = model.project(y);
  r.emp_risk = simd::sq_dist(y, r.fitted) / static_cast<double>(model.n());
  return r;
}

double bias(const ProjectionModel& model, std::span<const double> signal) {
  require_length(model.n(), signal.size(), "bias");
  const Vector proj = model.project(signal);
  return simd::sq_dist(signal, proj) / static_cast<double>(model.n());
}

BiasProfile collection_bias_profile(const ModelCollection& collection, std::span<const double> signal) {
  if (collection.empty()) throw InvalidArgument("collection_bias_profile: empty collection");
  std::vector<double> biases;
  biases.reserve(collection.size());
  for (const auto& m : collection.models()) biases.push_back(bias(m, signal));

  BiasProfile out;
  const double b_min = *std::min_element(biases.begin(), biases.end());
  // Biases equal up to rounding count as minimizers; ||F||^2 / n sets the scale.
  const double tol = 1e-10 * (simd::sum_sq(signal) / static_cast<double>(collection.n())) + 1e-300;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < collection.size(); ++i) {
    if (biases[i] > b_min + tol) continue;
    const auto& cur = collection[i];
    if (!best) {
      best = i;
      continue;
    }
    const auto& inc = collection[*best];
    if (cur.dim() > inc.dim() || (cur.dim() == inc.dim() && cur.id() < inc.id())) best = i;
  }
  out.b = b_min;
  out.m1 = collection[*best].id();
  out.d_m1 = collection[*best].dim();

  // D_m <= D_m1 / 20  <=>  20 D_m <= D_m1 in integers.
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const auto& m = collection[i];
    if (20 * m.dim() > out.d_m1) continue;
    if (!out.has_m2() || biases[i] < out.b_prime || (biases[i] == out.b_prime && m.id() < out.m2)) {
      out.b_prime = biases[i];
      out.m2 = m.id();
    }
  }
  return out;
}

}  // namespace penmin
