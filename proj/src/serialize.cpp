#include "penmin/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "penmin/error.hpp"

namespace penmin {

namespace fs = std::filesystem;

Json number_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidArgument("expected a number, got " + j.dump());
}

Json optional_to_json(const std::optional<double>& x) { return x ? number_to_json(*x) : Json(nullptr); }

std::optional<double> optional_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return number_from_json(j);
}

void write_matrix_blob(const fs::path& blob, const Eigen::MatrixXd& m) {
  {
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw IoError("cannot write " + blob.string());
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + blob.string());
  }
  const Json header{{"rows", m.rows()},
                    {"cols", m.cols()},
                    {"dtype", "float64"},
                    {"order", "column-major"},
                    {"data", blob.filename().string()}};
  std::ofstream h(blob.string() + ".json");
  if (!h) throw IoError("cannot write " + blob.string() + ".json");
  h << header.dump(2) << '\n';
}

Eigen::MatrixXd read_matrix_blob(const fs::path& blob) {
  std::ifstream h(blob.string() + ".json");
  if (!h) throw IoError("cannot read header " + blob.string() + ".json");
  Json header;
  try {
    h >> header;
  } catch (const Json::exception& e) {
    throw IoError("malformed header " + blob.string() + ".json: " + e.what());
  }
  if (header.value("dtype", "") != "float64" || header.value("order", "") != "column-major") {
    throw IoError("unsupported blob layout in " + blob.string() + ".json");
  }
  const auto rows = header.at("rows").get<Eigen::Index>();
  const auto cols = header.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw IoError("cannot read " + blob.string());
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double))) {
    throw IoError("blob " + blob.string() + " is shorter than its header says");
  }
  return m;
}

Json collection_to_json(const ModelCollection& c, const fs::path& blob_dir) {
  Json models = Json::array();
  for (const auto& m : c.models()) {
    Json e{{"id", m.id()}, {"dim", m.dim()}};
    if (m.kind() == ProjectionModel::Kind::Regressogram) {
      e["kind"] = "regressogram";
      e["params"] = {{"pieces", m.pieces()}};
    } else if (m.dim() == 0) {
      e["kind"] = "null";
      e["params"] = Json::object();
    } else {
      if (blob_dir.empty()) throw InvalidArgument("collection_to_json: basis model '" + m.id() + "' needs a blob_dir");
      const fs::path blob = blob_dir / (m.id() + ".f64");
      write_matrix_blob(blob, m.basis());
      e["kind"] = "basis";
      e["params"] = {{"blob", blob.filename().string()}};
    }
    models.push_back(std::move(e));
  }
  return {{"n", c.n()}, {"models", std::move(models)}};
}

ModelCollection collection_from_json(const Json& j, const fs::path& base_dir) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::vector<ProjectionModel> models;
    for (const auto& e : j.at("models")) {
      const auto id = e.at("id").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      const Json params = e.value("params", Json::object());
      if (kind == "regressogram") {
        models.push_back(ProjectionModel::regressogram(id, n, params.at("pieces").get<std::size_t>()));
      } else if (kind == "null") {
        models.push_back(ProjectionModel::null_model(id, n));
      } else if (kind == "basis") {
        fs::path blob = params.at("blob").get<std::string>();
        if (blob.is_relative()) blob = base_dir / blob;
        models.push_back(ProjectionModel::from_basis(id, read_matrix_blob(blob)));
      } else {
        throw InvalidArgument("unknown model kind '" + kind + "'");
      }
      if (e.contains("dim") && e.at("dim").get<std::size_t>() != models.back().dim()) {
        throw InvalidArgument("model '" + id + "': declared dim does not match its definition");
      }
    }
    return ModelCollection(n, std::move(models));
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed collection JSON: ") + e.what());
  }
}

Json to_json(const CalibrationResult& r) {
  Json j{{"method", to_string(r.method)}, {"c_hat", optional_to_json(r.c_hat)}, {"warnings", r.warnings}};
  Json jumps = Json::array();
  for (const auto& x : r.jumps) jumps.push_back({{"c", number_to_json(x.c)}, {"drop", x.drop}, {"merged", x.merged}});
  j["jumps"] = std::move(jumps);
  Json plateaus = Json::array();
  for (const auto& p : r.plateaus) {
    plateaus.push_back(
        {{"c_low", number_to_json(p.c_low)}, {"c_high", number_to_json(p.c_high)}, {"complexity", p.complexity}});
  }
  j["plateaus"] = std::move(plateaus);
  if (r.window) {
    j["window"] = {{"c_high", number_to_json(r.window->c_high)},
                   {"c_low", number_to_json(r.window->c_low)},
                   {"midpoint", number_to_json(r.window->midpoint)},
                   {"d_star", r.window->d_star}};
  } else {
    j["window"] = nullptr;
  }
  if (r.slope_fit) {
    const auto& s = *r.slope_fit;
    j["slope_fit"] = {{"region", s.region},       {"region_min_weight", s.region_min_weight},
                      {"slope", s.slope},         {"intercept", s.intercept},
                      {"residual_rms", s.residual_rms}, {"robust", s.robust}};
  } else {
    j["slope_fit"] = nullptr;
  }
  return j;
}

CalibrationResult calibration_from_json(const Json& j) {
  CalibrationResult r;
  r.method = calibration_method_from_string(j.at("method").get<std::string>());
  r.c_hat = optional_from_json(j.at("c_hat"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& x : j.at("jumps")) {
    r.jumps.push_back({number_from_json(x.at("c")), x.at("drop").get<double>(), x.at("merged").get<std::size_t>()});
  }
  for (const auto& p : j.at("plateaus")) {
    r.plateaus.push_back(
        {number_from_json(p.at("c_low")), number_from_json(p.at("c_high")), p.at("complexity").get<double>()});
  }
  if (!j.at("window").is_null()) {
    const auto& w = j.at("window");
    r.window = WindowRecord{number_from_json(w.at("c_high")), number_from_json(w.at("c_low")),
                            number_from_json(w.at("midpoint")), w.at("d_star").get<double>()};
  }
  if (!j.at("slope_fit").is_null()) {
    const auto& s = j.at("slope_fit");
    SlopeFitRecord f;
    f.region = s.at("region").get<std::vector<ModelId>>();
    f.region_min_weight = s.at("region_min_weight").get<double>();
    f.slope = s.at("slope").get<double>();
    f.intercept = s.at("intercept").get<double>();
    f.residual_rms = s.at("residual_rms").get<double>();
    f.robust = s.at("robust").get<bool>();
    r.slope_fit = std::move(f);
  }
  return r;
}

Json to_json(const TheoremConstants& k) {
  return {{"B", k.b},
          {"B_prime", number_to_json(k.b_prime)},
          {"m1", k.m1},
          {"m2", k.m2},
          {"D_m1", k.d_m1},
          {"eta_minus", number_to_json(k.eta_minus)},
          {"eta_plus", number_to_json(k.eta_plus)},
          {"gamma", k.gamma},
          {"sigma2", k.sigma2},
          {"n", k.n},
          {"card_M", k.card_m},
          {"prob_bound", k.prob_bound},
          {"vacuous", k.vacuous()}};
}

TheoremConstants theorem_constants_from_json(const Json& j) {
  TheoremConstants k;
  k.b = j.at("B").get<double>();
  k.b_prime = number_from_json(j.at("B_prime"));
  k.m1 = j.at("m1").get<std::string>();
  k.m2 = j.at("m2").get<std::string>();
  k.d_m1 = j.at("D_m1").get<std::size_t>();
  k.eta_minus = number_from_json(j.at("eta_minus"));
  k.eta_plus = number_from_json(j.at("eta_plus"));
  k.gamma = j.at("gamma").get<double>();
  k.sigma2 = j.at("sigma2").get<double>();
  k.n = j.at("n").get<std::size_t>();
  k.card_m = j.at("card_M").get<std::size_t>();
  k.prob_bound = j.at("prob_bound").get<double>();
  return k;
}

Vector read_vector_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  Vector out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto comma = line.find(',');
    const std::string field = line.substr(first, comma == std::string::npos ? std::string::npos : comma - first);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
    } catch (const std::exception&) {
      if (out.empty() && lineno == 1) continue;  // header
      throw InvalidArgument(p.string() + ":" + std::to_string(lineno) + ": not a number: '" + field + "'");
    }
  }
  if (out.empty()) throw IoError(p.string() + ": no values");
  return out;
}

}  // namespace penmin
