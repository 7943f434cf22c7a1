#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "penmin/error.hpp"
#include "penmin/harness.hpp"
#include "svg.hpp"

namespace penmin {

namespace fs = std::filesystem;

namespace {

template <class T>
Json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, double>) {
    return number_to_json(*v);
  } else {
    return *v;
  }
}

template <class T>
std::optional<T> opt_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    return number_from_json(j);
  } else {
    return j.get<T>();
  }
}

Json doubles(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

std::vector<double> doubles_from(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number_from_json(x));
  return v;
}

Json to_json(const Quantiles& q) {
  return {{"count", q.count},   {"mean", q.mean}, {"min", q.min}, {"q05", q.q05}, {"q25", q.q25},
          {"median", q.median}, {"q75", q.q75},  {"q95", q.q95}, {"max", q.max}};
}

Quantiles quantiles_from(const Json& j) {
  Quantiles q;
  q.count = j.at("count").get<std::size_t>();
  q.mean = j.at("mean").get<double>();
  q.min = j.at("min").get<double>();
  q.q05 = j.at("q05").get<double>();
  q.q25 = j.at("q25").get<double>();
  q.median = j.at("median").get<double>();
  q.q75 = j.at("q75").get<double>();
  q.q95 = j.at("q95").get<double>();
  q.max = j.at("max").get<double>();
  return q;
}

Json to_json(const ReplicateRecord& r) {
  Json c_hat = Json::object();
  for (const auto& [k, v] : r.c_hat) c_hat[k] = opt(v);
  return {{"replicate", r.replicate},
          {"c_hat", std::move(c_hat)},
          {"selected", opt(r.selected)},
          {"selected_dim", r.selected_dim},
          {"selected_risk", r.selected_risk},
          {"oracle", r.oracle},
          {"oracle_dim", r.oracle_dim},
          {"oracle_risk", r.oracle_risk},
          {"breakpoints", doubles(r.breakpoints)},
          {"segment_ids", r.segment_ids},
          {"segment_dims", r.segment_dims},
          {"dim_at_c1", opt(r.dim_at_c1)},
          {"dim_at_c2", opt(r.dim_at_c2)},
          {"event_low", opt(r.event_low)},
          {"event_high", opt(r.event_high)},
          {"dims_at_check_points", r.dims_at_check_points},
          {"deviation_sup", opt(r.deviation_sup)},
          {"deviation_violated", opt(r.deviation_violated)}};
}

ReplicateRecord record_from(const Json& j) {
  ReplicateRecord r;
  r.replicate = j.at("replicate").get<std::size_t>();
  for (const auto& [k, v] : j.at("c_hat").items()) r.c_hat[k] = opt_from<double>(v);
  r.selected = opt_from<std::string>(j.at("selected"));
  r.selected_dim = j.at("selected_dim").get<double>();
  r.selected_risk = j.at("selected_risk").get<double>();
  r.oracle = j.at("oracle").get<std::string>();
  r.oracle_dim = j.at("oracle_dim").get<double>();
  r.oracle_risk = j.at("oracle_risk").get<double>();
  r.breakpoints = doubles_from(j.at("breakpoints"));
  r.segment_ids = j.at("segment_ids").get<std::vector<std::string>>();
  r.segment_dims = j.at("segment_dims").get<std::vector<double>>();
  r.dim_at_c1 = opt_from<double>(j.at("dim_at_c1"));
  r.dim_at_c2 = opt_from<double>(j.at("dim_at_c2"));
  r.event_low = opt_from<bool>(j.at("event_low"));
  r.event_high = opt_from<bool>(j.at("event_high"));
  r.dims_at_check_points = j.at("dims_at_check_points").get<std::vector<double>>();
  r.deviation_sup = opt_from<double>(j.at("deviation_sup"));
  r.deviation_violated = opt_from<bool>(j.at("deviation_violated"));
  return r;
}

Json slope_fit_json(const std::optional<SlopeFitRecord>& f) {
  if (!f) return nullptr;
  return {{"region", f->region},       {"region_min_weight", f->region_min_weight},
          {"slope", f->slope},         {"intercept", f->intercept},
          {"residual_rms", f->residual_rms}, {"robust", f->robust}};
}

std::optional<SlopeFitRecord> slope_fit_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  SlopeFitRecord f;
  f.region = j.at("region").get<std::vector<std::string>>();
  f.region_min_weight = j.at("region_min_weight").get<double>();
  f.slope = j.at("slope").get<double>();
  f.intercept = j.at("intercept").get<double>();
  f.residual_rms = j.at("residual_rms").get<double>();
  f.robust = j.at("robust").get<bool>();
  return f;
}

}  // namespace

Json to_json(const ExperimentReport& r) {
  Json records = Json::array();
  for (const auto& rec : r.records) records.push_back(to_json(rec));

  Json agg_c_hat = Json::object();
  for (const auto& [k, q] : r.aggregates.c_hat) agg_c_hat[k] = to_json(q);

  Json lines = Json::array();
  for (const auto& l : r.example.lines) lines.push_back({{"id", l.id}, {"emp_risk", l.intercept}, {"weight", l.weight}});

  return {{"config", to_json(r.config)},
          {"metadata", {{"kernel_backend", r.kernel_backend}, {"seed", r.config.seed}}},
          {"card_M", r.card_m},
          {"nested", r.nested},
          {"penalty_shape", r.penalty_shape},
          {"theorem_constants", r.constants ? to_json(*r.constants) : Json(nullptr)},
          {"theorem_constants_error", opt(r.constants_error)},
          {"C1", opt(r.c1)},
          {"C2", opt(r.c2)},
          {"records", std::move(records)},
          {"aggregates",
           {{"c_hat", std::move(agg_c_hat)},
            {"failures", r.aggregates.failures},
            {"oracle_ratio", to_json(r.aggregates.oracle_ratio)},
            {"theorem_frequency", opt(r.aggregates.theorem_frequency)},
            {"deviation_violation_frequency", opt(r.aggregates.deviation_violation_frequency)}}},
          {"example_path",
           {{"lines", std::move(lines)},
            {"dims", r.example.dims},
            {"breakpoints", doubles(r.example.breakpoints)},
            {"segment_ids", r.example.segment_ids},
            {"slope_fit", slope_fit_json(r.example.slope_fit)}}}};
}

ExperimentReport experiment_report_from_json(const Json& j) {
  ExperimentReport r;
  try {
    r.config = experiment_config_from_json(j.at("config"));
    r.kernel_backend = j.at("metadata").at("kernel_backend").get<std::string>();
    r.card_m = j.at("card_M").get<std::size_t>();
    r.nested = j.at("nested").get<bool>();
    r.penalty_shape = j.at("penalty_shape").get<std::string>();
    if (!j.at("theorem_constants").is_null()) r.constants = theorem_constants_from_json(j.at("theorem_constants"));
    r.constants_error = opt_from<std::string>(j.at("theorem_constants_error"));
    r.c1 = opt_from<double>(j.at("C1"));
    r.c2 = opt_from<double>(j.at("C2"));
    for (const auto& rec : j.at("records")) r.records.push_back(record_from(rec));
    const auto& a = j.at("aggregates");
    for (const auto& [k, q] : a.at("c_hat").items()) r.aggregates.c_hat[k] = quantiles_from(q);
    r.aggregates.failures = a.at("failures").get<std::map<std::string, std::size_t>>();
    r.aggregates.oracle_ratio = quantiles_from(a.at("oracle_ratio"));
    r.aggregates.theorem_frequency = opt_from<double>(a.at("theorem_frequency"));
    r.aggregates.deviation_violation_frequency = opt_from<double>(a.at("deviation_violation_frequency"));
    const auto& e = j.at("example_path");
    for (const auto& l : e.at("lines")) {
      r.example.lines.push_back({l.at("id").get<std::string>(), l.at("emp_risk").get<double>(), l.at("weight").get<double>()});
    }
    r.example.dims = e.at("dims").get<std::map<std::string, double>>();
    r.example.breakpoints = doubles_from(e.at("breakpoints"));
    r.example.segment_ids = e.at("segment_ids").get<std::vector<std::string>>();
    r.example.slope_fit = slope_fit_from(e.at("slope_fit"));
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "svg") return ReportFormat::Svg;
  throw InvalidArgument("unknown report format '" + s + "' (expected json, csv or svg)");
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : ""; }
std::string fmt_opt(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : ""; }

}  // namespace

std::string records_to_csv(const ExperimentReport& report) {
  std::vector<std::string> methods;
  for (const auto& [k, v] : report.aggregates.c_hat) methods.push_back(k);
  std::ostringstream os;
  os << "replicate";
  for (const auto& m : methods) os << ",c_hat_" << m;
  os << ",selected,selected_dim,selected_risk,oracle,oracle_dim,oracle_risk,n_breakpoints,dim_at_c1,dim_at_c2,"
        "event_low,event_high,deviation_violated\n";
  for (const auto& r : report.records) {
    os << r.replicate;
    for (const auto& m : methods) {
      const auto it = r.c_hat.find(m);
      os << ',' << (it == r.c_hat.end() ? "" : fmt_opt(it->second));
    }
    os << fmt::format(",{},{:.17g},{:.17g},{},{:.17g},{:.17g},{},{},{},{},{},{}\n", r.selected.value_or(""),
                      r.selected_dim, r.selected_risk, r.oracle, r.oracle_dim, r.oracle_risk, r.breakpoints.size(),
                      fmt_opt(r.dim_at_c1), fmt_opt(r.dim_at_c2), fmt_opt(r.event_low), fmt_opt(r.event_high),
                      fmt_opt(r.deviation_violated));
  }
  return os.str();
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  if (!out) throw IoError("write failed: " + p.string());
}

std::string example_path_csv(const ExamplePath& e) {
  std::ostringstream os;
  os << "C_low,C_high,model_id,dim,emp_risk\n";
  for (std::size_t j = 0; j < e.segment_ids.size(); ++j) {
    const auto& id = e.segment_ids[j];
    double emp = 0.0;
    for (const auto& l : e.lines) {
      if (l.id == id) emp = l.intercept;
    }
    const double lo = j == 0 ? 0.0 : e.breakpoints[j - 1];
    const std::string hi = j < e.breakpoints.size() ? fmt::format("{:.17g}", e.breakpoints[j]) : "inf";
    os << fmt::format("{:.17g},{},{},{:.17g},{:.17g}\n", lo, hi, id, e.dims.at(id), emp);
  }
  return os.str();
}

std::string aggregates_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "quantity,count,mean,min,q05,q25,median,q75,q95,max\n";
  auto row = [&](const std::string& name, const Quantiles& q) {
    os << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", name, q.count, q.mean,
                      q.min, q.q05, q.q25, q.median, q.q75, q.q95, q.max);
  };
  for (const auto& [k, q] : r.aggregates.c_hat) row("c_hat_" + k, q);
  row("oracle_ratio", r.aggregates.oracle_ratio);
  return os.str();
}

std::string complexity_svg(const ExperimentReport& r) {
  const auto& e = r.example;
  svg::Plot plot("Selected dimension along the regularization path (replicate 0)", "penalty constant C",
                 "D of selected model");
  const double last = e.breakpoints.empty() ? 1.0 : e.breakpoints.back();
  const double x_max = std::max(2.0 * last, r.c2 ? std::min(*r.c2 * 1.2, 4.0 * last) : 0.0);
  double y_max = 1.0;
  for (const auto& [id, d] : e.dims) y_max = std::max(y_max, d);
  plot.set_x_range(0.0, x_max);
  plot.set_y_range(0.0, y_max * 1.05);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < e.segment_ids.size(); ++j) {
    const double lo = j == 0 ? 0.0 : e.breakpoints[j - 1];
    const double hi = j < e.breakpoints.size() ? e.breakpoints[j] : x_max;
    const double d = e.dims.at(e.segment_ids[j]);
    pts.emplace_back(lo, d);
    pts.emplace_back(std::min(hi, x_max), d);
  }
  plot.polyline(pts, "#1f77b4");
  if (r.c1 && *r.c1 >= 0.0) plot.vline(*r.c1, "#2ca02c", "C1");
  if (r.c2 && *r.c2 <= x_max) plot.vline(*r.c2, "#d62728", "C2");
  return plot.render();
}

std::string slope_svg(const ExperimentReport& r) {
  const auto& e = r.example;
  svg::Plot plot("Empirical risk against penalty shape (replicate 0)", "penalty weight w_m", "empirical risk");
  double w_max = 0.0;
  double a_min = std::numeric_limits<double>::infinity();
  double a_max = -a_min;
  std::vector<std::pair<double, double>> pts;
  for (const auto& l : e.lines) {
    pts.emplace_back(l.weight, l.intercept);
    w_max = std::max(w_max, l.weight);
    a_min = std::min(a_min, l.intercept);
    a_max = std::max(a_max, l.intercept);
  }
  if (pts.empty()) a_min = a_max = 0.0;
  plot.set_x_range(0.0, w_max * 1.05);
  plot.set_y_range(std::min(a_min, 0.0), a_max * 1.05 + 1e-12);
  plot.points(pts, "#1f77b4");
  if (e.slope_fit) {
    const double x0 = e.slope_fit->region_min_weight;
    plot.polyline({{x0, e.slope_fit->intercept + e.slope_fit->slope * x0},
                   {w_max, e.slope_fit->intercept + e.slope_fit->slope * w_max}},
                  "#d62728");
  }
  return plot.render();
}

std::string histogram_svg(const ExperimentReport& r) {
  const std::string method = r.config.calibrators.final_method;
  std::vector<double> v;
  for (const auto& rec : r.records) {
    const auto it = rec.c_hat.find(method);
    if (it != rec.c_hat.end() && it->second) v.push_back(*it->second);
  }
  svg::Plot plot("Distribution of C_hat (" + method + ")", "C_hat", "replicates");
  if (v.empty()) return plot.render();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) hi = lo + 1e-3;
  constexpr std::size_t bins = 30;
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * bins);
    counts[std::min(b, bins - 1)]++;
  }
  plot.set_x_range(lo, hi);
  plot.set_y_range(0.0, static_cast<double>(*std::max_element(counts.begin(), counts.end())) * 1.1);
  for (std::size_t b = 0; b < bins; ++b) {
    const double x0 = lo + (hi - lo) * static_cast<double>(b) / bins;
    plot.bar(x0, x0 + (hi - lo) / bins, static_cast<double>(counts[b]), "#9467bd");
  }
  if (r.penalty_shape == "dimension" && r.config.noise.kind == "iid") {
    plot.vline(r.config.noise.sigma2, "#d62728", "sigma^2");
  }
  return plot.render();
}

}  // namespace

std::vector<fs::path> emit_report(const ExperimentReport& report, ReportFormat format, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    write_file(p, content);
    written.push_back(p);
  };
  switch (format) {
    case ReportFormat::Json:
      put("report.json", to_json(report).dump(2) + "\n");
      break;
    case ReportFormat::Csv:
      put("records.csv", records_to_csv(report));
      put("path_segments.csv", example_path_csv(report.example));
      put("aggregates.csv", aggregates_csv(report));
      break;
    case ReportFormat::Svg:
      put("complexity_path.svg", complexity_svg(report));
      put("slope_fit.svg", slope_svg(report));
      put("c_hat_hist.svg", histogram_svg(report));
      break;
  }
  return written;
}

}  // namespace penmin
