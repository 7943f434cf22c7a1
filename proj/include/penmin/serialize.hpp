#pragma once

// JSON and binary encodings shared by the harness and the CLI.
//
// Non-finite doubles are written as the strings "inf", "-inf" and "nan"
// since JSON has no literal for them.

#include <filesystem>
#include <optional>

#include <Eigen/Dense>
#include "json.hpp"

#include "penmin/calibrate.hpp"
#include "penmin/models.hpp"
#include "penmin/theory.hpp"

namespace penmin {

using Json = nlohmann::json;

Json number_to_json(double x);
double number_from_json(const Json& j);
Json optional_to_json(const std::optional<double>& x);
std::optional<double> optional_from_json(const Json& j);

// {rows, cols, dtype: "float64", order: "column-major", data: <file name>}
// next to a raw little-endian float64 blob. Header path is blob + ".json".
void write_matrix_blob(const std::filesystem::path& blob, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_blob(const std::filesystem::path& blob);

// {n, models: [{id, dim, kind, params}]}. Regressograms carry {pieces};
// basis models carry {blob} (written next to blob_dir); null models carry {}.
Json collection_to_json(const ModelCollection& c, const std::filesystem::path& blob_dir = {});
// Relative blob paths resolve against base_dir.
ModelCollection collection_from_json(const Json& j, const std::filesystem::path& base_dir = {});

Json to_json(const CalibrationResult& r);
CalibrationResult calibration_from_json(const Json& j);

Json to_json(const TheoremConstants& k);
TheoremConstants theorem_constants_from_json(const Json& j);

// Reads one number per line (blank lines and '#' comments skipped; a
// leading non-numeric header line is ignored).
Vector read_vector_csv(const std::filesystem::path& p);

}  // namespace penmin
