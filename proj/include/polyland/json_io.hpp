#pragma once

// JSON (de)serialization for the documents the command line reads and writes.
// All documents carry schema "polyland/v1"; multi-indices are 1-based and sorted
// in files, converted at the boundary.

#include <json.hpp>
#include <string>

#include "polyland/dynamics.hpp"
#include "polyland/metrics.hpp"
#include "polyland/network.hpp"
#include "polyland/quadlandscape.hpp"
#include "polyland/symtensor.hpp"

namespace polyland::io {

/// Insertion-ordered JSON keeps output key order stable across runs.
using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "polyland/v1";
inline constexpr const char* kVersion = "0.1.0";

// ---- tensors and matrices ----------------------------------------------------------

Json symtensor_to_json(const symtensor::SymTensor& T);
symtensor::SymTensor symtensor_from_json(const Json& doc);

Json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const Json& doc);

/// Teacher matrix from any of: a bare 2D array, {"kind":"matrix","data":...},
/// {"type":"eigen","eigenvalues":[...],"basis":"identity"|"reflect_ones"|[[...]]},
/// or {"type":"params","alpha":[...],"W":[[...]]}.
Eigen::MatrixXd teacher_matrix_from_json(const Json& doc);

// ---- distributions -----------------------------------------------------------------

Json moment_spec_to_json(const metrics::MomentSpec& spec);
metrics::MomentSpec moment_spec_from_json(const Json& doc);

// ---- networks ----------------------------------------------------------------------

Json params_to_json(const network::NetworkParams& params);
network::NetworkParams params_from_json(const Json& doc);

// ---- reports -----------------------------------------------------------------------

Json regime_to_json(const network::RegimeResult& result);
Json ey_points_to_json(const std::vector<quadlandscape::EYCriticalPoint>& points);
Json iid_set_to_json(const quadlandscape::IIDCriticalSet& set);
Json flow_record_to_json(const dynamics::FlowRecord& record);
Json teacher_student_report_to_json(const dynamics::TeacherStudentReport& report);

// ---- files -------------------------------------------------------------------------

Json load_json(const std::string& path);
void save_json(const Json& doc, const std::string& path);  // "-" writes to stdout

/// Fixed "%.17g" rendering: round-trip exact, locale-independent, dot decimal.
std::string format_double(double x);

}  // namespace polyland::io
