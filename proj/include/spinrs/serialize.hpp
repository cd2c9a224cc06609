#pragma once

#include <string>

#include <json.hpp>

#include "spinrs/integrability.hpp"
#include "spinrs/phasespace.hpp"

namespace spinrs {

using json = nlohmann::json;

inline constexpr const char* kSchema = "spinrs/1";

// Complex numbers are [re, im]; matrices are row-major nested arrays.
json to_json(cplx z);
json to_json(const CMat& m);
json vector_to_json(const CVec& v);
json row_to_json(const CRow& v);

cplx complex_from_json(const json& j);
CMat matrix_from_json(const json& j);
CVec vector_from_json(const json& j);

json to_json(const ModelParams& p);
ModelParams params_from_json(const json& j);

// Documents carry "schema", "kind" and the model parameters next to the data.
json to_json(const LocalPoint& p, const ModelParams& params);
json to_json(const AmbientPoint& m, const ModelParams& params);
json to_json(const GaugeFrame& g);
json to_json(const RankCertificate& c);
// Families keyed by 1-based comma-joined indices, as in the CSV export.
json to_json(const IntegralTable& t);

LocalPoint local_point_from_json(const json& j);
AmbientPoint ambient_point_from_json(const json& j);

// Reads a document and checks its schema; the kind is returned in *kind.
json read_document(const std::string& path, std::string* kind = nullptr);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

// 16 hex digits of FNV-1a over the coordinates.
std::string point_digest(const LocalPoint& p);
std::string point_digest(const AmbientPoint& m);

}  // namespace spinrs
