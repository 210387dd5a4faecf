#pragma once

#include "pg3/clifford.hpp"
#include "pg3/dynamics.hpp"
#include "pg3/flows.hpp"
#include "pg3/projective.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace pg3::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json to_json(const ProjPoint& p);
json to_json(const Line& l);
json to_json(const GeometricObject& o);
json matrix_to_json(const Eigen::MatrixXd& m);

json to_json(const ClassificationResult& r);
json to_json(const CompactnessReport& r);
json to_json(const AuditReport& r);
json to_json(const OrbitLimitReport& r);
json to_json(const FixedLineSet& s);
json to_json(const Certificate& c);
json to_json(const CaseReplayReport& r);
json to_json(const RankReport& r);

/// Parse errors throw Error with a readable message.
Mat4 matrix_from_json(const json& j);
ProjPoint point_from_json(const json& j);
/// {"plucker":[6]} or {"points":[[4],[4]]}.
Line line_from_json(const json& j);

/// Flow given either as {"case":..,"params":{..}} or {"matrix":[[..]]}; a
/// matrix is classified and replaced by its canonical flow.
OneParamFlow flow_from_json(const json& j);

/// Trace rows as CSV: sample,series,t,distance.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
/// Orbit trace as CSV: t,distance.
void write_trace_csv(std::ostream& out, const OrbitLimitReport& r);
/// Any JSON document as key,value rows with dotted paths.
void write_flat_csv(std::ostream& out, const json& j);

}  // namespace pg3::io
