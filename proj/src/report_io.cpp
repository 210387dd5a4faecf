#include "pg3/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pg3::io {

namespace {

template <typename Derived>
json vector_json(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json params_json(JordanCase kind, const FlowParams& p) {
  json j = json::object();
  for (const auto& name : parameter_names(kind)) j[name] = p.get(name);
  return j;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw Error(std::string(what) + " must be an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw Error(std::string(what) + " entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

std::string csv_number(double x) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return s.str();
}

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_string()) {
    out << prefix << ',' << j.get<std::string>() << '\n';
  } else if (j.is_number_float()) {
    out << prefix << ',' << csv_number(j.get<double>()) << '\n';
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

}  // namespace

json to_json(const ProjPoint& p) { return vector_json(p.coords()); }

json to_json(const Line& l) { return {{"plucker", vector_json(l.plucker())}}; }

json to_json(const GeometricObject& o) {
  if (const auto* p = std::get_if<ProjPoint>(&o)) return {{"type", "point"}, {"coords", to_json(*p)}};
  return {{"type", "line"}, {"plucker", vector_json(std::get<Line>(o).plucker())}};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(const ClassificationResult& r) {
  return {{"schema_version", kSchemaVersion},
          {"case", std::string(to_string(r.kind))},
          {"params", params_json(r.kind, r.params)},
          {"shift", r.shift},
          {"conjugator", matrix_to_json(r.conjugator)},
          {"residual", r.residual},
          {"ambiguous", r.ambiguous}};
}

json to_json(const CompactnessReport& r) {
  json j = {{"status", std::string(to_string(r.status))}, {"closure_torus_rank", r.closure_torus_rank}};
  if (r.ratio)
    j["ratio"] = {{"numerator", r.ratio->numerator},
                  {"denominator", r.ratio->denominator},
                  {"error", r.ratio->error},
                  {"exact", r.ratio->exact}};
  return j;
}

json to_json(const AuditReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    json lines = json::array(), points = json::array();
    for (const auto& l : v.lines) lines.push_back(to_json(l));
    for (const auto& p : v.points) points.push_back(to_json(p));
    violations.push_back(
        {{"kind", v.kind}, {"sample", v.sample}, {"residual", v.residual}, {"lines", lines}, {"points", points}});
  }
  return {{"schema_version", kSchemaVersion},
          {"witness", r.witness},
          {"samples", r.samples},
          {"seed", r.seed},
          {"max_residuals", r.max_residuals},
          {"min_disjoint_omega", r.min_disjoint_omega},
          {"violations", violations},
          {"passed", r.violations.empty()}};
}

json to_json(const OrbitLimitReport& r) {
  json trace = json::array();
  for (const auto& [t, d] : r.trace) trace.push_back({t, d});
  return {{"schema_version", kSchemaVersion},
          {"limit", r.limit ? to_json(*r.limit) : json(nullptr)},
          {"converged", r.converged},
          {"trace", trace},
          {"final_residuals", r.final_residuals}};
}

json to_json(const FixedLineSet& s) {
  json lines = json::array();
  for (const auto& l : s.lines) lines.push_back(to_json(l));
  return {{"schema_version", kSchemaVersion}, {"lines", lines}, {"continuum", s.continuum}};
}

json to_json(const Certificate& c) {
  json inc = json::array();
  for (const auto& i : c.incidences)
    inc.push_back({{"name", i.name}, {"first", to_json(i.first)}, {"second", to_json(i.second)}, {"residual", i.residual}});
  return {{"label_a", c.label_a},   {"label_b", c.label_b}, {"limit_a", to_json(c.limit_a)},
          {"limit_b", to_json(c.limit_b)}, {"distance", c.distance}, {"incidences", inc}};
}

json to_json(const CaseReplayReport& r) {
  json j = {{"schema_version", kSchemaVersion},
            {"case", r.case_id},
            {"params", r.params},
            {"seed", r.seed},
            {"samples", r.samples},
            {"passes", r.passes},
            {"rejects", r.rejects},
            {"verdicts", r.verdicts},
            {"max_residuals", r.max_residuals},
            {"tolerances", r.tolerances},
            {"checks", r.checks},
            {"certificate", r.certificate ? to_json(*r.certificate) : json(nullptr)},
            {"notes", r.notes},
            {"passed", r.passed()}};
  return j;
}

json to_json(const RankReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"rank", r.rank},
          {"singular_values", r.singular_values},
          {"nonzero_coordinates", r.nonzero_coordinates},
          {"consistent", r.consistent}};
}

Mat4 matrix_from_json(const json& j) {
  const json& rows = j.is_object() && j.contains("matrix") ? j.at("matrix") : j;
  if (!rows.is_array() || rows.size() != 4) throw Error("matrix must be an array of 4 rows");
  Mat4 m;
  for (int i = 0; i < 4; ++i) m.row(i) = fixed_vector<4>(rows[i], "matrix row").transpose();
  if (!m.allFinite()) throw Error("matrix entries must be finite");
  return m;
}

ProjPoint point_from_json(const json& j) {
  const json& c = j.is_object() && j.contains("coords") ? j.at("coords") : j;
  return ProjPoint::from(fixed_vector<4>(c, "point"));
}

Line line_from_json(const json& j) {
  if (!j.is_object()) throw Error("line must be an object with \"plucker\" or \"points\"");
  if (j.contains("plucker")) return plucker_lift(fixed_vector<6>(j.at("plucker"), "plucker"));
  if (j.contains("points")) {
    const json& pts = j.at("points");
    if (!pts.is_array() || pts.size() != 2) throw Error("\"points\" must hold two 4-vectors");
    return Line::span(fixed_vector<4>(pts[0], "point"), fixed_vector<4>(pts[1], "point"));
  }
  throw Error("line must be an object with \"plucker\" or \"points\"");
}

OneParamFlow flow_from_json(const json& j) {
  if (!j.is_object()) throw Error("flow must be a JSON object");
  if (j.contains("matrix")) {
    const ClassificationResult r = classify_generator(matrix_from_json(j));
    return OneParamFlow(r.kind, r.params);
  }
  if (!j.contains("case") || !j.at("case").is_string()) throw Error("flow needs a \"case\" string or a \"matrix\"");
  const auto kind = parse_case(j.at("case").get<std::string>());
  if (!kind) throw Error("unknown case tag '" + j.at("case").get<std::string>() + "'");
  FlowParams p;
  if (j.contains("params")) {
    const json& ps = j.at("params");
    if (!ps.is_object()) throw Error("\"params\" must be an object");
    const auto allowed = parameter_names(*kind);
    for (auto it = ps.begin(); it != ps.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
        throw Error("parameter '" + it.key() + "' is not used by case " + std::string(to_string(*kind)));
      if (!it->is_number()) throw Error("parameter '" + it.key() + "' must be a number");
      p.set(it.key(), it->get<double>());
    }
  }
  return OneParamFlow(*kind, p);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "sample,series,t,distance\n";
  for (const auto& r : rows) out << r.sample << ',' << r.series << ',' << csv_number(r.t) << ',' << csv_number(r.distance) << '\n';
}

void write_trace_csv(std::ostream& out, const OrbitLimitReport& r) {
  out << "t,distance\n";
  for (const auto& [t, d] : r.trace) out << csv_number(t) << ',' << csv_number(d) << '\n';
}

void write_flat_csv(std::ostream& out, const json& j) {
  out << "key,value\n";
  flatten(j, "", out);
}

}  // namespace pg3::io
