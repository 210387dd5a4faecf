#include "pg3/cli.hpp"

#include "pg3/clifford.hpp"
#include "pg3/dynamics.hpp"
#include "pg3/flows.hpp"
#include "pg3/report_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pg3::cli {

using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == ';' || c == '[' || c == ']'; }, ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) throw UsageError(what + ": '" + tok + "' is not a finite number");
    out.push_back(v);
  }
  return out;
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--params expects key=value pairs, got '" + item + "'");
    const auto v = parse_numbers(item.substr(eq + 1), "--params");
    if (v.size() != 1) throw UsageError("--params value for '" + item.substr(0, eq) + "' must be one number");
    out[item.substr(0, eq)] = v[0];
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw UsageError("'" + path + "' is not valid JSON");
  return j;
}

json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw UsageError(what + " is not valid JSON");
  return j;
}

double env_or(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  const auto parsed = parse_numbers(v, name);
  if (parsed.size() != 1 || !(parsed[0] > 0.0)) throw UsageError(std::string(name) + " must be one positive number");
  return parsed[0];
}

FlowParams to_params(JordanCase kind, const std::map<std::string, double>& given) {
  const auto allowed = parameter_names(kind);
  FlowParams p;
  for (const auto& [k, v] : given) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw UsageError("parameter '" + k + "' is not used by case " + std::string(to_string(kind)));
    p.set(k, v);
  }
  return p;
}

JordanCase case_of(const std::string& tag) {
  const auto kind = parse_case(tag);
  if (!kind) throw UsageError("unknown case '" + tag + "'");
  return *kind;
}

Mat4 matrix_of(const std::vector<double>& v) {
  if (v.size() != 16) throw UsageError("a matrix needs 16 entries (row-major)");
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = v[4 * i + j];
  return m;
}

OneParamFlow flow_of(const RunConfig& c) {
  if (c.matrix) {
    const ClassificationResult r = classify_generator(matrix_of(*c.matrix), c.classify_tol);
    return OneParamFlow(r.kind, r.params);
  }
  if (c.flow_case.empty()) throw UsageError("a flow is required (--case/--params, --flow, --matrix)");
  const JordanCase kind = case_of(c.flow_case);
  return OneParamFlow(kind, to_params(kind, c.params));
}

Line line_of(const std::vector<double>& v) {
  if (v.size() == 8) return Line::span(Vec4(v[0], v[1], v[2], v[3]), Vec4(v[4], v[5], v[6], v[7]));
  if (v.size() == 6) {
    Vec6 p;
    for (int i = 0; i < 6; ++i) p(i) = v[i];
    return plucker_lift(p);
  }
  throw UsageError("--line needs 8 numbers (two points) or 6 (Pluecker coordinates)");
}

Schedule schedule_of(const RunConfig& c) {
  const Direction dir = c.backward ? Direction::Backward : Direction::Forward;
  if (c.schedule == "geometric") return Schedule::geometric(c.t0, c.ratio, c.steps, dir);
  if (c.schedule == "discrete") return Schedule::discrete(c.t0, c.steps, dir);
  throw UsageError("--schedule must be geometric or discrete");
}

struct Outcome {
  json report;
  int code = kPass;
  std::vector<TraceRow> trace;
  std::optional<OrbitLimitReport> orbit;
};

Outcome run_replay(const RunConfig& c) {
  CaseReplayReport rep;
  const std::string& t = c.target;
  if (t == "a1") {
    rep = replay_a1(to_params(JordanCase::A1, c.params), c.samples, c.seed);
  } else if (t == "c1") {
    rep = replay_c1(c.n_max);
  } else if (t == "c1-lemma") {
    rep = replay_lemma_c1(c.n_max, c.samples, c.seed);
  } else if (t == "c3") {
    const FlowParams p = to_params(JordanCase::C3, c.params);
    if (!c.params.count("a")) throw UsageError("replay c3 needs --params a=<value>");
    rep = replay_c3(p.a, c.grid);
  } else if (t == "c4") {
    rep = replay_c4(to_params(JordanCase::C4, c.params), c.grid);
  } else if (t == "c5") {
    rep = replay_c5(to_params(JordanCase::C5, c.params), c.samples, c.seed);
  } else if (t == "discrete") {
    if (c.flow_case.empty()) throw UsageError("replay discrete needs --case <a1|a2|b1|b2>");
    const JordanCase kind = case_of(c.flow_case);
    rep = replay_discrete(kind, to_params(kind, c.params), c.grid);
  } else {
    throw UsageError("unknown replay target '" + t + "'");
  }
  return {io::to_json(rep), rep.passed() ? kPass : kVerificationFailure, rep.trace, std::nullopt};
}

Outcome run(const RunConfig& c) {
  const std::string& cmd = c.command;
  if (cmd == "classify") {
    Mat4 a;
    if (c.matrix) a = matrix_of(*c.matrix);
    else a = flow_of(c).generator();
    try {
      const ClassificationResult r = classify_generator(a, c.classify_tol);
      json j = io::to_json(r);
      try {
        j["compactness"] = io::to_json(compactness_status(OneParamFlow(r.kind, r.params)));
      } catch (const InvalidFlow&) {
      }
      return {j, kPass, {}, std::nullopt};
    } catch (const NotClassifiable& e) {
      return {{{"schema_version", io::kSchemaVersion}, {"error", e.what()}}, kVerificationFailure, {}, std::nullopt};
    }
  }
  if (cmd == "replay") return run_replay(c);
  if (cmd == "clifford-parallel") {
    if (!c.point || !c.line) throw UsageError("clifford parallel needs --point and --line");
    if (c.point->size() != 4) throw UsageError("--point needs 4 numbers");
    const ProjPoint p = ProjPoint::from(Vec4((*c.point)[0], (*c.point)[1], (*c.point)[2], (*c.point)[3]));
    const Line m = clifford_parallel(p, line_of(*c.line));
    return {{{"schema_version", io::kSchemaVersion}, {"line", io::to_json(m)}}, kPass, {}, std::nullopt};
  }
  if (cmd == "audit-spread") {
    ParallelismWitness w = clifford_witness();
    if (c.witness == "sheared") {
      Mat4 s = Mat4::Identity();
      s(0, 1) = 0.25;
      w = sheared_witness(w, s);
    } else if (c.witness != "clifford") {
      throw UsageError("--witness must be clifford or sheared");
    }
    const AuditReport r = spread_audit(w, c.samples, c.seed, c.tolerances);
    return {io::to_json(r), r.violations.empty() ? kPass : kVerificationFailure, {}, std::nullopt};
  }
  if (cmd == "limits") {
    const OneParamFlow flow = flow_of(c);
    const Schedule s = schedule_of(c);
    OrbitLimitReport r;
    if (c.line && c.point) throw UsageError("limits takes either --point or --line");
    if (c.line) {
      r = line_orbit_limit(flow, line_of(*c.line), s, c.limit_tol);
    } else if (c.point) {
      if (c.point->size() != 4) throw UsageError("--point needs 4 numbers");
      r = point_orbit_limit(flow, ProjPoint::from(Vec4((*c.point)[0], (*c.point)[1], (*c.point)[2], (*c.point)[3])),
                            s, c.limit_tol);
    } else {
      throw UsageError("limits needs --point or --line");
    }
    return {io::to_json(r), r.converged ? kPass : kVerificationFailure, {}, r};
  }
  if (cmd == "fixed-lines") {
    const FixedLineSet s = fixed_lines(flow_of(c), c.limit_tol);
    return {io::to_json(s), kPass, {}, std::nullopt};
  }
  throw UsageError("no command given");
}

void emit(const RunConfig& c, Outcome& o, std::ostream& out) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!c.output.empty()) {
    file.open(c.output);
    if (!file) throw UsageError("cannot write '" + c.output + "'");
    sink = &file;
  }
  if (!c.trace_file.empty() && c.command == "replay") {
    std::ofstream tf(c.trace_file);
    if (!tf) throw UsageError("cannot write '" + c.trace_file + "'");
    io::write_trace_csv(tf, o.trace);
    o.report["trace_file"] = c.trace_file;
  }
  if (c.format == "json") {
    *sink << o.report.dump(2) << '\n';
  } else if (c.command == "replay") {
    io::write_trace_csv(*sink, o.trace);
  } else if (o.orbit) {
    io::write_trace_csv(*sink, *o.orbit);
  } else {
    io::write_flat_csv(*sink, o.report);
  }
}

void add_flow_options(CLI::App* app, RunConfig& c, std::string& params, std::string& matrix,
                      std::string& matrix_file, std::string& flow, std::string& flow_file) {
  app->add_option("--case", c.flow_case, "case tag a1..c5");
  app->add_option("--params", params, "parameters as key=value,...");
  app->add_option("--matrix", matrix, "generator, 16 numbers row-major");
  app->add_option("--matrix-file", matrix_file, "JSON file {\"matrix\":[[...]]}");
  app->add_option("--flow", flow, "JSON {\"case\":..,\"params\":{..}} or {\"matrix\":..}");
  app->add_option("--flow-file", flow_file, "file holding --flow JSON");
}

void apply_flow_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw UsageError("flow JSON must be an object");
  if (j.contains("matrix")) {
    const Mat4 m = io::matrix_from_json(j);
    c.matrix = std::vector<double>(m.data(), m.data() + 16);
    // Eigen is column-major; store row-major.
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) (*c.matrix)[4 * i + k] = m(i, k);
    return;
  }
  const OneParamFlow f = io::flow_from_json(j);
  c.flow_case = std::string(to_string(f.kind()));
  c.params.clear();
  for (const auto& name : parameter_names(f.kind())) c.params[name] = f.params().get(name);
}

}  // namespace

Tolerances tolerances_from_environment() {
  Tolerances t = kDefaultTolerances;
  t.representation = env_or("PG3_TOL_REPRESENTATION", t.representation);
  t.residual = env_or("PG3_TOL_RESIDUAL", t.residual);
  t.decision = env_or("PG3_TOL_DECISION", t.decision);
  return t;
}

json to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"target", c.target},
            {"case", c.flow_case},
            {"params", c.params},
            {"tolerances",
             {{"representation", c.tolerances.representation},
              {"residual", c.tolerances.residual},
              {"decision", c.tolerances.decision}}},
            {"classify_tol", c.classify_tol},
            {"limit_tol", c.limit_tol},
            {"schedule", {{"kind", c.schedule}, {"t0", c.t0}, {"ratio", c.ratio}, {"steps", c.steps}, {"backward", c.backward}}},
            {"samples", c.samples},
            {"seed", c.seed},
            {"grid", c.grid},
            {"n_max", c.n_max},
            {"witness", c.witness},
            {"format", c.format},
            {"output", c.output},
            {"trace_file", c.trace_file}};
  j["matrix"] = c.matrix ? json(*c.matrix) : json(nullptr);
  j["point"] = c.point ? json(*c.point) : json(nullptr);
  j["line"] = c.line ? json(*c.line) : json(nullptr);
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error("run configuration must be a JSON object");
  RunConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("command", c.command);
    get("target", c.target);
    get("case", c.flow_case);
    get("params", c.params);
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      if (t.contains("representation")) t.at("representation").get_to(c.tolerances.representation);
      if (t.contains("residual")) t.at("residual").get_to(c.tolerances.residual);
      if (t.contains("decision")) t.at("decision").get_to(c.tolerances.decision);
    }
    get("classify_tol", c.classify_tol);
    get("limit_tol", c.limit_tol);
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      if (s.contains("kind")) s.at("kind").get_to(c.schedule);
      if (s.contains("t0")) s.at("t0").get_to(c.t0);
      if (s.contains("ratio")) s.at("ratio").get_to(c.ratio);
      if (s.contains("steps")) s.at("steps").get_to(c.steps);
      if (s.contains("backward")) s.at("backward").get_to(c.backward);
    }
    get("samples", c.samples);
    get("seed", c.seed);
    get("grid", c.grid);
    get("n_max", c.n_max);
    get("witness", c.witness);
    get("format", c.format);
    get("output", c.output);
    get("trace_file", c.trace_file);
    for (auto [key, field] : {std::pair{"matrix", &c.matrix}, std::pair{"point", &c.point}, std::pair{"line", &c.line}})
      if (j.contains(key) && !j.at(key).is_null()) *field = j.at(key).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(std::string("run configuration: ") + e.what());
  }
  return c;
}

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string params, matrix, matrix_file, flow, flow_file, point, line, config_file;
  bool print_config = false;

  CLI::App app{"pg3: lines of real projective 3-space under one-parameter groups"};
  app.name("pg3");
  app.set_help_all_flag("--help-all", "help for all subcommands");
  app.add_option("--config", config_file, "run configuration JSON (replaces the command line)");
  app.add_flag("--print-config", print_config, "print the parsed run configuration and exit");
  app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--output", c.output, "report path (default stdout)");
  app.add_option("--tol", c.limit_tol, "limit / fixed-line tolerance")->capture_default_str();
  app.add_option("--classify-tol", c.classify_tol, "eigenvalue clustering tolerance")->capture_default_str();
  app.fallthrough();

  auto* classify = app.add_subcommand("classify", "classify a 4x4 generator");
  add_flow_options(classify, c, params, matrix, matrix_file, flow, flow_file);

  auto* replay = app.add_subcommand("replay", "replay the dynamics behind one case");
  replay->add_option("target", c.target, "a1 | c1 | c1-lemma | c3 | c4 | c5 | discrete")
      ->required()
      ->check(CLI::IsMember({"a1", "c1", "c1-lemma", "c3", "c4", "c5", "discrete"}));
  add_flow_options(replay, c, params, matrix, matrix_file, flow, flow_file);
  replay->add_option("--samples", c.samples, "samples or sequences")->capture_default_str();
  replay->add_option("--seed", c.seed, "random seed")->capture_default_str();
  replay->add_option("--grid", c.grid, "census grid resolution")->capture_default_str();
  replay->add_option("--n-max", c.n_max, "largest n for the c1 replays")->capture_default_str();
  replay->add_option("--trace-file", c.trace_file, "write the CSV trace here as well");

  auto* clifford = app.add_subcommand("clifford", "Clifford parallelism");
  clifford->require_subcommand(1);
  auto* parallel = clifford->add_subcommand("parallel", "left Clifford parallel of a line through a point");
  parallel->add_option("--point", point, "4 homogeneous coordinates")->required();
  parallel->add_option("--line", line, "two points (8 numbers) or Pluecker coordinates (6)")->required();

  auto* audit = app.add_subcommand("audit", "sampled audits");
  audit->require_subcommand(1);
  auto* spread = audit->add_subcommand("spread", "spread and dual-spread audit of a parallelism witness");
  spread->add_option("--samples", c.samples, "samples")->capture_default_str();
  spread->add_option("--seed", c.seed, "random seed")->capture_default_str();
  spread->add_option("--witness", c.witness, "clifford or sheared")->capture_default_str();

  auto* limits = app.add_subcommand("limits", "orbit limit of a point or line");
  add_flow_options(limits, c, params, matrix, matrix_file, flow, flow_file);
  limits->add_option("--point", point, "4 homogeneous coordinates");
  limits->add_option("--line", line, "two points (8 numbers) or Pluecker coordinates (6)");
  limits->add_option("--schedule", c.schedule, "geometric or discrete")->capture_default_str();
  limits->add_option("--t0", c.t0, "first time / time step")->capture_default_str();
  limits->add_option("--ratio", c.ratio, "geometric ratio")->capture_default_str();
  limits->add_option("--steps", c.steps, "schedule length")->capture_default_str();
  limits->add_flag("--backward", c.backward, "run the flow backwards");

  auto* fixed = app.add_subcommand("fixed-lines", "lines fixed by the whole flow");
  add_flow_options(fixed, c, params, matrix, matrix_file, flow, flow_file);

  try {
    c.tolerances = tolerances_from_environment();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (!config_file.empty()) {
      c = config_from_json(read_json_file(config_file));
    } else {
      if (classify->parsed()) c.command = "classify";
      else if (replay->parsed()) c.command = "replay";
      else if (parallel->parsed()) c.command = "clifford-parallel";
      else if (spread->parsed()) c.command = "audit-spread";
      else if (limits->parsed()) c.command = "limits";
      else if (fixed->parsed()) c.command = "fixed-lines";
      else throw UsageError("a subcommand is required; see --help");

      if (!params.empty()) c.params = parse_params(params);
      if (!matrix.empty()) c.matrix = parse_numbers(matrix, "--matrix");
      if (!matrix_file.empty()) apply_flow_json(c, read_json_file(matrix_file));
      if (!flow.empty()) apply_flow_json(c, parse_json_text(flow, "--flow"));
      if (!flow_file.empty()) apply_flow_json(c, read_json_file(flow_file));
      if (!point.empty()) c.point = parse_numbers(point, "--point");
      if (!line.empty()) c.line = parse_numbers(line, "--line");
    }
    if (print_config) {
      out << to_json(c).dump(2) << '\n';
      return kPass;
    }
    Outcome o = run(c);
    emit(c, o, out);
    return o.code;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const PreconditionError& e) {
    err << "precondition: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidFlow& e) {
    err << "invalid flow: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidSchedule& e) {
    err << "invalid schedule: " << e.what() << '\n';
    return kUsageError;
  } catch (const json::exception& e) {
    err << "malformed JSON: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace pg3::cli
