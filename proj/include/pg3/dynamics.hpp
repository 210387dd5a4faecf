#pragma once

#include "pg3/clifford.hpp"
#include "pg3/flows.hpp"
#include "pg3/projective.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pg3 {

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class GenericityExhausted : public Error {
 public:
  explicit GenericityExhausted(std::uint64_t sample)
      : Error("100 consecutive resamples failed the genericity conditions at sample " + std::to_string(sample)) {}
};

enum class Direction { Forward, Backward };

struct Schedule {
  enum class Kind { Geometric, Discrete };

  Kind kind = Kind::Geometric;
  double t0 = 0.5;
  double ratio = 1.3;  // Geometric only
  int steps = 40;
  Direction direction = Direction::Forward;

  static Schedule geometric(double t0, double ratio, int steps, Direction dir = Direction::Forward);
  static Schedule discrete(double t0, int steps, Direction dir = Direction::Forward);

  /// Throws InvalidSchedule unless t0 > 0, ratio > 1 (geometric) and steps >= 2.
  void validate() const;
  /// Signed sample times: t0 * ratio^k or n * t0, negated for Backward.
  std::vector<double> times() const;
};

Schedule default_geometric_schedule();
/// Discrete(2 pi / a, 200); throws PreconditionError for flows without a rotation block.
Schedule default_discrete_schedule(const OneParamFlow& flow);

/// Moves lines and points along a flow in steps whose matrices stay below a
/// condition-number bound; frames are re-orthonormalized after every substep.
class OrbitStepper {
 public:
  explicit OrbitStepper(OneParamFlow flow, double max_condition = kMaxFrameCondition);

  const OneParamFlow& flow() const { return flow_; }
  /// Largest |h| with cond(gamma_h) <= max_condition (capped at 1e6).
  double max_step() const { return max_step_; }

  Line advance(const Line& l, double dt) const;
  ProjPoint advance(const ProjPoint& p, double dt) const;

  std::vector<Line> orbit(const Line& l, const std::vector<double>& times) const;
  std::vector<ProjPoint> orbit(const ProjPoint& p, const std::vector<double>& times) const;

 private:
  template <typename Object>
  Object advance_impl(const Object& x, double dt) const;

  OneParamFlow flow_;
  double max_condition_;
  double max_step_;
};

using GeometricObject = std::variant<ProjPoint, Line>;

double object_distance(const GeometricObject& a, const GeometricObject& b);

struct OrbitLimitReport {
  std::optional<GeometricObject> limit;
  bool converged = false;
  std::vector<std::pair<double, double>> trace;  // (t, distance to the final iterate)
  std::map<std::string, double> final_residuals;
};

OrbitLimitReport line_orbit_limit(const OneParamFlow& flow, const Line& l, const Schedule& schedule,
                                  double tol = 1e-8);
OrbitLimitReport point_orbit_limit(const OneParamFlow& flow, const ProjPoint& p, const Schedule& schedule,
                                   double tol = 1e-8);

struct AccumulationCluster {
  Line line;
  std::size_t weight = 0;
};

/// Greedy clustering of the last half of the orbit. Requires >= 50 steps.
std::vector<AccumulationCluster> accumulation_lines(const OneParamFlow& flow, const Line& l,
                                                    const Schedule& schedule, double cluster_tol = 1e-3);

/// Value at h = 0 of a line-valued sequence sampled at nodes h_k, by Neville
/// interpolation of Pluecker coordinates scaled to a fixed dominant entry.
struct LineExtrapolation {
  Line limit;
  double error_estimate = 0.0;
};

LineExtrapolation extrapolate_line_limit(const std::vector<double>& h, const std::vector<Line>& lines);

/// point-line: distance of the point from the line; line-line: |omega|;
/// point-point: chordal distance.
double incidence_between(const GeometricObject& a, const GeometricObject& b);

struct Incidence {
  std::string name;
  GeometricObject first = ProjPoint::basis(0);
  GeometricObject second = ProjPoint::basis(0);
  double residual = 0.0;
};

struct Certificate {
  std::string label_a;
  std::string label_b;
  GeometricObject limit_a = ProjPoint::basis(0);
  GeometricObject limit_b = ProjPoint::basis(0);
  double distance = 0.0;
  std::vector<Incidence> incidences;
};

/// Recomputes distance and the incidence residuals from the two limit objects.
Certificate recheck(const Certificate& c);

struct TraceRow {
  std::uint64_t sample = 0;
  std::string series;
  double t = 0.0;
  double distance = 0.0;
};

struct CaseReplayReport {
  std::string case_id;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  std::uint64_t passes = 0;
  std::uint64_t rejects = 0;
  std::vector<bool> verdicts;
  std::map<std::string, double> max_residuals;
  std::map<std::string, double> tolerances;
  std::map<std::string, bool> checks;
  std::optional<Certificate> certificate;
  std::vector<std::string> notes;
  std::vector<TraceRow> trace;

  /// All samples passed and every aggregate check holds.
  bool passed() const;
  void record_residual(const std::string& key, double value);
};

struct ReplayA1Options {
  Schedule h_schedule = Schedule::geometric(0.5, 1.3, 40);
  Schedule m_schedule = Schedule::geometric(0.5, 1.1, 120);
  double limit_tol = 1e-6;
  double gap = 0.05;
  double cluster_tol = 1e-3;
};

CaseReplayReport replay_a1(const FlowParams& params, std::uint64_t samples, std::uint64_t seed,
                           const ReplayA1Options& options = {});

/// Lemma on continuous convergence for the single nilpotent block.
CaseReplayReport replay_lemma_c1(int n_max, std::uint64_t sequences = 20, std::uint64_t seed = 7);
CaseReplayReport replay_c1(int n_max);
CaseReplayReport replay_c3(double a, int grid);
CaseReplayReport replay_c4(const FlowParams& params, int grid = 101);

struct ReplayC5Options {
  Schedule schedule = Schedule::geometric(0.5, 1.3, 40);
  Schedule discrete = Schedule::discrete(1.0, 60);
  double limit_tol = 1e-6;
  double drift_tol = 1e-8;
  double gap = 0.1;
};

CaseReplayReport replay_c5(const FlowParams& params, std::uint64_t samples, std::uint64_t seed,
                           const ReplayC5Options& options = {});

/// Discrete-time reduction gamma_{t0}, t0 = 2 pi / a, for a1 (a = c), a2, b1, b2.
CaseReplayReport replay_discrete(JordanCase kind, const FlowParams& params, int grid = 101);

struct RankReport {
  int rank = 0;
  std::vector<double> singular_values;  // of the column-normalized 4x3 matrix
  int nonzero_coordinates = 0;
  bool consistent = false;  // rank 3 for >= 3 nonzero coordinates, <= 2 otherwise
};

RankReport vandermonde_rank_check(const Vec4& x, const OneParamFlow& flow, double t);

}  // namespace pg3
