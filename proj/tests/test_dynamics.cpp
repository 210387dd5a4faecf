#include "pg3/dynamics.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <numbers>

using namespace pg3;

namespace {

const Line kK = Line::coordinate(0, 1);
const Line kL = Line::coordinate(2, 3);

double line_distance(const OrbitLimitReport& r, const Line& expected) {
  REQUIRE(r.limit.has_value());
  return grassmann_distance(std::get<Line>(*r.limit), expected);
}

double point_distance(const OrbitLimitReport& r, const ProjPoint& expected) {
  REQUIRE(r.limit.has_value());
  return chordal_distance(std::get<ProjPoint>(*r.limit), expected);
}

Line line_disjoint_from(const Line& k, Rng& rng) {
  for (;;) {
    const Line h = sample_line(rng);
    if (std::abs(omega(h, k)) >= 1e-2) return h;
  }
}

}  // namespace

TEST_CASE("schedules") {
  const auto g = Schedule::geometric(0.5, 2.0, 4).times();
  CHECK(g == std::vector<double>{0.5, 1.0, 2.0, 4.0});
  const auto d = Schedule::discrete(1.5, 3, Direction::Backward).times();
  CHECK(d == std::vector<double>{-1.5, -3.0, -4.5});
  CHECK_THROWS_AS(Schedule::geometric(0.0, 2.0, 4), InvalidSchedule);
  CHECK_THROWS_AS(Schedule::geometric(1.0, 1.0, 4), InvalidSchedule);
  CHECK_THROWS_AS(Schedule::discrete(1.0, 1), InvalidSchedule);

  const auto def = default_geometric_schedule();
  CHECK(def.t0 == 0.5);
  CHECK(def.ratio == 1.3);
  CHECK(def.steps == 40);
  const OneParamFlow a1(JordanCase::A1, {2, 1, 3, 0});
  const auto disc = default_discrete_schedule(a1);
  CHECK(disc.t0 == doctest::Approx(std::numbers::pi));
  CHECK(disc.steps == 200);
  CHECK_THROWS_AS(default_discrete_schedule(OneParamFlow(JordanCase::C1, {})), PreconditionError);
}

TEST_CASE("stepped orbits agree with direct evaluation") {
  Rng rng(1);
  for (JordanCase c : {JordanCase::A1, JordanCase::C1, JordanCase::C3, JordanCase::C5}) {
    CAPTURE(to_string(c));
    FlowParams p{1, 1, 2, 3};
    if (c == JordanCase::C5) p = {0, 1, 2, 3};
    const OneParamFlow flow(c, p);
    const OrbitStepper stepper(flow, 1e3);
    CHECK(stepper.max_step() > 0);
    for (int k = 0; k < 50; ++k) {
      const Line l = sample_line(rng);
      for (double t : {0.3, 1.7, 4.0, -2.5}) {
        Line direct = l;
        try {
          direct = apply_to_line(flow.gamma(t), l, 1e8);
        } catch (const ConditioningLoss&) {
          continue;
        }
        CHECK(grassmann_distance(stepper.advance(l, t), direct) <= 1e-8);
      }
    }
  }
}

TEST_CASE("stepping survives overflow-scale times") {
  const OneParamFlow flow(JordanCase::C5, {0, 1, 2, 3});
  const OrbitStepper stepper(flow);
  const Line l = Line::span(Vec4(1, 0, 1, 0), Vec4(0, 1, 0, 1));
  CHECK_THROWS_AS(apply_to_line(flow.gamma(800.0), l), Error);
  CHECK(grassmann_distance(stepper.advance(l, 800.0), kL) <= 1e-12);
  const Line k = Line::coordinate(1, 3);
  CHECK(grassmann_distance(stepper.advance(k, 800.0), k) <= 1e-12);
}

TEST_CASE("line limits") {
  const OneParamFlow a1(JordanCase::A1, {1, 1, 2, 0});
  Rng rng(2);
  for (int k = 0; k < 10; ++k) {
    const auto r = line_orbit_limit(a1, line_disjoint_from(kK, rng), default_geometric_schedule());
    CHECK(r.converged);
    CHECK(line_distance(r, kL) <= 1e-6);
  }

  const OneParamFlow c5(JordanCase::C5, {0, 1, 2, 3});
  const auto r = line_orbit_limit(c5, Line::span(Vec4(1, 0, 1, 0), Vec4(0, 1, 0, 1)), default_geometric_schedule());
  CHECK(r.converged);
  CHECK(line_distance(r, kL) <= 1e-6);
  CHECK(r.trace.size() == 40);

  for (const Line& fixed : fixed_lines(c5).lines) {
    const auto f = line_orbit_limit(c5, fixed, default_geometric_schedule());
    CHECK(f.converged);
    CHECK(line_distance(f, fixed) <= 1e-10);
  }
}

TEST_CASE("rotating orbits do not converge") {
  const OneParamFlow a1(JordanCase::A1, {1, 1, 2, 0});
  const Line m = Line::span(Vec4(1, 0, 0, 0), Vec4(0, 1, 1, 0.5));
  const auto r = line_orbit_limit(a1, m, Schedule::geometric(0.5, 1.1, 80));
  CHECK_FALSE(r.converged);
}

TEST_CASE("nilpotent flow contracts to e1 in both directions") {
  const OneParamFlow c1(JordanCase::C1, {});
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const ProjPoint x = sample_point(rng);
    const auto fwd = point_orbit_limit(c1, x, Schedule::geometric(0.5, 1.3, 60), 1e-5);
    const auto bwd = point_orbit_limit(c1, x, Schedule::geometric(0.5, 1.3, 60, Direction::Backward), 1e-5);
    CHECK(fwd.converged);
    CHECK(bwd.converged);
    CHECK(point_distance(fwd, ProjPoint::basis(0)) <= 1e-5);
    CHECK(point_distance(bwd, ProjPoint::basis(0)) <= 1e-5);
  }
}

TEST_CASE("accumulation lines") {
  const OneParamFlow a1(JordanCase::A1, {1, 1, 2, 0});
  Rng rng(4);
  const auto single = accumulation_lines(a1, line_disjoint_from(kK, rng), Schedule::geometric(0.5, 1.1, 120));
  REQUIRE(single.size() == 1);
  CHECK(grassmann_distance(single[0].line, kL) <= 1e-3);

  const Line m = Line::span(Vec4(1, 0.3, 0, 0), Vec4(0.2, 0.1, 1, 0.5));
  REQUIRE(lines_meet(m, kK).kind == Relation::Meet);
  const auto clusters = accumulation_lines(a1, m, Schedule::geometric(0.5, 1.1, 120));
  CHECK(clusters.size() > 1);
  for (const auto& c : clusters) {
    CHECK(std::abs(omega(c.line, kK)) <= 1e-6);
    CHECK(std::abs(omega(c.line, kL)) <= 1e-6);
    CHECK(grassmann_distance(c.line, kL) >= 0.05);
  }

  const auto frozen = accumulation_lines(a1, m, default_discrete_schedule(a1));
  CHECK(frozen.size() == 1);
  CHECK_THROWS_AS(accumulation_lines(a1, m, Schedule::geometric(0.5, 1.1, 40)), InvalidSchedule);
}

TEST_CASE("accumulation sets are stable under longer schedules") {
  const OneParamFlow a1(JordanCase::A1, {1, 1, 2, 0});
  const Line m = Line::span(Vec4(1, 0.3, 0, 0), Vec4(0.2, 0.1, 1, 0.5));
  // Quarter turns: the point on K cycles through two classes.
  const double step = std::numbers::pi / 2;
  const auto base = accumulation_lines(a1, m, Schedule::discrete(step, 400));
  const auto longer = accumulation_lines(a1, m, Schedule::discrete(step, 800));
  CHECK(base.size() == 2);
  auto covered = [](const std::vector<AccumulationCluster>& from, const std::vector<AccumulationCluster>& by) {
    for (const auto& c : from) {
      bool hit = false;
      for (const auto& d : by) hit = hit || grassmann_distance(c.line, d.line) <= 1e-3;
      if (!hit) return false;
    }
    return true;
  };
  CHECK(covered(base, longer));
  CHECK(covered(longer, base));
}

TEST_CASE("line extrapolation") {
  std::vector<double> h;
  std::vector<Line> lines;
  for (int n = 1024; n >= 8; n /= 2) {
    const double s = 1.0 / n;
    h.push_back(s);
    lines.push_back(Line::span(Vec4(1, 0, s, 0), Vec4(0, 1, 0, 3 * s + s * s)));
  }
  const auto ex = extrapolate_line_limit(h, lines);
  CHECK(grassmann_distance(ex.limit, kK) <= 1e-12);
  CHECK(ex.error_estimate <= 1e-10);
  CHECK(grassmann_distance(lines.front(), kK) > 1e-3);
}

TEST_CASE("object distances and incidences") {
  const GeometricObject p = ProjPoint::basis(0);
  const GeometricObject q = ProjPoint::basis(2);
  const GeometricObject l = kK;
  CHECK(object_distance(p, p) == 0);
  CHECK(object_distance(p, q) == doctest::Approx(1.0));
  CHECK(incidence_between(p, l) <= 1e-15);
  CHECK(incidence_between(q, l) == doctest::Approx(1.0));
  CHECK(incidence_between(l, GeometricObject{kL}) == doctest::Approx(1.0));
}

TEST_CASE("a1 replay") {
  const auto rep = replay_a1({1, 1, 2, 0}, 5, 7);
  CHECK(rep.passed());
  CHECK(rep.passes == 5);
  CHECK(rep.max_residuals.at("h_limit") <= 1e-6);
  CHECK(rep.max_residuals.at("accumulation_meets_k") <= 1e-6);
  CHECK(rep.max_residuals.at("accumulation_meets_l") <= 1e-6);
  CHECK(rep.max_residuals.at("min_accumulation_gap") >= 0.05);
  REQUIRE(rep.certificate.has_value());
  const Certificate again = recheck(*rep.certificate);
  CHECK(again.distance >= 0.05);
  for (const auto& inc : again.incidences) CHECK(inc.residual <= 1e-6);

  CHECK_THROWS_AS(replay_a1({1, 0, 2, 0}, 1, 7), PreconditionError);
  CHECK_THROWS_AS(replay_a1({1, -1, 2, 0}, 1, 7), PreconditionError);
  CHECK_THROWS_AS(replay_a1({1, 1, 1, 0}, 1, 7), PreconditionError);
}

TEST_CASE("a1 replay is deterministic") {
  const auto a = replay_a1({1, 1, 2, 0}, 3, 11), b = replay_a1({1, 1, 2, 0}, 3, 11);
  CHECK(a.max_residuals == b.max_residuals);
  CHECK(a.verdicts == b.verdicts);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].distance == b.trace[i].distance);
}

TEST_CASE("continuity lemma") {
  const auto rep = replay_lemma_c1(1000, 5, 7);
  CHECK(rep.passes == 5);
  CHECK(rep.max_residuals.at("formula_vs_direct") <= 1e-8);
  // <e1, (0, 1, 2/n, 2/n^2)> is at distance ~ 2/n from <e1, e2>.
  CHECK(rep.max_residuals.at("b_terminal") * 1000 == doctest::Approx(2.0).epsilon(0.05));
  CHECK_FALSE(rep.checks.at("b_terminal_within_tolerance"));
  CHECK_THROWS_AS(replay_lemma_c1(5), PreconditionError);
}

TEST_CASE("nilpotent replay") {
  const auto rep = replay_c1(1000);
  CHECK(rep.passed());
  CHECK(rep.max_residuals.at("K_limit") <= 1e-6);
  CHECK(rep.max_residuals.at("M_limit") <= 1e-6);
  REQUIRE(rep.certificate.has_value());
  CHECK(rep.certificate->distance >= 0.1);
  CHECK(grassmann_distance(std::get<Line>(rep.certificate->limit_a), Line::coordinate(0, 2)) <= 1e-6);
  CHECK(grassmann_distance(std::get<Line>(rep.certificate->limit_b), Line::coordinate(0, 1)) <= 1e-6);
}

TEST_CASE("plane census replays") {
  for (double a : {1.0, -0.5}) {
    const auto rep = replay_c3(a, 51);
    CAPTURE(a);
    CHECK(rep.passed());
  }
  CHECK_THROWS_AS(replay_c3(0.0, 101), PreconditionError);
  CHECK_THROWS_AS(replay_c3(1.0, 11), PreconditionError);
  for (const FlowParams& p : {FlowParams{0, 1, 2, 0}, FlowParams{0, 0, 1, 0}, FlowParams{0, 1, 1, 0}}) {
    const auto rep = replay_c4(p, 51);
    CAPTURE(p.b);
    CAPTURE(p.c);
    CHECK(rep.passed());
  }
}

TEST_CASE("diagonal replay") {
  const auto rep = replay_c5({0, 1, 2, 3}, 5, 7);
  CHECK(rep.passed());
  CHECK(rep.max_residuals.at("K_drift") <= 1e-8);
  CHECK(rep.checks.at("discrete_variant"));
  REQUIRE(rep.certificate.has_value());
  CHECK(rep.certificate->distance >= 0.1);
}

TEST_CASE("discrete reductions") {
  CHECK(replay_discrete(JordanCase::A1, {1, 1, 1, 0}).passed());
  CHECK(replay_discrete(JordanCase::A2, {1, 0, 0, 0}).passed());
  CHECK(replay_discrete(JordanCase::B1, {1, 1, 2, 0}).passed());
  CHECK(replay_discrete(JordanCase::B2, {1, 1, 0, 0}, 51).passed());
  CHECK_THROWS_AS(replay_discrete(JordanCase::A1, {1, 1, 2, 0}), PreconditionError);
  CHECK_THROWS_AS(replay_discrete(JordanCase::C5, {0, 1, 2, 3}), PreconditionError);
}

TEST_CASE("Vandermonde rank") {
  const OneParamFlow flow(JordanCase::C5, {0, 1, 2, 3});
  // rows 2..4 of [x, g x, g^2 x] for x = (1,1,1,1) form a Vandermonde matrix
  const double x1 = std::exp(1.0), x2 = std::exp(2.0), x3 = std::exp(3.0);
  Mat3 v;
  v << 1, x1, x1 * x1, 1, x2, x2 * x2, 1, x3, x3 * x3;
  CHECK(v.determinant() == doctest::Approx((x2 - x1) * (x3 - x1) * (x3 - x2)));
  const RankReport full = vandermonde_rank_check(Vec4(1, 1, 1, 1), flow, 1.0);
  CHECK(full.nonzero_coordinates == 4);
  CHECK(full.singular_values.size() == 3);
  CHECK(vandermonde_rank_check(Vec4(1, 1, 1, 1), flow, 1.0).rank == 3);
  CHECK(vandermonde_rank_check(Vec4(1, 1, 0, 0), flow, 1.0).rank == 2);
  CHECK(vandermonde_rank_check(Vec4(0, 0, 1, 0), flow, 1.0).rank == 1);
  for (const Vec4& x : {Vec4(1, 1, 1, 1), Vec4(1, 1, 0, 0), Vec4(0, 0, 1, 0), Vec4(0, 2, -1, 3)})
    CHECK(vandermonde_rank_check(x, flow, 0.7).consistent);
}
