#include "pg3/census.hpp"
#include "pg3/flows.hpp"

#include <doctest.h>

#include <cmath>

using namespace pg3;

namespace {

// Limit predicted from which coordinate wins as t grows.
int dominant_limit_p(const Vec3& x) {
  if (x(0) != 0.0) return 0;
  if (x(2) != 0.0) return 1;
  return -1;
}

int dominant_limit_q(const Vec3& x) {
  if (x(1) != 0.0 || x(0) != 0.0) return 0;
  return -1;
}

}  // namespace

TEST_CASE("pencil action deletes one row and column") {
  Mat4 g;
  for (int i = 0; i < 16; ++i) g(i / 4, i % 4) = i;
  const Mat3 m = pencil_action(g, 2);
  Mat3 expected;
  expected << 0, 1, 3, 4, 5, 7, 12, 13, 15;
  CHECK(m == expected);
}

TEST_CASE("grid covers three faces with exact zeros") {
  const auto pts = plane_grid(5);
  CHECK(pts.size() == 75);
  int zeros = 0;
  for (const Vec3& x : pts) {
    CHECK(x.norm() == doctest::Approx(1.0));
    if (x(0) == 0.0) ++zeros;
  }
  // x = 1 on the first face.
  CHECK(zeros == 5 + 5);
}

TEST_CASE("census matches coordinate dominance") {
  const OneParamFlow flow(JordanCase::C3, {1, 0, 0, 0});
  const int grid = 41;
  CensusOptions opt;
  opt.horizon = 4.0 * (grid - 1);
  opt.substeps = static_cast<int>(std::ceil(opt.horizon / 50.0));
  const PlaneAction at_p = [&](double t) { return pencil_action(flow.scaled_matrix(t), 0); };
  const PlaneAction at_q = [&](double t) { return pencil_action(flow.scaled_matrix(t), 2); };

  std::size_t exceptional = 0, attracted_q = 0;
  for (const Vec3& x : plane_grid(grid)) {
    if (dominant_limit_p(x) == 1) ++exceptional;
    if (dominant_limit_q(x) == 0 && x.tail<2>().norm() > 0) ++attracted_q;
  }
  const PlaneCensus p = plane_census(at_p, grid, opt);
  const PlaneCensus q = plane_census(at_q, grid, opt);

  // Polynomial approach: residual about 1/horizon.
  const double slack = 2.0 / opt.horizon;
  REQUIRE(p.limits.size() == 2);
  CHECK(chordal_distance(p.limits[0].point, Vec3::UnitX()) <= slack);
  CHECK(chordal_distance(p.limits[1].point, Vec3::UnitY()) <= slack);
  CHECK(p.limits[1].count == exceptional);
  CHECK(p.limits[1].line_residual() <= 1e-12);
  CHECK_FALSE(p.limits[0].curve);

  REQUIRE(q.limits.size() == 1);
  CHECK(chordal_distance(q.limits[0].point, Vec3::UnitX()) <= slack);
  CHECK(q.limits[0].count == attracted_q);

  CHECK(p.fixed_points.size() == 2);
  CHECK(q.fixed_points.size() == 2);
  CHECK(p.fixed_curves == 0);
  CHECK(q.fixed_curves == 0);
  CHECK(p.fixed_samples + p.limits[0].count + p.limits[1].count == p.samples);
  CHECK(q.signature() != p.signature());
}

TEST_CASE("fixed curves are one component") {
  // Identity on the line z = 0, contraction toward e3 elsewhere.
  const PlaneAction act = [](double t) -> Mat3 {
    Mat3 m = Mat3::Identity();
    m(2, 2) = std::exp(t);
    return m / std::exp(t);
  };
  for (int grid : {21, 41}) {
    CensusOptions opt;
    opt.horizon = 60;
    opt.substeps = 2;
    const PlaneCensus c = plane_census(act, grid, opt);
    CHECK(c.fixed_points.size() == 2);
    CHECK(c.fixed_curves == 1);
    REQUIRE(c.limits.size() == 1);
    CHECK(chordal_distance(c.limits[0].point, Vec3::UnitZ()) <= 1e-9);
  }
}

TEST_CASE("a continuum of limits is one class") {
  // Every point moves to its projection on z = 0.
  const PlaneAction act = [](double t) {
    Mat3 m = Mat3::Identity();
    m(2, 2) = std::exp(-t);
    return m;
  };
  std::vector<std::size_t> signatures[2];
  int k = 0;
  for (int grid : {21, 41}) {
    CensusOptions opt;
    opt.horizon = 60;
    opt.substeps = 2;
    const PlaneCensus c = plane_census(act, grid, opt);
    REQUIRE(c.limits.size() == 1);
    CHECK(c.limits[0].curve);
    signatures[k++] = c.signature();
  }
  CHECK(signatures[0] == signatures[1]);
}

TEST_CASE("census arguments") {
  const PlaneAction id = [](double) { return Mat3::Identity(); };
  CHECK_THROWS_AS(plane_census(id, 1), Error);
  CensusOptions bad;
  bad.substeps = 0;
  CHECK_THROWS_AS(plane_census(id, 5, bad), Error);
  const PlaneCensus all_fixed = plane_census(id, 5);
  CHECK(all_fixed.limits.empty());
  CHECK(all_fixed.fixed_points.size() == 1);
  CHECK(all_fixed.fixed_curves == 1);
}
