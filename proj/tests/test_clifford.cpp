#include "pg3/clifford.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>

using namespace pg3;

namespace {

Eigen::Quaterniond eq(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
Vec4 ev(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

// Parallel through <w> computed from an arbitrary basis (u, v) of the line.
Line oracle_parallel(const Vec4& w, const Vec4& u, const Vec4& v) {
  const Eigen::Quaterniond qw = eq(w), qu = eq(u), qv = eq(v);
  return Line::span(w, ev(qw * qu.inverse() * qv));
}

Quaternion random_unit(Rng& rng) {
  return Quaternion::from(sample_point(rng).coords());
}

}  // namespace

TEST_CASE("Hamilton relations") {
  const Quaternion i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
  CHECK(((i * j).vec() - k.vec()).norm() == 0);
  CHECK(((j * k).vec() - i.vec()).norm() == 0);
  CHECK(((i * i).vec() - Vec4(-1, 0, 0, 0)).norm() == 0);
  CHECK(((j * i).vec() + k.vec()).norm() == 0);
  CHECK_THROWS_AS(Quaternion{}.inverse(), ZeroDivisor);
}

TEST_CASE("quaternion products agree with Eigen") {
  Rng rng(1);
  std::normal_distribution<double> n;
  double worst_inv = 0, worst_norm = 0, worst_eigen = 0;
  for (int t = 0; t < 1000; ++t) {
    const Quaternion a{n(rng), n(rng), n(rng), n(rng)}, b{n(rng), n(rng), n(rng), n(rng)};
    worst_inv = std::max(worst_inv, ((a * a.inverse()).vec() - Vec4(1, 0, 0, 0)).norm());
    worst_norm = std::max(worst_norm, std::abs((a * b).norm() - a.norm() * b.norm()));
    worst_eigen = std::max(worst_eigen, ((a * b).vec() - ev(eq(a.vec()) * eq(b.vec()))).norm());
  }
  CHECK(worst_inv <= 1e-12);
  CHECK(worst_norm <= 1e-10);
  CHECK(worst_eigen <= 1e-12);
}

TEST_CASE("worked parallels") {
  CHECK(grassmann_distance(clifford_parallel(ProjPoint::basis(0), Line::coordinate(0, 1)), Line::coordinate(0, 1)) <=
        1e-12);
  CHECK(grassmann_distance(clifford_parallel(ProjPoint::basis(2), Line::coordinate(0, 1)), Line::coordinate(2, 3)) <=
        1e-12);
  CHECK(grassmann_distance(clifford_parallel(ProjPoint::basis(0), Line::coordinate(2, 3)), Line::coordinate(0, 1)) <=
        1e-12);
  CHECK(is_clifford_parallel(Line::coordinate(0, 1), Line::coordinate(2, 3)));
  CHECK_FALSE(is_clifford_parallel(Line::coordinate(0, 1), Line::coordinate(0, 2)));
}

TEST_CASE("parallel is independent of the basis") {
  Rng rng(2);
  std::normal_distribution<double> n;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Line l = sample_line(rng);
    const ProjPoint p = sample_point(rng);
    const Eigen::Matrix2d c{{n(rng), n(rng)}, {n(rng), n(rng)}};
    const Vec4 u = l.frame() * c.col(0), v = l.frame() * c.col(1);
    const Line m = clifford_parallel(p, l);
    worst = std::max(worst, grassmann_distance(m, oracle_parallel(p.coords(), u, v)));
    worst = std::max(worst, grassmann_distance(m, oracle_parallel(p.coords(), v, u)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("containment, uniqueness and idempotence") {
  Rng rng(3);
  const auto pi = clifford_witness();
  for (int t = 0; t < 1000; ++t) {
    const Line l = sample_line(rng);
    const ProjPoint p = sample_point(rng);
    const Line m = pi(p, l);
    CHECK(incidence_residual(p, m) <= 1e-9);
    CHECK(grassmann_distance(pi(p, m), m) <= 1e-9);
    const ProjPoint m1 = sample_point_on(m, rng), m2 = sample_point_on(m, rng);
    CHECK(grassmann_distance(pi(m1, l), pi(m2, l)) <= 1e-9);
    const ProjPoint on = sample_point_on(l, rng);
    CHECK(grassmann_distance(pi(on, l), l) <= 1e-9);
  }
}

TEST_CASE("parallelism is an equivalence relation inside one class") {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const Line l = sample_line(rng);
    const Line m = clifford_parallel(sample_point(rng), l);
    const Line k = clifford_parallel(sample_point(rng), l);
    CHECK(is_clifford_parallel(l, l));
    CHECK(is_clifford_parallel(l, m));
    CHECK(is_clifford_parallel(m, l));
    CHECK(is_clifford_parallel(m, k));
  }
}

TEST_CASE("distinct parallels are disjoint") {
  Rng rng(5);
  double min_omega = 1.0;
  for (int t = 0; t < 10000; ++t) {
    const Line l = sample_line(rng);
    const Line m = clifford_parallel(sample_point(rng), l);
    if (grassmann_distance(l, m) < 1e-6) continue;
    CHECK(lines_meet(l, m).kind == Relation::Disjoint);
    min_omega = std::min(min_omega, std::abs(omega(l, m)) / grassmann_distance(l, m));
  }
  CHECK(min_omega > 1e-6);
}

TEST_CASE("left multiplication preserves classes") {
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    const Line l = sample_line(rng);
    const Quaternion q = random_unit(rng);
    const Line ql = Line::span((q * Quaternion::from(l.frame().col(0))).vec(),
                               (q * Quaternion::from(l.frame().col(1))).vec());
    CHECK(is_clifford_parallel(l, ql));
  }
}

TEST_CASE("equivariance under block rotations") {
  Rng rng(7);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const Mat4 g = left_right_multiplication(random_unit(rng), random_unit(rng));
    CHECK((g.transpose() * g - Mat4::Identity()).norm() <= 1e-12);
    CHECK(g.determinant() == doctest::Approx(1.0));
    const ProjMap map = ProjMap::from(g);
    for (int s = 0; s < 20; ++s) {
      const Line l = sample_line(rng);
      const ProjPoint p = sample_point(rng);
      const Line lhs = clifford_parallel(apply(map, p), apply_to_line(map, l));
      worst = std::max(worst, grassmann_distance(lhs, apply_to_line(map, clifford_parallel(p, l))));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("pencil transfer") {
  Rng rng(8);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const ProjPoint p = sample_point(rng), q = sample_point(rng);
    const Line l = join_points(p, sample_point(rng));
    const Line there = transfer(p, q, l);
    CHECK(incidence_residual(q, there) <= 1e-9);
    worst = std::max(worst, grassmann_distance(transfer(q, p, there), l));
    CHECK(grassmann_distance(transfer(p, p, l), l) <= 1e-9);
  }
  CHECK(worst <= 1e-9);
  CHECK_THROWS_AS(transfer(ProjPoint::basis(2), ProjPoint::basis(0), Line::coordinate(0, 1)), NotInPencil);

  const ProjPoint p = ProjPoint::from(Vec4(1, 2, 0, -1));
  const Line l = join_points(p, ProjPoint::from(Vec4(0, 1, 1, 3)));
  const double lip = transfer_lipschitz(clifford_witness(), p, ProjPoint::from(Vec4(2, 0, 1, 1)), l, 1e-4, 50, 9);
  CHECK(lip > 0);
  CHECK(lip < 10);
}

TEST_CASE("parallel class sampling") {
  const Line l = sample_line(std::uint64_t{10});
  const auto members = sample_parallel_class(l, 200);
  REQUIRE(members.size() == 200);
  for (const Line& m : members) CHECK(is_clifford_parallel(l, m));
  double spread = 0;
  for (const Line& m : members) spread = std::max(spread, grassmann_distance(m, l));
  CHECK(spread > 1.0);
}

TEST_CASE("Clifford spread audit is clean") {
  const AuditReport r = spread_audit(clifford_witness(), 2000, 7);
  CHECK(r.violations.empty());
  CHECK(r.samples == 2000);
  CHECK(r.min_disjoint_omega > 1e-6);
  for (const char* key : {"containment", "idempotence", "uniqueness", "disjointness", "dual_spread"}) {
    REQUIRE(r.max_residuals.count(key) == 1);
    CHECK(r.max_residuals.at(key) <= 1e-8);
  }
}

TEST_CASE("sheared witness is caught") {
  Mat4 shear = Mat4::Identity();
  shear(0, 1) = 0.25;
  const AuditReport r = spread_audit(sheared_witness(clifford_witness(), shear), 500, 7);
  REQUIRE(r.count("disjointness") >= 1);
  for (const Violation& v : r.violations) {
    if (v.kind != "disjointness") continue;
    CHECK(v.residual > 1e-8);
    CHECK_FALSE(v.lines.empty());
  }
}

TEST_CASE("audits merge associatively") {
  const auto w = clifford_witness();
  const AuditReport a = spread_audit(w, 50, 1), b = spread_audit(w, 60, 2), c = spread_audit(w, 70, 3);
  const AuditReport left = merge(merge(a, b), c), right = merge(a, merge(b, c)), swapped = merge(c, merge(b, a));
  CHECK(left.samples == 180);
  CHECK(left.max_residuals == right.max_residuals);
  CHECK(left.max_residuals == swapped.max_residuals);
  CHECK(left.min_disjoint_omega == swapped.min_disjoint_omega);
}

TEST_CASE("dual spread member in a hyperplane") {
  Rng rng(11);
  const auto w = clifford_witness();
  for (int t = 0; t < 100; ++t) {
    const Line l = sample_line(rng);
    const Hyperplane h = Hyperplane::from(sample_point(rng).coords());
    const Vec4 a = h.covector();
    const Line s = sample_line(rng);
    const Line search = Line::span(s.frame().col(0) - a.dot(s.frame().col(0)) * a,
                                   s.frame().col(1) - a.dot(s.frame().col(1)) * a);
    const auto member = class_member_in_hyperplane(w, l, h, search);
    REQUIRE(member.has_value());
    CHECK(containment_residual(*member, h) <= 1e-8);
    CHECK(is_clifford_parallel(l, *member));
  }
}
