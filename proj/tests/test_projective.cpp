#include "pg3/projective.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <utility>

using namespace pg3;

namespace {

constexpr std::array<std::pair<int, int>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {2, 3}, {3, 1}, {1, 2}}};

Vec6 minors(const Vec4& u, const Vec4& v) {
  Vec6 p;
  for (int a = 0; a < 6; ++a) {
    const auto [i, j] = kPairs[a];
    p(a) = u(i) * v(j) - u(j) * v(i);
  }
  return p;
}

// 6x6 compound matrix built entry by entry from 2x2 minors of g.
Mat6 compound(const Mat4& g) {
  Mat6 c;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const auto [i, j] = kPairs[a];
      const auto [k, l] = kPairs[b];
      c(a, b) = g(i, k) * g(j, l) - g(i, l) * g(j, k);
    }
  return c;
}

double sign_free_distance(Vec6 a, Vec6 b) {
  a.normalize();
  b.normalize();
  return std::min((a - b).norm(), (a + b).norm());
}

int numeric_rank(const Eigen::MatrixXd& m, double rel = 1e-9) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

Mat4 random_matrix(Rng& rng) {
  std::normal_distribution<double> n;
  Mat4 m;
  for (int i = 0; i < 16; ++i) m(i) = n(rng);
  return m;
}

Mat4 random_rotation(Rng& rng) {
  Eigen::HouseholderQR<Mat4> qr(random_matrix(rng));
  return qr.householderQ();
}

}  // namespace

TEST_CASE("points are unit and sign canonical") {
  const ProjPoint p = ProjPoint::from(Vec4(-3, 1, 0, 2));
  CHECK(p.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.coords()(0) > 0);
  const ProjPoint q = ProjPoint::from(Vec4(3, -1, 0, -2) * 7.5);
  CHECK(chordal_distance(p, q) < 1e-12);
  CHECK((p.coords() - q.coords()).norm() < 1e-15);

  const ProjPoint tie = ProjPoint::from(Vec4(-1, 1, 0, 0));
  CHECK(tie.coords()(0) > 0);
  CHECK_THROWS_AS(ProjPoint::from(Vec4::Zero()), Error);
  CHECK_THROWS_AS(ProjPoint::from(Vec4(NAN, 0, 0, 1)), Error);
}

TEST_CASE("coordinate joins") {
  const Line l = join_points(ProjPoint::basis(0), ProjPoint::basis(1));
  Vec6 e = Vec6::Zero();
  e(0) = 1;
  CHECK((l.plucker() - e).norm() < 1e-15);

  const Line m = join_points(ProjPoint::basis(0), ProjPoint::basis(3));
  CHECK(grassmann_distance(m, Line::coordinate(0, 3)) < 1e-15);
  CHECK_THROWS_AS(join_points(ProjPoint::basis(2), ProjPoint::from(Vec4(0, 0, -2, 0))), DegenerateJoin);
}

TEST_CASE("join matches explicit minors and stays on the quadric") {
  Rng rng(11);
  double worst_klein = 0, worst_minor = 0, worst_incidence = 0;
  for (int i = 0; i < 10000; ++i) {
    const ProjPoint p = sample_point(rng), q = sample_point(rng);
    const Line l = join_points(p, q);
    worst_klein = std::max(worst_klein, klein_residual(l.plucker()));
    worst_minor = std::max(worst_minor, sign_free_distance(l.plucker(), minors(p.coords(), q.coords())));
    worst_incidence = std::max({worst_incidence, incidence_residual(p, l), incidence_residual(q, l)});
    const Eigen::Matrix2d gram = l.frame().transpose() * l.frame();
    CHECK((gram - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  }
  CHECK(worst_klein <= 1e-10);
  CHECK(worst_minor <= 1e-10);
  CHECK(worst_incidence <= 1e-10);
}

TEST_CASE("plucker lift") {
  Vec6 e = Vec6::Zero();
  e(0) = 1;
  CHECK(grassmann_distance(plucker_lift(e), Line::coordinate(0, 1)) < 1e-15);
  e = Vec6::Zero();
  e(3) = 1;
  CHECK(grassmann_distance(plucker_lift(e), Line::coordinate(2, 3)) < 1e-15);

  Rng rng(3);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Line l = sample_line(rng);
    worst = std::max(worst, grassmann_distance(plucker_lift(-3.0 * plucker_embed(l)), l));
  }
  CHECK(worst <= 1e-9);

  Vec6 off;
  off << 1, 0, 0, 1, 0, 0;
  CHECK_THROWS_AS(plucker_lift(off), OffQuadric);
  try {
    plucker_lift(off);
  } catch (const OffQuadric& ex) {
    CHECK(ex.residual() == doctest::Approx(0.5));
  }
}

TEST_CASE("grassmann distance") {
  CHECK(grassmann_distance(Line::coordinate(0, 1), Line::coordinate(2, 3)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const Mat4 diff = Line::coordinate(0, 1).projector() - Line::coordinate(2, 3).projector();
  CHECK(diff.norm() / std::sqrt(2.0) == doctest::Approx(std::sqrt(2.0)));

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Line l = sample_line(rng), m = sample_line(rng);
    const ProjMap g = ProjMap::from(random_rotation(rng));
    CHECK(std::abs(grassmann_distance(apply_to_line(g, l), apply_to_line(g, m)) - grassmann_distance(l, m)) <=
          1e-12);
  }

  double slack = 0;
  for (int i = 0; i < 10000; ++i) {
    const Line a = sample_line(rng), b = sample_line(rng), c = sample_line(rng);
    const double ab = grassmann_distance(a, b);
    CHECK(ab == grassmann_distance(b, a));
    CHECK(ab <= std::sqrt(2.0) + 1e-12);
    CHECK(grassmann_distance(a, a) <= 1e-10);
    slack = std::min(slack, grassmann_distance(a, c) + grassmann_distance(c, b) - ab);
  }
  CHECK(slack >= -1e-12);
}

TEST_CASE("incidence agrees with the rank of the stacked matrix") {
  CHECK(incidence_residual(ProjPoint::basis(0), Line::coordinate(0, 1)) < 1e-15);
  CHECK(incidence_residual(ProjPoint::basis(2), Line::coordinate(0, 1)) == doctest::Approx(1.0));

  Rng rng(17);
  int disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    const Line l = sample_line(rng);
    const ProjPoint p = i % 2 ? sample_point_on(l, rng) : sample_point(rng);
    Eigen::Matrix<double, 4, 3> stacked;
    stacked << l.frame(), p.coords();
    const bool on = incidence_residual(p, l) <= 1e-10;
    if (on != (numeric_rank(stacked) == 2)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("lines_meet") {
  const auto dis = lines_meet(Line::coordinate(0, 1), Line::coordinate(2, 3));
  CHECK(dis.kind == Relation::Disjoint);
  CHECK(std::abs(dis.omega) == doctest::Approx(1.0));
  const auto meet = lines_meet(Line::coordinate(0, 1), Line::coordinate(0, 2));
  REQUIRE(meet.kind == Relation::Meet);
  CHECK(chordal_distance(*meet.point, ProjPoint::basis(0)) < 1e-12);
  CHECK(lines_meet(Line::coordinate(1, 2), Line::coordinate(1, 2)).kind == Relation::Equal);

  Rng rng(23);
  int disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    const Line l = sample_line(rng);
    Line m = sample_line(rng);
    if (i % 3 == 1) m = join_points(sample_point_on(l, rng), sample_point(rng));
    if (i % 3 == 2) m = Line::span(l.frame() * Eigen::Vector2d(0.3, -1.1), l.frame() * Eigen::Vector2d(2.0, 0.7));
    Eigen::Matrix4d stacked;
    stacked << l.frame(), m.frame();
    const int rank = numeric_rank(stacked);
    const Relation expected = rank == 4 ? Relation::Disjoint : rank == 3 ? Relation::Meet : Relation::Equal;
    const auto rel = lines_meet(l, m);
    if (rel.kind != expected) ++disagreements;
    if (rel.kind == Relation::Meet) {
      CHECK(incidence_residual(*rel.point, l) <= 1e-8);
      CHECK(incidence_residual(*rel.point, m) <= 1e-8);
    }
  }
  CHECK(disagreements == 0);
}

TEST_CASE("omega vanishes on the diagonal") {
  Rng rng(29);
  for (int i = 0; i < 1000; ++i) {
    const Line l = sample_line(rng);
    CHECK(std::abs(omega(l, l)) <= 1e-15);
  }
}

TEST_CASE("hyperplanes") {
  const Hyperplane g = Hyperplane::coordinate(0);
  CHECK(g.covector().norm() == doctest::Approx(1.0));
  CHECK(containment_residual(Line::coordinate(1, 2), g) < 1e-15);
  CHECK_FALSE(intersect(Line::coordinate(1, 2), g).has_value());
  const auto x = intersect(join_points(ProjPoint::from(Vec4(1, 1, 0, 0)), ProjPoint::from(Vec4(-1, 0, 1, 0))), g);
  REQUIRE(x.has_value());
  CHECK(chordal_distance(*x, ProjPoint::from(Vec4(0, 1, 1, 0))) < 1e-12);
  CHECK(g.residual(*x) < 1e-12);
}

TEST_CASE("maps act through the compound matrix") {
  Rng rng(31);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mat4 g = random_matrix(rng);
    const Line l = sample_line(rng);
    const Line img = apply_to_line(ProjMap::from(g), l);
    worst = std::max(worst, sign_free_distance(img.plucker(), compound(g) * l.plucker()));
    CHECK((second_exterior_power(g) - compound(g)).norm() <= 1e-12 * compound(g).norm());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("exterior derivation is the derivative of the compound") {
  Rng rng(37);
  const Mat4 a = random_matrix(rng);
  const double h = 1e-6;
  const Mat6 fd = (compound(Mat4::Identity() + h * a) - compound(Mat4::Identity() - h * a)) / (2 * h);
  CHECK((fd - second_exterior_derivation(a)).norm() <= 1e-8);
}

TEST_CASE("composition convention and projective invariance") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const ProjMap g = ProjMap::from(random_matrix(rng)), h = ProjMap::from(random_matrix(rng));
    const Line l = sample_line(rng);
    CHECK(grassmann_distance(apply_to_line(h, apply_to_line(g, l)), apply_to_line(h * g, l)) <= 1e-9);
    const ProjMap scaled = ProjMap::from(-4.2 * g.matrix());
    CHECK(grassmann_distance(apply_to_line(scaled, l), apply_to_line(g, l)) <= 1e-12);
    CHECK(distance(scaled, g) <= 1e-12);
    CHECK(distance(inverse(g) * g, ProjMap::identity()) <= 1e-9);
    CHECK(g.matrix().norm() == doctest::Approx(1.0).epsilon(1e-12));
    const ProjPoint p = sample_point_on(l, rng);
    CHECK(incidence_residual(apply(g, p), apply_to_line(g, l)) <= 1e-8);
  }
  CHECK(grassmann_distance(apply_to_line(ProjMap::identity(), Line::coordinate(0, 2)), Line::coordinate(0, 2)) == 0);
  CHECK_THROWS_AS(ProjMap::from(Mat4::Zero()), SingularMap);
}

TEST_CASE("ill-conditioned images are refused") {
  Mat4 g = Mat4::Identity();
  g(0, 0) = 1e14;
  const Line l = join_points(ProjPoint::from(Vec4(1, 1, 0, 0)), ProjPoint::from(Vec4(1, -1, 0, 0) + Vec4(0, 0, 1e-3, 0)));
  CHECK_THROWS_AS(apply_to_line(ProjMap::from(g), l), ConditioningLoss);
  CHECK(condition_number(Eigen::MatrixXd(Mat4::Identity())) == doctest::Approx(1.0));
}

TEST_CASE("line sampling") {
  const Line a = sample_line(std::uint64_t{99}), b = sample_line(std::uint64_t{99});
  CHECK(a.plucker() == b.plucker());
  CHECK(a.frame() == b.frame());

  Rng rng(43);
  Mat4 mean = Mat4::Zero();
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Line l = sample_line(rng);
    mean += l.projector();
    worst = std::max(worst, klein_residual(l.plucker()));
  }
  mean /= 10000;
  CHECK((mean - 0.5 * Mat4::Identity()).norm() <= 0.02);
  CHECK(worst <= 1e-10);

  Rng r1 = sample_rng(7, 3), r2 = sample_rng(7, 3), r3 = sample_rng(7, 4);
  CHECK(r1() == r2());
  CHECK(sample_rng(7, 3)() != r3());
}

TEST_CASE("bivector matrix spans the line") {
  Rng rng(47);
  for (int i = 0; i < 100; ++i) {
    const Line l = sample_line(rng);
    const Mat4 b = bivector_matrix(l.plucker());
    CHECK((b + b.transpose()).norm() < 1e-15);
    CHECK(numeric_rank(b) == 2);
    CHECK((l.projector() * b - b).norm() <= 1e-12);
  }
}
