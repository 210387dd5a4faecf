#include "pg3/projective.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace pg3 {

namespace {

// Index pairs of the Pluecker ordering (01, 02, 03, 23, 31, 12).
constexpr std::array<std::pair<int, int>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {2, 3}, {3, 1}, {1, 2}}};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

Vec4 unit_vector(int index) {
  Vec4 v = Vec4::Zero();
  v(index) = 1.0;
  return v;
}

}  // namespace

ProjPoint ProjPoint::from(const Vec4& v) {
  const double n = v.norm();
  if (!all_finite(v) || n == 0.0) throw Error("point requires a finite nonzero vector");
  Vec4 c = v / n;
  canonicalize_sign(c);
  return ProjPoint(c);
}

ProjPoint ProjPoint::basis(int index) { return from(unit_vector(index)); }

Hyperplane Hyperplane::from(const Vec4& covector) {
  const double n = covector.norm();
  if (!all_finite(covector) || n == 0.0) throw Error("hyperplane requires a finite nonzero covector");
  Vec4 c = covector / n;
  canonicalize_sign(c);
  return Hyperplane(c);
}

Hyperplane Hyperplane::coordinate(int index) { return from(unit_vector(index)); }

Line Line::span(const Vec4& u, const Vec4& v, double rank_tol) {
  Frame m;
  m.col(0) = u;
  m.col(1) = v;
  if (!all_finite(m)) throw Error("line requires finite spanning vectors");
  const Eigen::HouseholderQR<Frame> qr(m);
  const auto& r = qr.matrixQR();
  const double r00 = std::abs(r(0, 0));
  const double r11 = std::abs(r(1, 1));
  if (r00 == 0.0 || r11 <= rank_tol * std::max(r00, std::abs(r(0, 1)))) throw DegenerateJoin();

  Frame f = qr.householderQ() * Frame::Identity();
  Vec6 p = wedge(f.col(0), f.col(1));
  p.normalize();
  Eigen::Index best = 0;
  p.cwiseAbs().maxCoeff(&best);
  if (p(best) < 0.0) {
    p = -p;
    f.col(1) = -f.col(1);
  }
  return Line(f, p);
}

Line Line::coordinate(int i, int j) { return span(unit_vector(i), unit_vector(j)); }

ProjMap ProjMap::from(const Mat4& m) {
  if (!all_finite(m)) throw Error("projective map requires finite entries");
  const double n = m.norm();
  if (n == 0.0) throw SingularMap();
  Mat4 g = m / n;

  Eigen::FullPivLU<Mat4> lu(g);
  lu.setThreshold(0.0);
  if (!lu.isInvertible()) throw SingularMap();

  // Row-major scan for the first entry of largest magnitude.
  int bi = 0, bj = 0;
  double best = -1.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::abs(g(i, j)) > best) {
        best = std::abs(g(i, j));
        bi = i;
        bj = j;
      }
  if (g(bi, bj) < 0.0) g = -g;
  return ProjMap(g);
}

ProjMap operator*(const ProjMap& h, const ProjMap& g) { return ProjMap::from(h.matrix() * g.matrix()); }

ProjMap inverse(const ProjMap& g) { return ProjMap::from(g.matrix().inverse()); }

double distance(const ProjMap& g, const ProjMap& h) {
  return std::min((g.matrix() - h.matrix()).norm(), (g.matrix() + h.matrix()).norm());
}

Vec6 wedge(const Vec4& u, const Vec4& v) {
  Vec6 p;
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = kPairs[k];
    p(k) = u(i) * v(j) - u(j) * v(i);
  }
  return p;
}

double klein_residual(const Vec6& p) { return std::abs(p(0) * p(3) + p(1) * p(4) + p(2) * p(5)); }

double omega(const Vec6& p, const Vec6& q) {
  return p(0) * q(3) + p(1) * q(4) + p(2) * q(5) + p(3) * q(0) + p(4) * q(1) + p(5) * q(2);
}

double omega(const Line& l, const Line& m) { return omega(l.plucker(), m.plucker()); }

Mat4 bivector_matrix(const Vec6& p) {
  Mat4 b = Mat4::Zero();
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = kPairs[k];
    b(i, j) = p(k);
    b(j, i) = -p(k);
  }
  return b;
}

Mat6 second_exterior_power(const Mat4& g) {
  Mat6 w;
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = kPairs[k];
    w.col(k) = wedge(g.col(i), g.col(j));
  }
  return w;
}

Mat6 second_exterior_derivation(const Mat4& a) {
  Mat6 w;
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = kPairs[k];
    w.col(k) = wedge(a.col(i), unit_vector(j)) + wedge(unit_vector(i), a.col(j));
  }
  return w;
}

double chordal_distance(const ProjPoint& p, const ProjPoint& q) {
  const Vec4& x = p.coords();
  const Vec4& y = q.coords();
  return (x - x.dot(y) * y).norm();
}

Line join_points(const ProjPoint& p, const ProjPoint& q, const Tolerances&) {
  if (chordal_distance(p, q) <= 1e-9) throw DegenerateJoin();
  return Line::span(p.coords(), q.coords());
}

Vec6 plucker_embed(const Line& l) { return l.plucker(); }

Line plucker_lift(const Vec6& v) {
  const double n = v.norm();
  if (!all_finite(v) || n == 0.0) throw Error("Pluecker vector must be finite and nonzero");
  const Vec6 p = v / n;
  const double res = klein_residual(p);
  if (res > 1e-8) throw OffQuadric(res);
  // The skew matrix of a decomposable bivector has rank 2 and the line as column space.
  Eigen::JacobiSVD<Mat4> svd(bivector_matrix(p), Eigen::ComputeFullU);
  return Line::span(svd.matrixU().col(0), svd.matrixU().col(1));
}

double grassmann_distance(const Line& l, const Line& m) {
  return (l.projector() - m.projector()).norm() / std::sqrt(2.0);
}

double incidence_residual(const ProjPoint& p, const Line& l) {
  const Vec4& x = p.coords();
  return (x - l.frame() * (l.frame().transpose() * x)).norm();
}

double containment_residual(const Line& l, const Hyperplane& h) {
  return (l.frame().transpose() * h.covector()).norm();
}

LineRelation lines_meet(const Line& l, const Line& m, const Tolerances& tol) {
  const double w = omega(l, m);
  if (grassmann_distance(l, m) <= tol.decision) return {Relation::Equal, std::nullopt, w};
  if (std::abs(w) > tol.decision) return {Relation::Disjoint, std::nullopt, w};

  Mat4 stacked;
  stacked << l.frame(), m.frame();
  Eigen::JacobiSVD<Mat4> svd(stacked, Eigen::ComputeFullV);
  const Vec4 c = svd.matrixV().col(3);
  const Vec4 x = l.frame() * c.head<2>() - m.frame() * c.tail<2>();
  return {Relation::Meet, ProjPoint::from(x), w};
}

std::optional<ProjPoint> intersect(const Line& l, const Hyperplane& h, const Tolerances& tol) {
  const Vec4 u = l.frame().col(0);
  const Vec4 v = l.frame().col(1);
  const Vec4& c = h.covector();
  const Vec4 x = c.dot(v) * u - c.dot(u) * v;
  if (x.norm() <= tol.decision) return std::nullopt;
  return ProjPoint::from(x);
}

ProjPoint apply(const ProjMap& g, const ProjPoint& p) { return ProjPoint::from(g.matrix() * p.coords()); }

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

Line apply_to_line(const ProjMap& g, const Line& l, double max_condition) {
  const Frame image = g.matrix() * l.frame();
  const double cond = condition_number(image);
  if (!(cond <= max_condition)) throw ConditioningLoss(cond);
  return Line::span(image.col(0), image.col(1), 0.0);
}

Rng sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

ProjPoint sample_point(Rng& rng) {
  std::normal_distribution<double> gauss;
  Vec4 v;
  do {
    for (int i = 0; i < 4; ++i) v(i) = gauss(rng);
  } while (v.norm() < 1e-6);
  return ProjPoint::from(v);
}

Line sample_line(Rng& rng) {
  std::normal_distribution<double> gauss;
  for (;;) {
    Vec4 u, v;
    for (int i = 0; i < 4; ++i) u(i) = gauss(rng);
    for (int i = 0; i < 4; ++i) v(i) = gauss(rng);
    try {
      return Line::span(u, v, 1e-6);
    } catch (const DegenerateJoin&) {
    }
  }
}

Line sample_line(std::uint64_t seed) {
  Rng rng(seed);
  return sample_line(rng);
}

ProjPoint sample_point_on(const Line& l, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  const double th = angle(rng);
  return ProjPoint::from(std::cos(th) * l.frame().col(0) + std::sin(th) * l.frame().col(1));
}

}  // namespace pg3
