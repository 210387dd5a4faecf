#include "pg3/clifford.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pg3 {

Quaternion Quaternion::inverse() const {
  const double n2 = squared_norm();
  if (n2 == 0.0) throw ZeroDivisor();
  const Quaternion c = conjugate();
  return {c.w / n2, c.x / n2, c.y / n2, c.z / n2};
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion operator*(double s, const Quaternion& q) { return {s * q.w, s * q.x, s * q.y, s * q.z}; }
Quaternion operator+(const Quaternion& a, const Quaternion& b) { return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z}; }
Quaternion operator-(const Quaternion& a, const Quaternion& b) { return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z}; }

Mat4 left_right_multiplication(const Quaternion& a, const Quaternion& b) {
  Mat4 m;
  for (int k = 0; k < 4; ++k) {
    Vec4 e = Vec4::Zero();
    e(k) = 1.0;
    m.col(k) = (a * Quaternion::from(e) * b).vec();
  }
  return m;
}

Line clifford_parallel(const ProjPoint& p, const Line& l) {
  const Frame& f = l.frame();
  const int ui = std::abs(f(0, 0)) >= std::abs(f(0, 1)) ? 0 : 1;
  const Quaternion u = Quaternion::from(f.col(ui));
  const Quaternion v = Quaternion::from(f.col(1 - ui));
  const Quaternion w = Quaternion::from(p.coords());
  return Line::span(w.vec(), (w * u.inverse() * v).vec());
}

bool is_clifford_parallel(const Line& l, const Line& m, const Tolerances& tol) {
  const ProjPoint point_of_m = ProjPoint::from(m.frame().col(0));
  return grassmann_distance(clifford_parallel(point_of_m, l), m) <= tol.decision;
}

ParallelismWitness clifford_witness() { return {"clifford-left", &clifford_parallel}; }

namespace {

// Unit vector of l orthogonal to the point x on it.
Vec4 complement_in(const Line& l, const Vec4& x) {
  const Frame& f = l.frame();
  const Vec4 a = f.col(0) - x.dot(f.col(0)) * x;
  const Vec4 b = f.col(1) - x.dot(f.col(1)) * x;
  return (a.norm() >= b.norm() ? a : b).normalized();
}

Vec4 orthogonal_unit(const Vec4& a, const Vec4& b, Rng& rng) {
  std::normal_distribution<double> gauss;
  for (;;) {
    Vec4 z;
    for (int i = 0; i < 4; ++i) z(i) = gauss(rng);
    z -= a.dot(z) * a;
    z -= b.dot(z) * b;
    if (z.norm() > 1e-3) return z.normalized();
  }
}

}  // namespace

ParallelismWitness sheared_witness(ParallelismWitness base, const Mat4& shear) {
  auto map = [base = std::move(base), shear](const ProjPoint& p, const Line& l) {
    const Line m = base(p, l);
    return Line::span(p.coords(), shear * complement_in(m, p.coords()));
  };
  return {"sheared", map};
}

Line transfer(const ParallelismWitness& witness, const ProjPoint& p, const ProjPoint& q, const Line& l,
              const Tolerances& tol) {
  const double res = incidence_residual(p, l);
  if (res > tol.decision) throw NotInPencil(res);
  return witness(q, l);
}

Line transfer(const ProjPoint& p, const ProjPoint& q, const Line& l, const Tolerances& tol) {
  return transfer(clifford_witness(), p, q, l, tol);
}

double transfer_lipschitz(const ParallelismWitness& witness, const ProjPoint& p, const ProjPoint& q,
                          const Line& l, double delta, int probes, std::uint64_t seed) {
  Rng rng(seed);
  const Vec4 x = p.coords();
  const Vec4 w = complement_in(l, x);
  const Line image = transfer(witness, p, q, l);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const Vec4 z = orthogonal_unit(x, w, rng);
    const Line moved = Line::span(x, w + delta * z);
    const double d_in = grassmann_distance(moved, l);
    if (d_in == 0.0) continue;
    worst = std::max(worst, grassmann_distance(transfer(witness, p, q, moved), image) / d_in);
  }
  return worst;
}

std::vector<Line> sample_parallel_class(const Line& l, int count) {
  const Quaternion u = Quaternion::from(l.frame().col(0));
  const Quaternion v = Quaternion::from(l.frame().col(1));
  // l = u * C with C = span(1, n); members are q * C, q ranging over S^3 / S^1 = S^2
  // via q -> q n q^{-1}.
  const Quaternion n = u.conjugate() * v;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Line> members;
  members.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double zc = 1.0 - (2.0 * k + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const Quaternion m{0.0, r * std::cos(k * golden), r * std::sin(k * golden), zc};
    // Rotation taking n to m: normalize(1 - m n); antipodal case uses any axis orthogonal to n.
    Quaternion q = Quaternion{1.0, 0.0, 0.0, 0.0} - m * n;
    if (q.norm() < 1e-9) {
      const Vec3 nv(n.x, n.y, n.z);
      Vec3 axis = nv.unitOrthogonal();
      q = {0.0, axis(0), axis(1), axis(2)};
    }
    q = (1.0 / q.norm()) * q;
    members.push_back(Line::span(q.vec(), (q * n).vec()));
  }
  return members;
}

std::size_t AuditReport::count(const std::string& kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

AuditReport merge(const AuditReport& a, const AuditReport& b) {
  AuditReport out = a;
  out.samples = a.samples + b.samples;
  for (const auto& [key, value] : b.max_residuals) {
    auto it = out.max_residuals.find(key);
    if (it == out.max_residuals.end())
      out.max_residuals[key] = value;
    else
      it->second = std::max(it->second, value);
  }
  out.min_disjoint_omega = std::min(a.min_disjoint_omega, b.min_disjoint_omega);
  out.violations.insert(out.violations.end(), b.violations.begin(), b.violations.end());
  std::stable_sort(out.violations.begin(), out.violations.end(), [](const Violation& x, const Violation& y) {
    return x.sample != y.sample ? x.sample < y.sample : x.kind < y.kind;
  });
  return out;
}

std::optional<Line> class_member_in_hyperplane(const ParallelismWitness& witness, const Line& l,
                                               const Hyperplane& h, const Line& search_line) {
  const Vec4 a = search_line.frame().col(0);
  const Vec4 b = search_line.frame().col(1);
  const Vec4& c = h.covector();

  // Signed height above h of the parallel through x(s), with its direction
  // tracked continuously from a reference direction.
  auto height = [&](double s, Vec4& direction) {
    const Vec4 x = std::cos(s) * a + std::sin(s) * b;
    Vec4 w = complement_in(witness(ProjPoint::from(x), l), x);
    if (w.dot(direction) < 0.0) w = -w;
    direction = w;
    return c.dot(w);
  };

  constexpr int kScan = 96;
  Vec4 dir = complement_in(witness(ProjPoint::from(a), l), a);
  double prev = height(0.0, dir);
  Vec4 prev_dir = dir;
  double lo = 0.0, hi = -1.0;
  Vec4 lo_dir = dir;
  for (int k = 1; k <= kScan; ++k) {
    const double s = std::numbers::pi * k / kScan;
    Vec4 d = prev_dir;
    const double cur = height(s, d);
    if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) {
      lo = std::numbers::pi * (k - 1) / kScan;
      hi = s;
      lo_dir = prev_dir;
      break;
    }
    prev = cur;
    prev_dir = d;
  }
  if (hi < 0.0) return std::nullopt;

  Vec4 d = lo_dir;
  double f_lo = height(lo, d);
  lo_dir = d;
  for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    Vec4 dm = lo_dir;
    const double f_mid = height(mid, dm);
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
      lo_dir = dm;
    } else {
      hi = mid;
    }
  }
  const double s = 0.5 * (lo + hi);
  const Vec4 x = std::cos(s) * a + std::sin(s) * b;
  return witness(ProjPoint::from(x), l);
}

namespace {

// Line through two orthonormal vectors of h, chosen from the generator.
Line random_line_in(const Hyperplane& h, Rng& rng) {
  const Vec4& c = h.covector();
  const Vec4 a = orthogonal_unit(c, Vec4::Zero(), rng);
  const Vec4 b = orthogonal_unit(c, a, rng);
  return Line::span(a, b);
}

void raise(AuditReport& r, const std::string& key, double value) {
  auto& slot = r.max_residuals[key];
  slot = std::max(slot, value);
}

}  // namespace

AuditReport spread_audit(const ParallelismWitness& witness, std::uint64_t samples, std::uint64_t seed,
                         const Tolerances& tol) {
  AuditReport total;
  total.witness = witness.name;
  total.seed = seed;
  total.min_disjoint_omega = std::numeric_limits<double>::infinity();
  for (const char* key : {"containment", "idempotence", "uniqueness", "disjointness", "dual_spread"})
    total.max_residuals[key] = 0.0;

  for (std::uint64_t i = 0; i < samples; ++i) {
    AuditReport r;
    r.witness = witness.name;
    r.seed = seed;
    r.samples = 1;
    r.min_disjoint_omega = std::numeric_limits<double>::infinity();
    Rng rng = sample_rng(seed, i);
    auto flag = [&](std::string kind, double residual, std::vector<Line> lines, std::vector<ProjPoint> points) {
      r.violations.push_back({std::move(kind), i, residual, std::move(lines), std::move(points)});
    };

    const Line l = sample_line(rng);
    const ProjPoint p = sample_point(rng);
    const Line m = witness(p, l);

    const double contain = incidence_residual(p, m);
    raise(r, "containment", contain);
    if (contain > tol.decision) flag("containment", contain, {l, m}, {p});

    const double idem = grassmann_distance(witness(p, m), m);
    raise(r, "idempotence", idem);
    if (idem > tol.decision) flag("idempotence", idem, {m, witness(p, m)}, {p});

    // Parallel through p must not depend on the representative of the class.
    const Line other = witness(sample_point(rng), l);
    const Line via_other = witness(p, other);
    const double uniq = grassmann_distance(via_other, m);
    raise(r, "uniqueness", uniq);
    if (uniq > tol.decision) flag("uniqueness", uniq, {m, via_other}, {p});

    // Two parallels of l sharing a point must coincide.
    const ProjPoint q = sample_point_on(m, rng);
    const Line through_q = witness(q, l);
    const double shared = grassmann_distance(through_q, m);
    raise(r, "disjointness", shared);
    if (shared > tol.decision) flag("disjointness", shared, {m, through_q}, {q});

    // Distinct parallels must be disjoint.
    const Line far = witness(sample_point(rng), l);
    if (grassmann_distance(far, m) > tol.decision) {
      const double w = std::abs(omega(far, m));
      r.min_disjoint_omega = std::min(r.min_disjoint_omega, w);
      if (w <= tol.decision) {
        const auto rel = lines_meet(far, m, tol);
        std::vector<ProjPoint> pts;
        if (rel.point) pts.push_back(*rel.point);
        flag("disjointness", w, {m, far}, pts);
      }
    }

    // Dual spread: exactly one member of the class lies in a random hyperplane.
    const Hyperplane h = Hyperplane::from(sample_point(rng).coords());
    const auto first = class_member_in_hyperplane(witness, l, h, random_line_in(h, rng));
    const auto second = class_member_in_hyperplane(witness, l, h, random_line_in(h, rng));
    if (!first || !second) {
      flag("dual_spread", std::numeric_limits<double>::infinity(), {l}, {});
    } else {
      const double in_h = std::max(containment_residual(*first, h), containment_residual(*second, h));
      const double same = grassmann_distance(*first, *second);
      const double dual = std::max(in_h, same);
      raise(r, "dual_spread", dual);
      if (dual > tol.decision) flag("dual_spread", dual, {*first, *second}, {});
    }
    total = merge(total, r);
  }
  total.witness = witness.name;
  total.seed = seed;
  total.samples = samples;
  return total;
}

}  // namespace pg3
