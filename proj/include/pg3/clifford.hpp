#pragma once

#include "pg3/projective.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace pg3 {

class ZeroDivisor : public Error {
 public:
  ZeroDivisor() : Error("the zero quaternion has no inverse") {}
};

class NotInPencil : public Error {
 public:
  explicit NotInPencil(double residual)
      : Error("line does not pass through the pencil point (residual " + std::to_string(residual) + ")") {}
};

/// w + x i + y j + z k, identified with R^4 via (1, i, j, k) <-> (e1, e2, e3, e4).
struct Quaternion {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion from(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
  Vec4 vec() const { return {w, x, y, z}; }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double squared_norm() const { return w * w + x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }
  Quaternion inverse() const;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);
Quaternion operator*(double s, const Quaternion& q);
Quaternion operator+(const Quaternion& a, const Quaternion& b);
Quaternion operator-(const Quaternion& a, const Quaternion& b);

/// Matrix of x -> a * x * b.
Mat4 left_right_multiplication(const Quaternion& a, const Quaternion& b);

/// A parallelism given by its parallel map (p, L) -> the parallel of L through p.
struct ParallelismWitness {
  std::string name;
  std::function<Line(const ProjPoint&, const Line&)> parallel_map;

  Line operator()(const ProjPoint& p, const Line& l) const { return parallel_map(p, l); }
};

/// Left Clifford parallel of L through p = <w>: span(w, w u^{-1} v) for L = span(u, v).
Line clifford_parallel(const ProjPoint& p, const Line& l);
bool is_clifford_parallel(const Line& l, const Line& m, const Tolerances& tol = kDefaultTolerances);

ParallelismWitness clifford_witness();

/// Corrupted witness: the parallel through p is tilted by a fixed shear,
/// p v (S w) where w completes p in the base parallel. Not a parallelism.
ParallelismWitness sheared_witness(ParallelismWitness base, const Mat4& shear);

/// Pencil-to-pencil transfer L -> Pi(q, L) for L through p.
/// Throws NotInPencil if L does not pass through p.
Line transfer(const ParallelismWitness& witness, const ProjPoint& p, const ProjPoint& q, const Line& l,
              const Tolerances& tol = kDefaultTolerances);
Line transfer(const ProjPoint& p, const ProjPoint& q, const Line& l, const Tolerances& tol = kDefaultTolerances);

/// Largest ratio d(T(L'), T(L)) / d(L', L) over random pencil perturbations L' of size delta.
double transfer_lipschitz(const ParallelismWitness& witness, const ProjPoint& p, const ProjPoint& q,
                          const Line& l, double delta, int probes, std::uint64_t seed);

/// Members of the left Clifford class of L, one per point of a Fibonacci sphere.
std::vector<Line> sample_parallel_class(const Line& l, int count);

struct Violation {
  std::string kind;
  std::uint64_t sample = 0;
  double residual = 0.0;
  std::vector<Line> lines;        // certificate lines
  std::vector<ProjPoint> points;  // certificate points
};

struct AuditReport {
  std::string witness;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> max_residuals;
  double min_disjoint_omega = 0.0;  // smallest |omega| between distinct parallels
  std::vector<Violation> violations;

  std::size_t count(const std::string& kind) const;
};

/// Associative, order-independent combination of partial audits.
AuditReport merge(const AuditReport& a, const AuditReport& b);

/// Sample-based check that the witness' classes are spreads and dual spreads.
AuditReport spread_audit(const ParallelismWitness& witness, std::uint64_t samples, std::uint64_t seed,
                         const Tolerances& tol = kDefaultTolerances);

/// Constructive dual-spread probe: the member of the class of L lying in h,
/// found by searching the points x of an auxiliary line in h for which the
/// parallel through x lies in h. nullopt if the search finds no sign change.
std::optional<Line> class_member_in_hyperplane(const ParallelismWitness& witness, const Line& l,
                                               const Hyperplane& h, const Line& search_line);

}  // namespace pg3
