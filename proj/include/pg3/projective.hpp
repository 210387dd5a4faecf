#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

/// Points, lines, hyperplanes and collineations of real projective 3-space.
///
/// Subspaces of R^4 are stored in normalized homogeneous form. Lines carry an
/// orthonormal 2-frame together with their Pluecker vector
/// (p01, p02, p03, p23, p31, p12), which lies on the Klein quadric
/// p01*p23 + p02*p31 + p03*p12 = 0.
namespace pg3 {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Frame = Eigen::Matrix<double, 4, 2>;

struct Tolerances {
  double representation = 1e-12;  // storage invariants (unit norms, orthonormality)
  double residual = 1e-10;         // derived residuals (quadric, incidence)
  double decision = 1e-8;          // meet / equal thresholds

  bool operator==(const Tolerances&) const = default;
};

/// Tolerances in effect unless a caller passes its own.
inline constexpr Tolerances kDefaultTolerances{};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateJoin : public Error {
 public:
  DegenerateJoin() : Error("cannot join coincident points") {}
};

class OffQuadric : public Error {
 public:
  explicit OffQuadric(double residual)
      : Error("vector is off the Klein quadric (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ConditioningLoss : public Error {
 public:
  explicit ConditioningLoss(double condition)
      : Error("image frame condition number " + std::to_string(condition) + " exceeds limit"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class SingularMap : public Error {
 public:
  SingularMap() : Error("projective map must be invertible") {}
};

/// Flip sign so that the first entry of largest magnitude is positive.
template <typename Derived>
void canonicalize_sign(Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v(best) < 0.0) v = -v;
}

class ProjPoint {
 public:
  /// Throws Error for the zero vector or non-finite input.
  static ProjPoint from(const Vec4& v);
  /// The coordinate point <e_{index+1}>, index in [0,4).
  static ProjPoint basis(int index);

  const Vec4& coords() const { return coords_; }

 private:
  explicit ProjPoint(const Vec4& v) : coords_(v) {}
  Vec4 coords_;
};

/// Hyperplane {x : <covector, x> = 0}.
class Hyperplane {
 public:
  static Hyperplane from(const Vec4& covector);
  /// The coordinate hyperplane {x_{index+1} = 0}.
  static Hyperplane coordinate(int index);

  const Vec4& covector() const { return covector_; }
  double residual(const ProjPoint& p) const { return std::abs(covector_.dot(p.coords())); }

 private:
  explicit Hyperplane(const Vec4& v) : covector_(v) {}
  Vec4 covector_;
};

class Line {
 public:
  /// Line spanned by two vectors; throws DegenerateJoin if they are dependent.
  static Line span(const Vec4& u, const Vec4& v, double rank_tol = 1e-13);
  /// Coordinate line <e_{i+1}, e_{j+1}>.
  static Line coordinate(int i, int j);

  const Frame& frame() const { return frame_; }
  const Vec6& plucker() const { return plucker_; }
  /// Orthogonal projector onto the 2-space.
  Mat4 projector() const { return frame_ * frame_.transpose(); }

 private:
  Line(const Frame& f, const Vec6& p) : frame_(f), plucker_(p) {}
  Frame frame_;
  Vec6 plucker_;
};

/// Invertible 4x4 matrix up to nonzero scale; column-vector convention x -> M x.
class ProjMap {
 public:
  static ProjMap from(const Mat4& m);
  static ProjMap identity() { return from(Mat4::Identity()); }

  const Mat4& matrix() const { return matrix_; }

 private:
  explicit ProjMap(const Mat4& m) : matrix_(m) {}
  Mat4 matrix_;
};

/// Composition: (h * g) applies g first, then h, so (L^g)^h == L^(h*g).
ProjMap operator*(const ProjMap& h, const ProjMap& g);
ProjMap inverse(const ProjMap& g);
/// min over signs of the Frobenius distance between normalized matrices.
double distance(const ProjMap& g, const ProjMap& h);

// Pluecker coordinates of u ^ v (unnormalized), ordering (01,02,03,23,31,12).
Vec6 wedge(const Vec4& u, const Vec4& v);
double klein_residual(const Vec6& p);
/// Symplectic pairing; vanishes iff the two lines meet.
double omega(const Vec6& p, const Vec6& q);
double omega(const Line& l, const Line& m);
/// Skew 4x4 matrix of a bivector; its column space is the line.
Mat4 bivector_matrix(const Vec6& p);

/// Induced action on the second exterior power, in Pluecker coordinates.
Mat6 second_exterior_power(const Mat4& g);
/// Derivation induced by a generator: d/dt of second_exterior_power(exp tA) at 0.
Mat6 second_exterior_derivation(const Mat4& a);

double chordal_distance(const ProjPoint& p, const ProjPoint& q);

Line join_points(const ProjPoint& p, const ProjPoint& q, const Tolerances& tol = kDefaultTolerances);
Vec6 plucker_embed(const Line& l);
/// Throws OffQuadric when the normalized vector's quadric residual exceeds 1e-8.
Line plucker_lift(const Vec6& v);
double grassmann_distance(const Line& l, const Line& m);
double incidence_residual(const ProjPoint& p, const Line& l);
/// Residual of l lying inside h: norm of the covector on the frame.
double containment_residual(const Line& l, const Hyperplane& h);

enum class Relation { Equal, Meet, Disjoint };

struct LineRelation {
  Relation kind;
  std::optional<ProjPoint> point;  // set iff kind == Meet
  double omega = 0.0;
};

LineRelation lines_meet(const Line& l, const Line& m, const Tolerances& tol = kDefaultTolerances);

/// Intersection of a line with a hyperplane; nullopt if the line lies in it.
std::optional<ProjPoint> intersect(const Line& l, const Hyperplane& h,
                                   const Tolerances& tol = kDefaultTolerances);

inline constexpr double kMaxFrameCondition = 1e12;

ProjPoint apply(const ProjMap& g, const ProjPoint& p);
/// Throws ConditioningLoss if the image frame is worse conditioned than max_condition.
Line apply_to_line(const ProjMap& g, const Line& l, double max_condition = kMaxFrameCondition);

/// Condition number (ratio of extreme singular values) of a matrix.
double condition_number(const Eigen::MatrixXd& m);

using Rng = std::mt19937_64;

/// Per-sample generator derived from a run seed and a sample index.
Rng sample_rng(std::uint64_t seed, std::uint64_t index);

ProjPoint sample_point(Rng& rng);
Line sample_line(Rng& rng);
Line sample_line(std::uint64_t seed);
/// Uniform point of the given line.
ProjPoint sample_point_on(const Line& l, Rng& rng);

}  // namespace pg3
