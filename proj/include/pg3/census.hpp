#pragma once

#include "pg3/projective.hpp"

#include <functional>
#include <vector>

namespace pg3 {

/// Projective-plane action t -> matrix (any nonzero scaling).
using PlaneAction = std::function<Mat3(double t)>;

/// Action of gamma on the pencil of lines through the fixed point <e_k>,
/// i.e. on R^4 / <e_k> in the basis of the remaining coordinate vectors.
Mat3 pencil_action(const Mat4& gamma, int k);

/// Points (1,u,v), (u,1,v), (u,v,1) with u, v on a uniform grid of [-1, 1].
std::vector<Vec3> plane_grid(int grid);

struct LimitClass {
  Vec3 point;               // unit representative
  std::size_t count = 0;
  Mat3 scatter = Mat3::Zero();  // sum of x x^T over members
  bool curve = false;           // limits fill a curve rather than a point
  /// sigma_3 / sigma_1 of the scatter; ~0 when the members span at most a line.
  double line_residual() const;
};

struct PlaneCensus {
  std::size_t samples = 0;
  std::vector<Vec3> fixed_points;  // one representative per connected component of fixed samples
  std::size_t fixed_curves = 0;     // components spanning more than one point
  std::size_t fixed_samples = 0;
  std::vector<LimitClass> limits;  // connected limit sets, sorted by decreasing count
  double max_unsettled = 0.0;      // largest chordal move between horizon and twice the horizon

  /// (fixed components, fixed curves, limit classes, limit curves, minority classes lying on a line).
  std::vector<std::size_t> signature() const;
};

struct CensusOptions {
  double horizon = 200.0;
  int substeps = 1;  // images use action(horizon / substeps) applied substeps times
  double fixed_tol = 1e-10;
  double cluster_tol = 0.05;
};

PlaneCensus plane_census(const PlaneAction& action, int grid, const CensusOptions& options = {});

double chordal_distance(const Vec3& x, const Vec3& y);

}  // namespace pg3
