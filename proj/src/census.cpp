#include "pg3/census.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>

namespace pg3 {

Mat3 pencil_action(const Mat4& gamma, int k) {
  Mat3 m;
  for (int i = 0, r = 0; i < 4; ++i) {
    if (i == k) continue;
    for (int j = 0, c = 0; j < 4; ++j) {
      if (j == k) continue;
      m(r, c++) = gamma(i, j);
    }
    ++r;
  }
  return m;
}

std::vector<Vec3> plane_grid(int grid) {
  std::vector<Vec3> pts;
  pts.reserve(3 * static_cast<std::size_t>(grid) * grid);
  const int span = grid - 1;
  for (int face = 0; face < 3; ++face)
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        const double u = static_cast<double>(2 * i - span) / span;
        const double v = static_cast<double>(2 * j - span) / span;
        Vec3 x;
        if (face == 0) x << 1.0, u, v;
        else if (face == 1) x << u, 1.0, v;
        else x << u, v, 1.0;
        pts.push_back(x.normalized());
      }
  return pts;
}

double chordal_distance(const Vec3& x, const Vec3& y) {
  const Vec3 a = x.normalized();
  const Vec3 b = y.normalized();
  return (a - a.dot(b) * b).norm();
}

double LimitClass::line_residual() const {
  Eigen::JacobiSVD<Mat3> svd(scatter);
  const auto& s = svd.singularValues();
  return s(0) > 0.0 ? s(2) / s(0) : 0.0;
}

std::vector<std::size_t> PlaneCensus::signature() const {
  std::size_t on_line = 0, curves = 0;
  for (std::size_t i = 0; i < limits.size(); ++i) {
    if (limits[i].curve) ++curves;
    if (i > 0 && limits[i].line_residual() <= 1e-12) ++on_line;
  }
  return {fixed_points.size(), fixed_curves, limits.size(), curves, on_line};
}

namespace {

Vec3 image(const Mat3& step, int count, Vec3 x) {
  for (int i = 0; i < count; ++i) {
    x = step * x;
    x /= x.norm();
  }
  return x;
}

std::vector<std::size_t> components(const std::vector<Vec3>& pts, double link) {
  std::vector<std::size_t> parent(pts.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (chordal_distance(pts[i], pts[j]) <= link) parent[root(i)] = root(j);
  for (std::size_t i = 0; i < pts.size(); ++i) parent[i] = root(i);
  return parent;
}

// Neighbouring greedy classes along a curve of limits become one class.
std::vector<LimitClass> merge_limits(const std::vector<LimitClass>& raw, double cluster_tol) {
  std::vector<Vec3> reps;
  for (const auto& c : raw) reps.push_back(c.point);
  const auto root = components(reps, 2.5 * cluster_tol);
  std::map<std::size_t, LimitClass> merged;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, fresh] = merged.emplace(root[i], raw[i]);
    if (!fresh) {
      it->second.count += raw[i].count;
      it->second.scatter += raw[i].scatter;
      it->second.curve = true;
    }
  }
  std::vector<LimitClass> out;
  for (auto& [r, c] : merged) out.push_back(c);
  return out;
}

// Single-linkage components at a few grid spacings; a fixed curve met by the
// grid stays one component under refinement.
void group_fixed(const std::vector<Vec3>& fixed, int grid, PlaneCensus& census) {
  const auto root = components(fixed, 8.0 / (grid - 1));
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < fixed.size(); ++i) comps[root[i]].push_back(i);
  for (const auto& [r, members] : comps) {
    census.fixed_points.push_back(fixed[members.front()]);
    Mat3 scatter = Mat3::Zero();
    for (std::size_t i : members) scatter += fixed[i] * fixed[i].transpose();
    Eigen::JacobiSVD<Mat3> svd(scatter);
    if (svd.singularValues()(1) > 1e-9 * svd.singularValues()(0)) ++census.fixed_curves;
  }
}

}  // namespace

PlaneCensus plane_census(const PlaneAction& action, int grid, const CensusOptions& options) {
  if (grid < 2) throw Error("census grid must have at least two nodes");
  if (options.substeps < 1) throw Error("census needs at least one substep");
  const Mat3 unit = action(1.0);
  const Mat3 step = action(options.horizon / options.substeps);

  PlaneCensus census;
  std::vector<Vec3> fixed;
  for (const Vec3& x : plane_grid(grid)) {
    ++census.samples;
    if (chordal_distance(x, unit * x) <= options.fixed_tol) {
      fixed.push_back(x);
      continue;
    }
    const Vec3 y = image(step, options.substeps, x);
    census.max_unsettled = std::max(census.max_unsettled, chordal_distance(y, image(step, options.substeps, y)));
    auto it = std::find_if(census.limits.begin(), census.limits.end(), [&](const LimitClass& c) {
      return chordal_distance(c.point, y) <= options.cluster_tol;
    });
    if (it == census.limits.end()) {
      census.limits.push_back({y, 0, Mat3::Zero()});
      it = census.limits.end() - 1;
    }
    ++it->count;
    it->scatter += x * x.transpose();
  }
  census.fixed_samples = fixed.size();
  group_fixed(fixed, grid, census);
  census.limits = merge_limits(census.limits, options.cluster_tol);
  std::stable_sort(census.limits.begin(), census.limits.end(),
                   [](const LimitClass& a, const LimitClass& b) { return a.count > b.count; });
  return census;
}

}  // namespace pg3
