#include "pg3/flows.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <type_traits>

namespace pg3 {

namespace {

using Complex = std::complex<double>;
using CMat4 = Eigen::Matrix<Complex, 4, 4>;

Eigen::Matrix2d rotation(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

Eigen::Matrix2d rotation_generator(double speed) {
  Eigen::Matrix2d j;
  j << 0.0, -speed, speed, 0.0;
  return j;
}

Eigen::Matrix2d unipotent2(double t) {
  Eigen::Matrix2d u;
  u << 1.0, t, 0.0, 1.0;
  return u;
}

}  // namespace

std::string_view to_string(JordanCase c) {
  switch (c) {
    case JordanCase::A1: return "a1";
    case JordanCase::A2: return "a2";
    case JordanCase::B1: return "b1";
    case JordanCase::B2: return "b2";
    case JordanCase::C1: return "c1";
    case JordanCase::C2: return "c2";
    case JordanCase::C3: return "c3";
    case JordanCase::C4: return "c4";
    case JordanCase::C5: return "c5";
  }
  return "?";
}

std::optional<JordanCase> parse_case(std::string_view tag) {
  std::string lower(tag);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (JordanCase c : kAllCases)
    if (to_string(c) == lower) return c;
  return std::nullopt;
}

std::vector<std::string> parameter_names(JordanCase c) {
  switch (c) {
    case JordanCase::A1: return {"a", "b", "c"};
    case JordanCase::A2: return {"a"};
    case JordanCase::B1: return {"a", "b", "c"};
    case JordanCase::B2: return {"a", "b"};
    case JordanCase::C1: return {};
    case JordanCase::C2: return {"b"};
    case JordanCase::C3: return {"a"};
    case JordanCase::C4: return {"b", "c"};
    case JordanCase::C5: return {"b", "c", "d"};
  }
  return {};
}

double FlowParams::get(std::string_view name) const {
  if (name == "a") return a;
  if (name == "b") return b;
  if (name == "c") return c;
  if (name == "d") return d;
  throw InvalidFlow("unknown parameter '" + std::string(name) + "'");
}

void FlowParams::set(std::string_view name, double value) {
  if (name == "a") a = value;
  else if (name == "b") b = value;
  else if (name == "c") c = value;
  else if (name == "d") d = value;
  else throw InvalidFlow("unknown parameter '" + std::string(name) + "'");
}

OneParamFlow::OneParamFlow(JordanCase kind, FlowParams params) : kind_(kind), params_(params) {
  const FlowParams& p = params_;
  for (double v : {p.a, p.b, p.c, p.d})
    if (!std::isfinite(v)) throw InvalidFlow("flow parameters must be finite");
  switch (kind_) {
    case JordanCase::A1:
      if (p.a == 0.0 || p.c == 0.0) throw InvalidFlow("case a1 requires a != 0 and c != 0");
      break;
    case JordanCase::A2:
    case JordanCase::B1:
    case JordanCase::B2:
      if (p.a == 0.0) throw InvalidFlow("case " + std::string(to_string(kind_)) + " requires a != 0");
      break;
    case JordanCase::C5:
      if (p.b == 0.0 && p.c == 0.0 && p.d == 0.0) throw InvalidFlow("case c5 with b = c = d = 0 is trivial");
      break;
    default:
      break;
  }
}

Mat4 OneParamFlow::generator() const {
  const FlowParams& p = params_;
  Mat4 g = Mat4::Zero();
  switch (kind_) {
    case JordanCase::A1:
      g.block<2, 2>(0, 0) = rotation_generator(p.a);
      g.block<2, 2>(2, 2) = p.b * Eigen::Matrix2d::Identity() + rotation_generator(p.c);
      break;
    case JordanCase::A2:
      g.block<2, 2>(0, 0) = rotation_generator(p.a);
      g.block<2, 2>(2, 2) = rotation_generator(p.a);
      g.block<2, 2>(0, 2) = Eigen::Matrix2d::Identity();
      break;
    case JordanCase::B1:
      g.block<2, 2>(0, 0) = rotation_generator(p.a);
      g(2, 2) = p.b;
      g(3, 3) = p.c;
      break;
    case JordanCase::B2:
      g.block<2, 2>(0, 0) = rotation_generator(p.a);
      g(2, 2) = p.b;
      g(3, 3) = p.b;
      g(2, 3) = 1.0;
      break;
    case JordanCase::C1:
      g(0, 1) = g(1, 2) = g(2, 3) = 1.0;
      break;
    case JordanCase::C2:
      g(0, 1) = g(1, 2) = 1.0;
      g(3, 3) = p.b;
      break;
    case JordanCase::C3:
      g(0, 0) = g(1, 1) = p.a;
      g(0, 1) = 1.0;
      g(2, 3) = 1.0;
      break;
    case JordanCase::C4:
      g(0, 1) = 1.0;
      g(2, 2) = p.b;
      g(3, 3) = p.c;
      break;
    case JordanCase::C5:
      g(1, 1) = p.b;
      g(2, 2) = p.c;
      g(3, 3) = p.d;
      break;
  }
  return g;
}

std::optional<double> OneParamFlow::rotation_period() const {
  switch (kind_) {
    case JordanCase::A1:
    case JordanCase::A2:
    case JordanCase::B1:
    case JordanCase::B2:
      return 2.0 * std::numbers::pi / std::abs(params_.a);
    default:
      return std::nullopt;
  }
}

Mat4 OneParamFlow::scaled_matrix(double t) const {
  const FlowParams& p = params_;
  Mat4 g = Mat4::Zero();
  // Each block carries a factor exp(rate * t); the largest one is divided out.
  auto shift_of = [t](std::initializer_list<double> rates) {
    double m = 0.0;
    for (double r : rates) m = std::max(m, r * t);
    return m;
  };
  switch (kind_) {
    case JordanCase::A1: {
      const double m = shift_of({0.0, p.b});
      g.block<2, 2>(0, 0) = std::exp(-m) * rotation(p.a * t);
      g.block<2, 2>(2, 2) = std::exp(p.b * t - m) * rotation(p.c * t);
      break;
    }
    case JordanCase::A2:
      g.block<2, 2>(0, 0) = rotation(p.a * t);
      g.block<2, 2>(2, 2) = rotation(p.a * t);
      g.block<2, 2>(0, 2) = t * rotation(p.a * t);
      break;
    case JordanCase::B1: {
      const double m = shift_of({0.0, p.b, p.c});
      g.block<2, 2>(0, 0) = std::exp(-m) * rotation(p.a * t);
      g(2, 2) = std::exp(p.b * t - m);
      g(3, 3) = std::exp(p.c * t - m);
      break;
    }
    case JordanCase::B2: {
      const double m = shift_of({0.0, p.b});
      g.block<2, 2>(0, 0) = std::exp(-m) * rotation(p.a * t);
      g.block<2, 2>(2, 2) = std::exp(p.b * t - m) * unipotent2(t);
      break;
    }
    case JordanCase::C1:
      g << 1.0, t, t * t / 2.0, t * t * t / 6.0,  //
          0.0, 1.0, t, t * t / 2.0,               //
          0.0, 0.0, 1.0, t,                       //
          0.0, 0.0, 0.0, 1.0;
      break;
    case JordanCase::C2: {
      const double m = shift_of({0.0, p.b});
      const double e = std::exp(-m);
      g(0, 0) = g(1, 1) = g(2, 2) = e;
      g(0, 1) = g(1, 2) = t * e;
      g(0, 2) = t * t / 2.0 * e;
      g(3, 3) = std::exp(p.b * t - m);
      break;
    }
    case JordanCase::C3: {
      const double m = shift_of({p.a, 0.0});
      g.block<2, 2>(0, 0) = std::exp(p.a * t - m) * unipotent2(t);
      g.block<2, 2>(2, 2) = std::exp(-m) * unipotent2(t);
      break;
    }
    case JordanCase::C4: {
      const double m = shift_of({0.0, p.b, p.c});
      g.block<2, 2>(0, 0) = std::exp(-m) * unipotent2(t);
      g(2, 2) = std::exp(p.b * t - m);
      g(3, 3) = std::exp(p.c * t - m);
      break;
    }
    case JordanCase::C5: {
      const double m = shift_of({0.0, p.b, p.c, p.d});
      g(0, 0) = std::exp(-m);
      g(1, 1) = std::exp(p.b * t - m);
      g(2, 2) = std::exp(p.c * t - m);
      g(3, 3) = std::exp(p.d * t - m);
      break;
    }
  }
  return g;
}

ProjMap OneParamFlow::gamma(double t) const {
  if (!std::isfinite(t)) throw InvalidFlow("flow time must be finite");
  return ProjMap::from(scaled_matrix(t));
}

// ---------------------------------------------------------------------------
// Real Jordan classification

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Orthonormal basis of the dim-dimensional numerical kernel (smallest singular directions).
template <typename Scalar>
Mat<Scalar> kernel_basis(const Mat<Scalar>& m, int dim) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

template <typename Scalar>
int numerical_nullity(const Mat<Scalar>& m, double threshold) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(m);
  int n = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) <= threshold) ++n;
  return n;
}

template <typename Scalar>
Mat<Scalar> matrix_power(const Mat<Scalar>& m, int k) {
  Mat<Scalar> r = Mat<Scalar>::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) r = r * m;
  return r;
}

// Jordan chain starting vectors for a nilpotent operator with known block sizes
// (descending). Returns one top-of-chain vector x per block, N^{size-1} x != 0.
template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> chain_heads(const Mat<Scalar>& n,
                                                                   const std::vector<int>& sizes) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index m = n.rows();
  std::vector<Vec> heads;
  Mat<Scalar> chosen(m, 0);
  for (int k : sizes) {
    int kernel_dim = 0;
    for (int s : sizes) kernel_dim += std::min(s, k);
    const Mat<Scalar> s_basis = kernel_basis<Scalar>(matrix_power<Scalar>(n, k), kernel_dim);
    Mat<Scalar> t = matrix_power<Scalar>(n, k - 1) * s_basis;
    if (chosen.cols() > 0) {
      Eigen::HouseholderQR<Mat<Scalar>> qr(chosen);
      const Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(m, chosen.cols());
      t -= q * (q.adjoint() * t);
    }
    Eigen::JacobiSVD<Mat<Scalar>> svd(t, Eigen::ComputeFullV);
    Vec x = s_basis * svd.matrixV().col(0);
    heads.push_back(x);
    Mat<Scalar> grown(m, chosen.cols() + k);
    grown.leftCols(chosen.cols()) = chosen;
    Vec v = x;
    for (int j = 0; j < k; ++j) {
      grown.col(chosen.cols() + j) = v;
      v = n * v;
    }
    chosen = grown;
  }
  return heads;
}

struct Cluster {
  Complex mean;
  int size = 0;
  double spread = 0.0;
};

struct Block {
  bool complex = false;
  Complex eigenvalue;             // in the coordinates of the input matrix
  int size = 0;
  std::vector<Vec4> columns;      // real columns, 2*size for complex blocks
};

// Coarsest set partition of the four eigenvalues in which every group of k values
// spreads at most tol^(2/k), the perturbation size of a k-fold defective eigenvalue
// at noise level tol^2. Ties go to the smallest total normalized spread.
std::vector<Cluster> cluster_eigenvalues(const Eigen::Vector4cd& ev, double tol) {
  auto spread = [&](const std::vector<int>& g, Complex& mean) {
    mean = 0.0;
    for (int i : g) mean += ev(i);
    mean /= static_cast<double>(g.size());
    double s = 0.0;
    for (int i : g) s = std::max(s, std::abs(ev(i) - mean));
    return s;
  };
  std::vector<std::vector<int>> best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::array<int, 4> label{};
  // Restricted growth strings enumerate the 15 partitions.
  auto visit = [&](auto&& self, int pos, int used) -> void {
    if (pos == 4) {
      std::vector<std::vector<int>> groups(static_cast<std::size_t>(used));
      for (int i = 0; i < 4; ++i) groups[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
      double cost = 0.0;
      for (const auto& g : groups) {
        Complex mean;
        const double radius = std::max(tol, std::pow(tol, 2.0 / static_cast<double>(g.size())));
        const double s = spread(g, mean);
        if (s > radius) return;
        cost += s / radius;
      }
      if (best.empty() || groups.size() < best.size() || (groups.size() == best.size() && cost < best_cost)) {
        best = std::move(groups);
        best_cost = cost;
      }
      return;
    }
    for (int l = 0; l <= used && l < 4; ++l) {
      label[static_cast<std::size_t>(pos)] = l;
      self(self, pos + 1, std::max(used, l + 1));
    }
  };
  visit(visit, 0, 0);
  std::vector<Cluster> out;
  for (const auto& g : best) {
    Complex mean;
    const double s = spread(g, mean);
    out.push_back({mean, static_cast<int>(g.size()), s});
  }
  return out;
}

// Block sizes (descending) from nullities of (B - lambda)^j, j = 1..m.
template <typename Scalar>
std::vector<int> block_sizes(const Mat<Scalar>& shifted, int multiplicity, double threshold, bool& consistent) {
  std::vector<int> nullity(static_cast<std::size_t>(multiplicity) + 2, 0);
  Mat<Scalar> power = Mat<Scalar>::Identity(4, 4);
  for (int j = 1; j <= multiplicity; ++j) {
    power = power * shifted;
    nullity[static_cast<std::size_t>(j)] = std::min(numerical_nullity<Scalar>(power, threshold), multiplicity);
  }
  consistent = nullity[static_cast<std::size_t>(multiplicity)] == multiplicity;
  nullity[static_cast<std::size_t>(multiplicity)] = multiplicity;
  for (int j = 1; j <= multiplicity; ++j)
    nullity[static_cast<std::size_t>(j)] =
        std::max(nullity[static_cast<std::size_t>(j)], nullity[static_cast<std::size_t>(j) - 1]);
  nullity[static_cast<std::size_t>(multiplicity) + 1] = multiplicity;
  std::vector<int> sizes;
  for (int j = multiplicity; j >= 1; --j) {
    const auto u = static_cast<std::size_t>(j);
    const int at_least_j = nullity[u] - nullity[u - 1];
    const int at_least_next = j < multiplicity ? nullity[u + 1] - nullity[u] : 0;
    for (int c = 0; c < at_least_j - at_least_next; ++c) sizes.push_back(j);
  }
  if (sizes.empty()) sizes.push_back(multiplicity);
  return sizes;
}

// Jordan blocks of one eigenvalue cluster, columns expressed for the input matrix a.
template <typename Scalar>
std::vector<Block> cluster_blocks(const Mat4& a, const Mat4& scaled, Scalar lambda_scaled, Scalar lambda_input,
                                  int multiplicity, double threshold, bool& consistent) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Mat<Scalar> b = scaled.cast<Scalar>();
  const Mat<Scalar> shifted = b - lambda_scaled * Mat<Scalar>::Identity(4, 4);
  const std::vector<int> sizes = block_sizes<Scalar>(shifted, multiplicity, threshold, consistent);

  const Mat<Scalar> w = kernel_basis<Scalar>(matrix_power<Scalar>(shifted, multiplicity), multiplicity);
  const Mat<Scalar> restricted = w.adjoint() * shifted * w;
  const auto heads = chain_heads<Scalar>(restricted, sizes);

  const Mat<Scalar> input_shifted = a.cast<Scalar>() - lambda_input * Mat<Scalar>::Identity(4, 4);
  std::vector<Block> blocks;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const int k = sizes[h];
    std::vector<Vec> chain(static_cast<std::size_t>(k));
    chain[static_cast<std::size_t>(k) - 1] = w * heads[h];
    for (int j = k - 1; j > 0; --j)
      chain[static_cast<std::size_t>(j) - 1] = input_shifted * chain[static_cast<std::size_t>(j)];
    const double scale = chain[0].norm();
    Block blk;
    blk.size = k;
    blk.eigenvalue = Complex(lambda_input);
    for (auto& v : chain) {
      v /= scale;
      if constexpr (std::is_same_v<Scalar, double>) {
        blk.columns.push_back(v);
      } else {
        // Realification: z = x + i y contributes columns (x, -y).
        blk.complex = true;
        blk.columns.push_back(v.real());
        blk.columns.push_back(-v.imag());
      }
    }
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

}  // namespace

ClassificationResult classify_generator(const Mat4& a, double tol) {
  if (!a.allFinite()) throw NotClassifiable("generator must have finite entries");
  const double tau = a.trace() / 4.0;
  const Mat4 centered = a - tau * Mat4::Identity();
  const double scale = centered.norm();
  if (scale == 0.0 || scale <= tol * a.norm())
    throw NotClassifiable("generator is projectively trivial (scalar matrix)");
  const Mat4 scaled = centered / scale;

  Eigen::EigenSolver<Mat4> es(scaled, false);
  const Eigen::Vector4cd ev = es.eigenvalues();
  const auto clusters = cluster_eigenvalues(ev, tol);

  ClassificationResult result;
  bool consistent = true;
  std::vector<Block> blocks;
  int counted = 0;
  std::vector<Complex> kept;  // cluster means including conjugates, for the gap check
  bool split_gap = false;     // semisimple cluster holding distinct eigenvalues
  for (const Cluster& c : clusters) {
    const std::size_t before = blocks.size();
    const double radius = std::max(tol, std::pow(tol, 2.0 / c.size));
    kept.push_back(c.mean);
    bool ok = true;
    if (std::abs(c.mean.imag()) <= radius) {
      const double lam = c.mean.real();
      auto bl = cluster_blocks<double>(a, scaled, lam, lam * scale + tau, c.size, tol, ok);
      blocks.insert(blocks.end(), bl.begin(), bl.end());
      counted += c.size;
    } else if (c.mean.imag() > 0.0) {
      auto bl = cluster_blocks<Complex>(a, scaled, c.mean, c.mean * scale + tau, c.size, tol, ok);
      blocks.insert(blocks.end(), bl.begin(), bl.end());
      counted += 2 * c.size;
    }
    consistent = consistent && ok;
    bool semisimple = c.size > 1 && blocks.size() > before;
    for (std::size_t i = before; i < blocks.size(); ++i) semisimple = semisimple && blocks[i].size == 1;
    if (semisimple && c.spread > tol * tol) split_gap = true;
  }
  if (counted != 4) throw NotClassifiable("eigenvalue clusters are not conjugation-symmetric");

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j) min_gap = std::min(min_gap, std::abs(kept[i] - kept[j]));
  result.ambiguous = !consistent || split_gap || min_gap < 10.0 * tol;

  std::vector<const Block*> cx, re;
  for (const auto& b : blocks) (b.complex ? cx : re).push_back(&b);
  auto by_value = [](const Block* x, const Block* y) {
    if (x->eigenvalue.real() != y->eigenvalue.real()) return x->eigenvalue.real() < y->eigenvalue.real();
    return x->eigenvalue.imag() < y->eigenvalue.imag();
  };
  std::stable_sort(cx.begin(), cx.end(), by_value);
  std::stable_sort(re.begin(), re.end(), by_value);
  std::vector<int> re_sizes;
  for (auto* b : re) re_sizes.push_back(b->size);

  auto take_size = [&](int size) {
    for (auto it = re.begin(); it != re.end(); ++it)
      if ((*it)->size == size) {
        const Block* b = *it;
        re.erase(it);
        return b;
      }
    throw NotClassifiable("inconsistent Jordan structure");
  };

  std::vector<const Block*> order;
  FlowParams params;
  double shift = 0.0;
  JordanCase kind;
  const std::size_t ncx_blocks = cx.size();
  int cx_total = 0;
  for (auto* b : cx) cx_total += b->size;

  if (cx_total == 2 && ncx_blocks == 2) {
    kind = JordanCase::A1;
    shift = cx[0]->eigenvalue.real();
    params.a = cx[0]->eigenvalue.imag();
    params.b = cx[1]->eigenvalue.real() - shift;
    params.c = cx[1]->eigenvalue.imag();
    order = {cx[0], cx[1]};
  } else if (cx_total == 2) {
    kind = JordanCase::A2;
    shift = cx[0]->eigenvalue.real();
    params.a = cx[0]->eigenvalue.imag();
    order = {cx[0]};
  } else if (cx_total == 1) {
    shift = cx[0]->eigenvalue.real();
    params.a = cx[0]->eigenvalue.imag();
    order = {cx[0]};
    if (re.size() == 2) {
      kind = JordanCase::B1;
      params.b = re[0]->eigenvalue.real() - shift;
      params.c = re[1]->eigenvalue.real() - shift;
      order.push_back(re[0]);
      order.push_back(re[1]);
    } else {
      kind = JordanCase::B2;
      params.b = re[0]->eigenvalue.real() - shift;
      order.push_back(re[0]);
    }
  } else {
    std::vector<int> sorted_sizes = re_sizes;
    std::sort(sorted_sizes.rbegin(), sorted_sizes.rend());
    if (sorted_sizes == std::vector<int>{4}) {
      kind = JordanCase::C1;
      shift = re[0]->eigenvalue.real();
      order = {re[0]};
    } else if (sorted_sizes == std::vector<int>{3, 1}) {
      kind = JordanCase::C2;
      const Block* three = take_size(3);
      const Block* one = take_size(1);
      shift = three->eigenvalue.real();
      params.b = one->eigenvalue.real() - shift;
      order = {three, one};
    } else if (sorted_sizes == std::vector<int>{2, 2}) {
      kind = JordanCase::C3;
      // re is sorted ascending: the smaller eigenvalue is normalized to 0.
      shift = re[0]->eigenvalue.real();
      params.a = re[1]->eigenvalue.real() - shift;
      order = {re[1], re[0]};
    } else if (sorted_sizes == std::vector<int>{2, 1, 1}) {
      kind = JordanCase::C4;
      const Block* two = take_size(2);
      shift = two->eigenvalue.real();
      params.b = re[0]->eigenvalue.real() - shift;
      params.c = re[1]->eigenvalue.real() - shift;
      order = {two, re[0], re[1]};
    } else {
      kind = JordanCase::C5;
      shift = re[0]->eigenvalue.real();
      params.b = re[1]->eigenvalue.real() - shift;
      params.c = re[2]->eigenvalue.real() - shift;
      params.d = re[3]->eigenvalue.real() - shift;
      order = {re[0], re[1], re[2], re[3]};
    }
  }

  Mat4 conj;
  int col = 0;
  for (const Block* b : order)
    for (const Vec4& v : b->columns) conj.col(col++) = v;
  if (col != 4) throw NotClassifiable("inconsistent Jordan structure");

  result.kind = kind;
  result.params = params;
  result.shift = shift;
  result.conjugator = conj;
  const Mat4 canonical = OneParamFlow(kind, params).generator() + shift * Mat4::Identity();
  const Eigen::FullPivLU<Mat4> lu(conj);
  if (!lu.isInvertible()) throw NotClassifiable("Jordan basis is numerically singular");
  result.residual = (lu.solve(a * conj) - canonical).norm();
  return result;
}

// ---------------------------------------------------------------------------

RationalReconstruction reconstruct_rational(double x, long long max_denominator) {
  RationalReconstruction best;
  if (!std::isfinite(x)) return best;
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double y = std::abs(x);
  // Convergents h_n / k_n of the continued fraction of y.
  long long h_prev = 1, h = static_cast<long long>(std::floor(y));
  long long k_prev = 0, k = 1;
  double rem = y - std::floor(y);
  best = {static_cast<long long>(sign) * h, k, std::abs(y - static_cast<double>(h)), false};
  for (int iter = 0; iter < 64 && rem > 0.0; ++iter) {
    const double inv = 1.0 / rem;
    const double term = std::floor(inv);
    if (term > 1e15) break;
    const auto a_n = static_cast<long long>(term);
    const long long h_next = a_n * h + h_prev;
    const long long k_next = a_n * k + k_prev;
    if (k_next > max_denominator) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    rem = inv - term;
    best = {static_cast<long long>(sign) * h, k, std::abs(y - static_cast<double>(h) / static_cast<double>(k)),
            false};
  }
  best.exact = best.error <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, y);
  return best;
}

std::string_view to_string(Compactness c) {
  switch (c) {
    case Compactness::CompactClosure: return "compact";
    case Compactness::NonClosed: return "non-closed";
    case Compactness::ClosedNonCompact: return "closed-non-compact";
  }
  return "?";
}

CompactnessReport compactness_status(const OneParamFlow& flow) {
  const FlowParams& p = flow.params();
  const double unit = std::max({std::abs(p.a), std::abs(p.c), 1.0});
  auto negligible = [unit](double v) { return std::abs(v) <= 1e-12 * unit; };
  switch (flow.kind()) {
    case JordanCase::A1:
      if (negligible(p.b)) {
        const auto r = reconstruct_rational(p.c / p.a);
        if (r.exact) return {Compactness::CompactClosure, 0, r};
        return {Compactness::NonClosed, 2, r};
      }
      return {Compactness::ClosedNonCompact, 0, std::nullopt};
    case JordanCase::B1:
      if (negligible(p.b) && negligible(p.c)) return {Compactness::CompactClosure, 0, std::nullopt};
      return {Compactness::ClosedNonCompact, 0, std::nullopt};
    default:
      return {Compactness::ClosedNonCompact, 0, std::nullopt};
  }
}

// ---------------------------------------------------------------------------

FixedLineSet fixed_lines(const OneParamFlow& flow, double tol) {
  const Mat6 w = second_exterior_derivation(flow.generator());
  const double scale = std::max(w.norm(), 1.0);
  Eigen::EigenSolver<Mat6> es(w, false);
  const auto ev = es.eigenvalues();

  std::vector<double> candidates;
  for (int i = 0; i < 6; ++i)
    if (std::abs(ev(i).imag()) <= 1e-3 * scale) candidates.push_back(ev(i).real());
  std::sort(candidates.begin(), candidates.end());
  std::vector<double> means;
  for (std::size_t i = 0; i < candidates.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < candidates.size() && candidates[j] - candidates[i] <= 1e-3 * scale) sum += candidates[j++];
    means.push_back(sum / static_cast<double>(j - i));
    i = j;
  }

  // Symmetric matrix of the Klein form p01 p23 + p02 p31 + p03 p12.
  Mat6 quadric = Mat6::Zero();
  for (int k = 0; k < 3; ++k) quadric(k, k + 3) = quadric(k + 3, k) = 0.5;

  FixedLineSet out;
  auto add = [&](const Vec6& v) {
    const Line l = plucker_lift(v);
    for (const Line& existing : out.lines)
      if (grassmann_distance(existing, l) <= tol) return;
    out.lines.push_back(l);
  };

  for (double mu : means) {
    const Mat6 shifted = w - mu * Mat6::Identity();
    Eigen::JacobiSVD<Mat6> svd(shifted, Eigen::ComputeFullV);
    int dim = 0;
    for (int i = 0; i < 6; ++i)
      if (svd.singularValues()(i) <= tol * scale) ++dim;
    if (dim == 0) continue;
    const Eigen::Matrix<double, 6, Eigen::Dynamic> basis = svd.matrixV().rightCols(dim);
    const Eigen::MatrixXd form = basis.transpose() * quadric * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(form);
    const auto& lam = sym.eigenvalues();
    const auto& vec = sym.eigenvectors();
    int pos = 0, neg = 0;
    for (int i = 0; i < dim; ++i) {
      if (lam(i) > tol) ++pos;
      else if (lam(i) < -tol) ++neg;
    }
    const int zero = dim - pos - neg;
    if (pos > 0 && neg > 0) {
      if (dim == 2) {
        // lam(0) < 0 < lam(1): isotropic directions y1 : y2 = 1 : +-sqrt(-lam0/lam1).
        const double r = std::sqrt(-lam(0) / lam(1));
        add(basis * (vec.col(0) + r * vec.col(1)));
        add(basis * (vec.col(0) - r * vec.col(1)));
      } else {
        out.continuum = true;
      }
    } else if (zero == 1) {
      for (int i = 0; i < dim; ++i)
        if (std::abs(lam(i)) <= tol) add(basis * vec.col(i));
    } else if (zero >= 2) {
      out.continuum = true;
    }
  }
  return out;
}

}  // namespace pg3
