#pragma once

#include <functional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "qrect/analysis.hpp"

namespace qrect {

/// Symmetric radius graph; edge weights are the Euclidean edge lengths.
struct NeighborGraph {
  double radius = 0.0;
  std::vector<Eigen::Index> offsets;  // CSR row starts, size N + 1
  std::vector<int> targets;
  std::vector<double> lengths;
  std::vector<int> component;         // component label per vertex
  std::vector<int> component_sizes;

  Eigen::Index size() const noexcept { return offsets.empty() ? 0 : static_cast<Eigen::Index>(offsets.size()) - 1; }
  Eigen::Index degree(int i) const { return offsets[static_cast<size_t>(i) + 1] - offsets[static_cast<size_t>(i)]; }

  template <class F>
  void for_each_neighbor(int i, F&& visit) const {
    for (Eigen::Index e = offsets[static_cast<size_t>(i)]; e < offsets[static_cast<size_t>(i) + 1]; ++e)
      visit(targets[static_cast<size_t>(e)], lengths[static_cast<size_t>(e)]);
  }

  double edge_length(int i, int j) const {
    for (Eigen::Index e = offsets[static_cast<size_t>(i)]; e < offsets[static_cast<size_t>(i) + 1]; ++e)
      if (targets[static_cast<size_t>(e)] == j) return lengths[static_cast<size_t>(e)];
    return -1.0;
  }
};

inline double default_graph_radius(const WeightedCloud& cloud, const SpatialIndex& index) {
  return config::graph_radius_factor * mean_nn_spacing(cloud, index);
}

inline NeighborGraph build_graph(const WeightedCloud& cloud, const SpatialIndex& index, double radius) {
  if (!(radius > 0.0)) throw Error(Errc::InvalidInput, "build_graph: radius must be positive");
  NeighborGraph g;
  g.radius = radius;
  const auto n = cloud.size();
  g.offsets.assign(static_cast<size_t>(n) + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j : index.ball(cloud.point(i), radius)) {
      if (j == i) continue;
      g.targets.push_back(j);
      g.lengths.push_back((cloud.point(j) - cloud.point(i)).norm());
    }
    g.offsets[static_cast<size_t>(i) + 1] = static_cast<Eigen::Index>(g.targets.size());
  }
  g.component.assign(static_cast<size_t>(n), -1);
  std::vector<int> stack;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (g.component[static_cast<size_t>(s)] >= 0) continue;
    const int label = static_cast<int>(g.component_sizes.size());
    int count = 0;
    stack.push_back(static_cast<int>(s));
    g.component[static_cast<size_t>(s)] = label;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      ++count;
      g.for_each_neighbor(v, [&](int w, double) {
        if (g.component[static_cast<size_t>(w)] < 0) g.component[static_cast<size_t>(w)] = label, stack.push_back(w);
      });
    }
    g.component_sizes.push_back(count);
  }
  return g;
}

struct ShortestPaths {
  std::vector<double> dist;
  std::vector<int> parent;

  std::vector<int> path_to(int target) const {
    std::vector<int> p;
    if (!std::isfinite(dist[static_cast<size_t>(target)])) return p;
    for (int v = target; v >= 0; v = parent[static_cast<size_t>(v)]) p.push_back(v);
    std::reverse(p.begin(), p.end());
    return p;
  }
};

inline ShortestPaths shortest_paths(const NeighborGraph& g, int source) {
  const auto n = static_cast<size_t>(g.size());
  ShortestPaths sp{std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1)};
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  sp.dist[static_cast<size_t>(source)] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > sp.dist[static_cast<size_t>(v)]) continue;
    g.for_each_neighbor(v, [&](int w, double len) {
      const double nd = d + len;
      if (nd < sp.dist[static_cast<size_t>(w)]) {
        sp.dist[static_cast<size_t>(w)] = nd;
        sp.parent[static_cast<size_t>(w)] = v;
        heap.emplace(nd, w);
      }
    });
  }
  return sp;
}

inline std::vector<std::pair<int, int>> sample_pairs(Eigen::Index n, int count, uint64_t seed) {
  if (n < 2) throw Error(Errc::InvalidInput, "sample_pairs: need at least two vertices");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<std::pair<int, int>> out;
  while (static_cast<int>(out.size()) < count) {
    const auto a = pick(rng), b = pick(rng);
    if (a != b) out.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  return out;
}

struct QuasiconvexityResult {
  double kappa = 1.0;
  std::pair<int, int> worst{-1, -1};
  std::vector<double> ratios;
};

inline QuasiconvexityResult quasiconvexity(const WeightedCloud& cloud, const NeighborGraph& g,
                                           const std::vector<std::pair<int, int>>& pairs) {
  QuasiconvexityResult res;
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return pairs[a].first < pairs[b].first; });
  res.ratios.assign(pairs.size(), 0.0);
  int current = -1;
  ShortestPaths sp;
  bool any = false;
  for (size_t o : order) {
    const auto [a, b] = pairs[o];
    if (g.component[static_cast<size_t>(a)] != g.component[static_cast<size_t>(b)]) {
      throw Error(Errc::Disconnected, "quasiconvexity: pair (" + std::to_string(a) + ", " + std::to_string(b) +
                                          ") spans components of sizes " +
                                          std::to_string(g.component_sizes[static_cast<size_t>(g.component[static_cast<size_t>(a)])]) + " and " +
                                          std::to_string(g.component_sizes[static_cast<size_t>(g.component[static_cast<size_t>(b)])]));
    }
    const double euclid = (cloud.point(a) - cloud.point(b)).norm();
    if (euclid == 0.0) continue;
    if (a != current) sp = shortest_paths(g, a), current = a;
    const double ratio = sp.dist[static_cast<size_t>(b)] / euclid;
    res.ratios[o] = ratio;
    if (!any || ratio > res.kappa) res.kappa = ratio, res.worst = {a, b}, any = true;
  }
  return res;
}

/// Max over graph neighbours of |f_j - f_i| / |p_j - p_i|.
inline double lip_constant(const WeightedCloud& cloud, const NeighborGraph& g, const Vec& values, int i) {
  if (g.degree(i) == 0) throw Error(Errc::IsolatedVertex, "lip_constant: vertex " + std::to_string(i) + " has no neighbours");
  double best = 0.0;
  g.for_each_neighbor(i, [&](int j, double len) {
    if (len > 0.0) best = std::max(best, std::abs(values(j) - values(i)) / len);
  });
  (void)cloud;
  return best;
}

/// Orthonormal basis of the range of an orthogonal projection of rank n.
inline Mat tangent_basis(const ProjMatrix& p, int n) {
  const SymmetricEigen eig = symmetric_eigen(p.matrix());
  return eig.vectors.leftCols(n);
}

/// Weighted least-squares affine fit of the field over B(p_i, h) in tangent coordinates;
/// the gradient is mapped back and projected, so it lies in the tangent plane.
inline Vec tangential_gradient(const WeightedCloud& cloud, const SpatialIndex& index, const Vec& values, const ProjMatrix& tangent,
                               int i, double h) {
  const int n = cloud.dim_intrinsic();
  const Mat u = tangent_basis(tangent, n);
  const auto nb = index.ball(cloud.point(i), h);
  if (static_cast<int>(nb.size()) < n + 1) throw Error(Errc::DegenerateNeighborhood, "tangential_gradient: too few points in the ball");
  Mat a(static_cast<Eigen::Index>(nb.size()), n + 1);
  Vec b(static_cast<Eigen::Index>(nb.size()));
  for (size_t r = 0; r < nb.size(); ++r) {
    const double sw = std::sqrt(cloud.weight(nb[r]));
    const auto row = static_cast<Eigen::Index>(r);
    a(row, 0) = sw;
    a.row(row).tail(n) = sw * (u.transpose() * (cloud.point(nb[r]) - cloud.point(i))).transpose() / h;
    b(row) = sw * values(nb[r]);
  }
  const Eigen::ColPivHouseholderQR<Mat> qr(a);
  if (qr.rank() < n + 1) throw Error(Errc::DegenerateNeighborhood, "tangential_gradient: neighbourhood does not span the tangent directions");
  const Vec coef = qr.solve(b);
  return tangent.matrix() * (u * coef.tail(n) / h);
}

/// Trapezoid integral of rho along the path minus |f(end) - f(start)|; negative means violated.
inline double upper_gradient_check(const NeighborGraph& g, const Vec& values, const Vec& rho, const std::vector<int>& path) {
  if (path.empty()) throw Error(Errc::InvalidPath, "upper_gradient_check: empty path");
  double integral = 0.0;
  for (size_t e = 0; e + 1 < path.size(); ++e) {
    const double len = g.edge_length(path[e], path[e + 1]);
    if (len < 0.0) throw Error(Errc::InvalidPath, "upper_gradient_check: no edge " + std::to_string(path[e]) + " - " + std::to_string(path[e + 1]));
    integral += 0.5 * (rho(path[e]) + rho(path[e + 1])) * len;
  }
  return integral - std::abs(values(path.back()) - values(path.front()));
}

struct Hinge {
  Vec a;  // unit direction
  double b = 0.0;
};

enum class FieldKind { Linear, Coordinate, Distance, SquaredNorm, HingeSum };

/// Reproducible description of a test function on R^D.
struct ScalarField {
  FieldKind kind = FieldKind::Linear;
  Vec a;                     // linear coefficients
  int coordinate = 0;
  Vec point;                 // distance base point
  std::vector<Hinge> hinges;

  double operator()(const Eigen::Ref<const Vec>& y) const {
    switch (kind) {
      case FieldKind::Linear: return a.dot(y);
      case FieldKind::Coordinate: return y(coordinate);
      case FieldKind::Distance: return (y - point).norm();
      case FieldKind::SquaredNorm: return y.squaredNorm();
      case FieldKind::HingeSum: {
        double s = 0.0;
        for (const Hinge& h : hinges) s += std::max(0.0, h.a.dot(y) + h.b);
        return s;
      }
    }
    return 0.0;
  }

  Vec evaluate(const WeightedCloud& cloud) const {
    Vec v(cloud.size());
    for (Eigen::Index i = 0; i < cloud.size(); ++i) v(i) = (*this)(cloud.point(i));
    if (!v.allFinite()) throw Error(Errc::InvalidInput, "ScalarField: non-finite value");
    return v;
  }

  static ScalarField linear(Vec a) { ScalarField f; f.kind = FieldKind::Linear; f.a = std::move(a); return f; }
  static ScalarField coord(int c) { ScalarField f; f.kind = FieldKind::Coordinate; f.coordinate = c; return f; }
  static ScalarField distance_to(Vec p) { ScalarField f; f.kind = FieldKind::Distance; f.point = std::move(p); return f; }
  static ScalarField squared_norm() { ScalarField f; f.kind = FieldKind::SquaredNorm; return f; }
};

/// Sum of `count` hinges max(0, <a, y - center> + b) with |a| = 1 and b uniform in [-spread, spread].
inline ScalarField random_lipschitz(const Vec& center, double spread, uint64_t seed, int count = config::hinge_count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> off(-spread, spread);
  ScalarField f;
  f.kind = FieldKind::HingeSum;
  for (int h = 0; h < count; ++h) {
    Vec a(center.size());
    do {
      for (Eigen::Index d = 0; d < a.size(); ++d) a(d) = gauss(rng);
    } while (a.norm() < 1e-12);
    a.normalize();
    f.hinges.push_back({a, off(rng) - a.dot(center)});
  }
  return f;
}

enum class GradMode { Tangential, Lip, GivenRho };

inline GradMode grad_mode_from_string(const std::string& s) {
  if (s == "tangential") return GradMode::Tangential;
  if (s == "lip") return GradMode::Lip;
  if (s == "given-rho" || s == "given_rho") return GradMode::GivenRho;
  throw Error(Errc::InvalidInput, "unknown gradient mode: " + s);
}

/// Per-point gradient magnitudes for the tangential and Lip modes.
inline Vec gradient_field(const WeightedCloud& cloud, const SpatialIndex& index, const NeighborGraph& g, const TangentField& tangents,
                          const Vec& values, GradMode mode, double h) {
  Vec out(cloud.size());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (mode == GradMode::Lip) {
      out(i) = lip_constant(cloud, g, values, static_cast<int>(i));
    } else if (mode == GradMode::Tangential) {
      if (!tangents.is_valid(i)) throw Error(Errc::DegenerateNeighborhood, "gradient_field: no tangent at point " + std::to_string(i));
      out(i) = tangential_gradient(cloud, index, values, ProjMatrix(tangents.at(i)), static_cast<int>(i), h).norm();
    } else {
      throw Error(Errc::InvalidInput, "gradient_field: given-rho mode takes rho from the caller");
    }
  }
  return out;
}

struct PoincareTerms {
  double lhs = 0.0;  // mean over B_r of |f - f_{x,r}|
  double rhs = 0.0;  // (mean over B_{lambda r} of rho^p)^{1/p}
  double ratio = 0.0;
};

inline PoincareTerms poincare_terms(const WeightedCloud& cloud, const SpatialIndex& index, const Vec& values, const Vec& rho,
                                    const Eigen::Ref<const Vec>& x, double r, double lambda, double p = config::poincare_p) {
  if (!(r > 0.0) || !(lambda >= 1.0) || !(p >= 1.0)) throw Error(Errc::InvalidInput, "poincare_ratio: need r > 0, lambda >= 1, p >= 1");
  const BallQuery inner = ball_query(cloud, index, x, r);
  const BallQuery outer = ball_query(cloud, index, x, lambda * r);
  if (inner.indices.empty() || outer.indices.empty()) throw Error(Errc::EmptyBall, "poincare_ratio: empty ball");
  // centered on one sample so that a constant field gives an exact zero
  const double shift = values(inner.indices.front());
  double mean = 0.0, scale = 0.0;
  for (int i : inner.indices) mean += cloud.weight(i) * (values(i) - shift), scale = std::max(scale, std::abs(values(i)));
  mean /= inner.mass;
  PoincareTerms t;
  for (int i : inner.indices) t.lhs += cloud.weight(i) * std::abs(values(i) - shift - mean);
  t.lhs /= inner.mass;
  double acc = 0.0;
  for (int i : outer.indices) acc += cloud.weight(i) * std::pow(rho(i), p);
  t.rhs = std::pow(acc / outer.mass, 1.0 / p);
  if (t.lhs <= config::zero_lhs_tol * std::max(1.0, scale)) {
    t.lhs = 0.0;
    return t;
  }
  if (!(t.rhs > 0.0)) throw Error(Errc::ZeroGradientNonconstant, "poincare_ratio: gradient vanishes on a nonconstant function");
  t.ratio = t.lhs / (r * t.rhs);
  return t;
}

inline double poincare_ratio(const WeightedCloud& cloud, const SpatialIndex& index, const Vec& values, const Vec& rho,
                             const Eigen::Ref<const Vec>& x, double r, double lambda, double p = config::poincare_p) {
  return poincare_terms(cloud, index, values, rho, x, r, lambda, p).ratio;
}

}  // namespace qrect
