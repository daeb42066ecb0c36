#pragma once

#include <array>
#include <deque>
#include <optional>
#include <vector>

#include "qrect/jacobi.hpp"
#include "qrect/plane.hpp"
#include "qrect/spatial_index.hpp"

namespace qrect {

/// Per-point tangent projections. Invalid entries are skipped by every average.
struct TangentField {
  int n = 0;
  double radius = 0.0;  // estimation radius h; 0 for analytic fields
  std::vector<Mat> proj;
  std::vector<unsigned char> valid;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(proj.size()); }
  bool is_valid(Eigen::Index i) const { return valid[static_cast<size_t>(i)] != 0; }
  const Mat& at(Eigen::Index i) const { return proj[static_cast<size_t>(i)]; }
  Eigen::Index valid_count() const {
    return static_cast<Eigen::Index>(std::count(valid.begin(), valid.end(), 1));
  }
};

inline TangentField constant_field(const WeightedCloud& cloud, const Mat& p) {
  TangentField f;
  f.n = cloud.dim_intrinsic();
  f.proj.assign(static_cast<size_t>(cloud.size()), p);
  f.valid.assign(static_cast<size_t>(cloud.size()), 1);
  return f;
}

struct WeightedMoments {
  double mass = 0.0;
  Vec centroid;
  Mat covariance;
};

inline WeightedMoments weighted_moments(const WeightedCloud& cloud, const std::vector<int>& idx) {
  WeightedMoments m;
  const auto dim = cloud.dim_ambient();
  m.centroid = Vec::Zero(dim);
  m.covariance = Mat::Zero(dim, dim);
  for (int i : idx) {
    m.mass += cloud.weight(i);
    m.centroid += cloud.weight(i) * cloud.point(i);
  }
  if (m.mass <= 0.0) return m;
  m.centroid /= m.mass;
  for (int i : idx) {
    const Vec c = cloud.point(i) - m.centroid;
    m.covariance.noalias() += cloud.weight(i) * c * c.transpose();
  }
  m.covariance /= m.mass;
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  return m;
}

/// Local PCA tangent: projection onto the top-n eigenvectors of the weighted covariance of the
/// h-ball around point i.
inline ProjMatrix estimate_tangent(const WeightedCloud& cloud, const SpatialIndex& index, Eigen::Index i, double h) {
  const int n = cloud.dim_intrinsic();
  const auto idx = index.ball(cloud.point(i), h);
  if (static_cast<int>(idx.size()) < n + 1)
    throw Error(Errc::DegenerateNeighborhood, "estimate_tangent: " + std::to_string(idx.size()) + " points in ball");
  const auto mom = weighted_moments(cloud, idx);
  const auto eig = symmetric_eigen(mom.covariance);
  const double top = eig.values(0);
  if (!(top > 0.0) || eig.values(n - 1) <= 1e-12 * top)
    throw Error(Errc::DegenerateNeighborhood, "estimate_tangent: covariance rank below n");
  const double next = n < cloud.dim_ambient() ? eig.values(n) : 0.0;
  if (eig.values(n - 1) - next < config::gap_tol * top)
    throw Error(Errc::EigengapTooSmall, "estimate_tangent: eigengap below tolerance");
  return ProjMatrix(frame_projection(eig.vectors.leftCols(n)));
}

inline TangentField estimate_tangent_field(const WeightedCloud& cloud, const SpatialIndex& index, double h) {
  TangentField f;
  f.n = cloud.dim_intrinsic();
  f.radius = h;
  f.proj.resize(static_cast<size_t>(cloud.size()));
  f.valid.assign(static_cast<size_t>(cloud.size()), 0);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    try {
      f.proj[static_cast<size_t>(i)] = estimate_tangent(cloud, index, i, h).matrix();
      f.valid[static_cast<size_t>(i)] = 1;
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateNeighborhood && e.code() != Errc::EigengapTooSmall) throw;
      f.proj[static_cast<size_t>(i)] = Mat::Zero(cloud.dim_ambient(), cloud.dim_ambient());
    }
  }
  return f;
}

inline double default_tangent_radius(const WeightedCloud& cloud, const SpatialIndex& index) {
  return config::tangent_radius_factor * mean_nn_spacing(cloud, index);
}

/// Mass-weighted mean of the valid projections over the closed ball: the matrix A_{x,r}.
inline ProjMatrix average_projection(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                     const Eigen::Ref<const Vec>& x, double r) {
  const auto dim = cloud.dim_ambient();
  Mat sum = Mat::Zero(dim, dim);
  double mass = 0.0;
  index.for_each_in_ball(x, r, [&](int i) {
    if (!field.is_valid(i)) return;
    sum += cloud.weight(i) * field.at(i);
    mass += cloud.weight(i);
  });
  if (mass <= 0.0) throw Error(Errc::EmptyBall, "average_projection: no valid tangents in ball");
  sum /= mass;
  return ProjMatrix(0.5 * (sum + sum.transpose()));
}

inline double alpha(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                    const Eigen::Ref<const Vec>& x, double r) {
  const Mat a = average_projection(cloud, index, field, x, r).matrix();
  double acc = 0.0, mass = 0.0;
  index.for_each_in_ball(x, r, [&](int i) {
    if (!field.is_valid(i)) return;
    acc += cloud.weight(i) * (field.at(i) - a).squaredNorm();
    mass += cloud.weight(i);
  });
  return std::sqrt(std::max(0.0, acc / mass));
}

struct AlphaProfile {
  Vec center;
  std::vector<double> scales;
  std::vector<double> alphas;
  double carleson_sum = 0.0;
};

/// alpha at base * 10^-(k-1), k = 1..depth; stops at the first scale whose ball holds fewer than
/// n+1 points.
inline AlphaProfile carleson_profile(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                     const Eigen::Ref<const Vec>& x, int depth, double base) {
  if (depth < 1) throw Error(Errc::InvalidInput, "carleson_profile: depth must be >= 1");
  AlphaProfile prof;
  prof.center = x;
  double r = base;
  for (int k = 1; k <= depth; ++k, r /= 10.0) {
    int count = 0;
    index.for_each_in_ball(x, r, [&](int) { ++count; });
    if (count < cloud.dim_intrinsic() + 1) {
      if (k == 1 && count == 0) throw Error(Errc::EmptyBall, "carleson_profile: coarsest ball is empty");
      break;
    }
    const double a = alpha(cloud, index, field, x, r);
    prof.scales.push_back(r);
    prof.alphas.push_back(a);
    prof.carleson_sum += a * a;
  }
  return prof;
}

/// Unit normals (codimension one), oriented consistently along a neighbor graph.
struct OrientedNormals {
  Mat normals;  // columns
  std::vector<unsigned char> valid;
};

inline Vec unit_normal(const Mat& p) {
  const Mat q = Mat::Identity(p.rows(), p.cols()) - p;
  Eigen::Index best = 0;
  q.colwise().norm().maxCoeff(&best);
  return q.col(best).normalized();
}

/// Breadth-first orientation from the lowest-index valid point of each component; afterwards
/// every graph edge must satisfy <nu_i, nu_j> >= -flip_tol.
inline OrientedNormals orient_normals(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                      double radius) {
  if (cloud.codim() != 1) throw Error(Errc::CodimensionNotOne, "orient_normals: codimension is " + std::to_string(cloud.codim()));
  const auto n_pts = cloud.size();
  OrientedNormals out;
  out.normals = Mat::Zero(cloud.dim_ambient(), n_pts);
  out.valid = field.valid;
  for (Eigen::Index i = 0; i < n_pts; ++i)
    if (field.is_valid(i)) out.normals.col(i) = unit_normal(field.at(i));
  std::vector<unsigned char> seen(static_cast<size_t>(n_pts), 0);
  std::deque<int> queue;
  for (Eigen::Index s = 0; s < n_pts; ++s) {
    if (!field.is_valid(s) || seen[static_cast<size_t>(s)]) continue;
    seen[static_cast<size_t>(s)] = 1;
    queue.push_back(static_cast<int>(s));
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : index.ball(cloud.point(u), radius)) {
        if (!field.is_valid(v) || seen[static_cast<size_t>(v)]) continue;
        if (out.normals.col(u).dot(out.normals.col(v)) < 0.0) out.normals.col(v) *= -1.0;
        seen[static_cast<size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  for (Eigen::Index u = 0; u < n_pts; ++u) {
    if (!field.is_valid(u)) continue;
    index.for_each_in_ball(cloud.point(u), radius, [&](int v) {
      if (v <= u || !field.is_valid(v)) return;
      const double ip = out.normals.col(u).dot(out.normals.col(v));
      if (ip < -config::flip_tol)
        throw Error(Errc::OrientationFailure, "orient_normals: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                                  ") has normal inner product " + std::to_string(ip));
    });
  }
  return out;
}

/// (mean over the ball of |nu - mean nu|^2)^(1/2) for oriented unit normals.
inline double normal_oscillation(const WeightedCloud& cloud, const SpatialIndex& index, const OrientedNormals& normals,
                                 const Eigen::Ref<const Vec>& x, double r) {
  if (cloud.codim() != 1) throw Error(Errc::CodimensionNotOne, "normal_oscillation: codimension is " + std::to_string(cloud.codim()));
  Vec mean = Vec::Zero(cloud.dim_ambient());
  double mass = 0.0;
  const auto idx = index.ball(x, r);
  for (int i : idx) {
    if (!normals.valid[static_cast<size_t>(i)]) continue;
    mean += cloud.weight(i) * normals.normals.col(i);
    mass += cloud.weight(i);
  }
  if (mass <= 0.0) throw Error(Errc::EmptyBall, "normal_oscillation: no valid normals in ball");
  mean /= mass;
  double acc = 0.0;
  for (int i : idx)
    if (normals.valid[static_cast<size_t>(i)]) acc += cloud.weight(i) * (normals.normals.col(i) - mean).squaredNorm();
  return std::sqrt(acc / mass);
}

inline double normal_oscillation(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                 const Eigen::Ref<const Vec>& x, double r, double orientation_radius) {
  return normal_oscillation(cloud, index, orient_normals(cloud, index, field, orientation_radius), x, r);
}

/// Mean of d(y, plane) / r over the closed ball.
inline double beta1(const WeightedCloud& cloud, const SpatialIndex& index, const Eigen::Ref<const Vec>& x, double r,
                    const AffinePlane& plane) {
  double acc = 0.0, mass = 0.0;
  index.for_each_in_ball(x, r, [&](int i) {
    acc += cloud.weight(i) * plane.distance(cloud.point(i));
    mass += cloud.weight(i);
  });
  if (mass <= 0.0) throw Error(Errc::EmptyBall, "beta1: empty ball");
  return acc / (mass * r);
}

/// mu(B_r(x)) / r^n per scale.
inline std::vector<double> ahlfors_ratio(const WeightedCloud& cloud, const SpatialIndex& index,
                                         const Eigen::Ref<const Vec>& x, const std::vector<double>& scales) {
  std::vector<double> out;
  out.reserve(scales.size());
  for (double r : scales) {
    if (!(r > 0.0) || r > 1.0) throw Error(Errc::InvalidInput, "ahlfors_ratio: scales must lie in (0,1]");
    double mass = 0.0;
    index.for_each_in_ball(x, r, [&](int i) { mass += cloud.weight(i); });
    out.push_back(mass / std::pow(r, cloud.dim_intrinsic()));
  }
  return out;
}

struct AhlforsSummary {
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double constant() const { return min_ratio > 0.0 ? std::max(max_ratio, 1.0 / min_ratio) : std::numeric_limits<double>::infinity(); }
  void add(double ratio) { min_ratio = std::min(min_ratio, ratio); max_ratio = std::max(max_ratio, ratio); }
};

namespace detail {

inline double radical_inverse(unsigned index, unsigned base) {
  double f = 1.0, out = 0.0;
  while (index > 0) {
    f /= base;
    out += f * (index % base);
    index /= base;
  }
  return out;
}

inline unsigned nth_prime(int k) {
  static const std::array<unsigned, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  return primes[static_cast<size_t>(k) % primes.size()];
}

/// Lattice of points t in the closed n-ball of radius r, spacing r / half.
inline std::vector<Vec> ball_lattice(int n, double r, int half) {
  std::vector<Vec> out;
  std::vector<int> c(static_cast<size_t>(n), -half);
  while (true) {
    Vec t(n);
    for (int i = 0; i < n; ++i) t(i) = r * c[static_cast<size_t>(i)] / half;
    if (t.squaredNorm() <= r * r * (1.0 + 1e-12)) out.push_back(t);
    int d = 0;
    while (d < n && c[static_cast<size_t>(d)] == half) c[static_cast<size_t>(d)] = -half, ++d;
    if (d == n) break;
    ++c[static_cast<size_t>(d)];
  }
  return out;
}

/// Flips each column so that the ball sample with the largest |<v, p - x>| has a positive
/// coordinate, which makes the basis follow rigid motions of the cloud.
inline void canonical_signs(Mat& vectors, const WeightedCloud& cloud, const std::vector<int>& ball, const Eigen::Ref<const Vec>& x) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    double best = 0.0, sign = 1.0;
    for (int i : ball) {
      const double t = vectors.col(c).dot(cloud.point(i) - x);
      if (std::abs(t) > best) best = std::abs(t), sign = t >= 0.0 ? 1.0 : -1.0;
    }
    vectors.col(c) *= sign;
  }
}

}  // namespace detail

struct FlatnessOptions {
  int grid_half = config::flatness_grid_half;
  int rotations = config::flatness_rotations;
  double max_angle = config::flatness_rotation_angle;
};

struct FlatnessResult {
  double value = 0.0;
  AffinePlane plane;
  double cloud_to_plane = 0.0;
  double plane_to_cloud = 0.0;
};

/// Reifenberg flatness at (x, r): over candidate planes through x (local PCA at r, r/2, r/4 and
/// quasi-random tilts of the r-plane) minimize the larger of the two normalized one-sided
/// deviations. The plane-to-cloud side is evaluated on a lattice of plane points.
inline FlatnessResult reifenberg_flatness_detail(const WeightedCloud& cloud, const SpatialIndex& index,
                                                 const Eigen::Ref<const Vec>& x, double r, const FlatnessOptions& opt = {}) {
  const int n = cloud.dim_intrinsic();
  const int dim = cloud.dim_ambient();
  const auto ball = index.ball(x, r);
  if (ball.empty()) throw Error(Errc::EmptyBall, "reifenberg_flatness: empty ball");

  std::vector<Mat> frames;
  Mat normal_complement;
  for (double rho : {r, r / 2.0, r / 4.0}) {
    const auto sub = index.ball(x, rho);
    if (static_cast<int>(sub.size()) < n + 1) continue;
    auto eig = symmetric_eigen(weighted_moments(cloud, sub).covariance);
    detail::canonical_signs(eig.vectors, cloud, ball, x);
    if (!(eig.values(n - 1) > 1e-12 * eig.values(0))) continue;
    frames.push_back(eig.vectors.leftCols(n));
    if (normal_complement.size() == 0) normal_complement = eig.vectors.rightCols(dim - n);
  }
  if (frames.empty()) throw Error(Errc::DegenerateNeighborhood, "reifenberg_flatness: no usable PCA plane");
  const Mat base_frame = frames.front();
  const int dn = (dim - n) * n;
  const double scale = std::tan(opt.max_angle);
  for (int s = 1; s <= opt.rotations; ++s) {
    Vec u(dn);
    for (int j = 0; j < dn; ++j) u(j) = 2.0 * detail::radical_inverse(static_cast<unsigned>(s), detail::nth_prime(j)) - 1.0;
    u *= scale / std::max(1.0, u.norm());
    const Mat b = Eigen::Map<const Mat>(u.data(), dim - n, n);
    frames.push_back(AffinePlane::spanned_by(Vec(x), base_frame + normal_complement * b).frame());
  }

  const auto lattice = detail::ball_lattice(n, r, n <= 2 ? opt.grid_half : std::max(2, 2 * opt.grid_half / n));
  FlatnessResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const Mat& frame : frames) {
    const AffinePlane plane(Vec(x), frame);
    double s1 = 0.0;
    for (int i : ball) s1 = std::max(s1, plane.distance(cloud.point(i)));
    if (s1 / r >= best.value) continue;
    double s2 = 0.0;
    for (const Vec& t : lattice) {
      double d = 0.0;
      index.nearest(x + frame * t, &d);
      s2 = std::max(s2, d);
      if (s2 / r >= best.value) break;
    }
    const double v = std::max(s1, s2) / r;
    if (v < best.value) best = FlatnessResult{v, plane, s1 / r, s2 / r};
  }
  return best;
}

inline double reifenberg_flatness(const WeightedCloud& cloud, const SpatialIndex& index, const Eigen::Ref<const Vec>& x,
                                  double r, const FlatnessOptions& opt = {}) {
  return reifenberg_flatness_detail(cloud, index, x, r, opt).value;
}

}  // namespace qrect
