#pragma once

#include "qrect/analysis.hpp"

namespace qrect {

struct EigenSplit {
  Vec big_values;
  Vec small_values;
  Mat big_vectors;
  Mat small_vectors;
  double delta = 0.0;       // ||pi_V - L||_op
  bool disc_certified = false;  // Gershgorin discs in the V-adapted basis separate the two groups
};

inline double admissible_delta(int n, int d) { return 1.0 / (8.0 * (n + d - 1)); }

/// Eigenvalue split of a symmetric perturbation L of the projection onto V: n eigenvalues with
/// |lambda| >= 1-(n+d)delta and d with |lambda| <= (n+d)delta.
inline EigenSplit gershgorin_split(const Mat& l, int n, int d, const AffinePlane& v) {
  const int dim = n + d;
  if (l.rows() != dim || l.cols() != dim || v.ambient_dim() != dim || v.dim() != n)
    throw Error(Errc::DimensionMismatch, "gershgorin_split: shapes do not match (n, d)");
  const Mat pv = frame_projection(v.frame());
  const auto pert = symmetric_eigen(pv - l);
  EigenSplit out;
  out.delta = std::abs(pert.values(0));
  const double delta0 = admissible_delta(n, d);
  if (out.delta > delta0)
    throw Error(Errc::DeltaTooLarge, "gershgorin_split: delta " + std::to_string(out.delta) + " exceeds " + std::to_string(delta0));
  const double band = dim * out.delta;

  // Gershgorin discs of L written in an orthonormal basis adapted to V
  Mat basis(dim, dim);
  basis.leftCols(n) = v.frame();
  basis.rightCols(d) = symmetric_eigen(Mat::Identity(dim, dim) - pv).vectors.leftCols(d);
  const Mat lw = basis.transpose() * l * basis;
  out.disc_certified = true;
  for (int i = 0; i < dim; ++i) {
    const double radius = lw.row(i).cwiseAbs().sum() - std::abs(lw(i, i));
    const double target = i < n ? 1.0 : 0.0;
    if (std::abs(lw(i, i) - target) + radius > band * (1.0 + 1e-12) + 1e-15) out.disc_certified = false;
  }

  const auto eig = symmetric_eigen(l);
  out.big_values = eig.values.head(n);
  out.small_values = eig.values.tail(d);
  out.big_vectors = eig.vectors.leftCols(n);
  out.small_vectors = eig.vectors.rightCols(d);
  const double slack = 1e-12;
  for (int i = 0; i < n; ++i)
    if (std::abs(out.big_values(i)) < 1.0 - band - slack)
      throw Error(Errc::SplitViolation, "gershgorin_split: big eigenvalue " + std::to_string(out.big_values(i)) + " below band");
  for (int i = 0; i < d; ++i)
    if (std::abs(out.small_values(i)) > band + slack)
      throw Error(Errc::SplitViolation, "gershgorin_split: small eigenvalue " + std::to_string(out.small_values(i)) + " above band");
  return out;
}

struct T1Fit {
  AffinePlane plane;
  Vec eigenvalues;  // of A_{x, lambda r}, by decreasing |.|
  Mat eigenvectors;
  double gap = 0.0;
};

/// Center-of-mass plane: through the centroid of the closed r-ball, spanned by the n leading
/// eigenvectors of A_{x, lambda r}.
inline T1Fit fit_plane_t1_detail(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                 const Eigen::Ref<const Vec>& x, double r, double lambda) {
  const int n = cloud.dim_intrinsic();
  const auto mom = weighted_moments(cloud, index.ball(x, r));
  if (mom.mass <= 0.0) throw Error(Errc::EmptyBall, "fit_plane_t1: empty ball");
  const Mat a = average_projection(cloud, index, field, x, lambda * r).matrix();
  const auto eig = symmetric_eigen(a);
  const double gap = std::abs(eig.values(n - 1)) - std::abs(eig.values(n));
  if (gap < config::t1_eigengap)
    throw Error(Errc::EigengapTooSmall, "fit_plane_t1: eigengap " + std::to_string(gap) + " below " + std::to_string(config::t1_eigengap));
  return T1Fit{AffinePlane(mom.centroid, eig.vectors.leftCols(n)), eig.values, eig.vectors, gap};
}

inline AffinePlane fit_plane_t1(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                const Eigen::Ref<const Vec>& x, double r, double lambda) {
  return fit_plane_t1_detail(cloud, index, field, x, r, lambda).plane;
}

struct Witness {
  int index = -1;
  Vec point;
  double distance = 0.0;
};

/// A sample of the closed r0-ball far from a k-dimensional affine subspace (k <= n-1):
/// d(x, V) >= 11 c0 r0 and B(x, c0 r0) inside B(x0, 2 r0). Picks the farthest qualifying sample.
inline Witness find_point_off_subspace(const WeightedCloud& cloud, const SpatialIndex& index, const Eigen::Ref<const Vec>& x0,
                                       double r0, const AffinePlane& v, double c0 = config::c0) {
  if (v.dim() > cloud.dim_intrinsic() - 1)
    throw Error(Errc::PreconditionViolation, "find_point_off_subspace: subspace dimension " + std::to_string(v.dim()) +
                                                 " exceeds n-1 = " + std::to_string(cloud.dim_intrinsic() - 1));
  const double need = 11.0 * c0 * r0;
  Witness best;
  double best_any = 0.0;
  for (int i : index.ball(x0, r0)) {
    const double dist = v.distance(cloud.point(i));
    best_any = std::max(best_any, dist);
    const bool contained = (cloud.point(i) - x0).norm() + c0 * r0 <= 2.0 * r0;
    if (dist >= need && contained && dist > best.distance) best = Witness{i, cloud.point(i), dist};
  }
  if (best.index < 0)
    throw Error(Errc::NoWitness, "find_point_off_subspace: best distance " + std::to_string(best_any) + " < required " + std::to_string(need));
  return best;
}

/// Coefficients of v in the basis u_1..u_n (columns), after checking the quantitative
/// independence |u_j| <= K0 R, |u_1| >= k0 R, d(u_j, span{u_1..u_{j-1}}) >= k0 R.
inline Vec span_coefficients(const Mat& u, const Eigen::Ref<const Vec>& v, double big_r, double k0, double k_big0) {
  if (u.rows() != v.size()) throw Error(Errc::DimensionMismatch, "span_coefficients: vector sizes differ");
  if (!(0.0 < k0 && k0 < k_big0) || !(big_r > 0.0)) throw Error(Errc::InvalidInput, "span_coefficients: need 0 < k0 < K0, R > 0");
  const auto cols = u.cols();
  Mat q = Mat::Zero(u.rows(), cols);
  Mat t = Mat::Zero(cols, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (u.col(j).norm() > k_big0 * big_r)
      throw Error(Errc::IllConditioned, "span_coefficients: |u_" + std::to_string(j + 1) + "| exceeds K0 R");
    Vec w = u.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) {
        const double c = q.col(i).dot(w);
        t(i, j) += c;
        w -= c * q.col(i);
      }
    const double off = w.norm();
    if (off < k0 * big_r)
      throw Error(Errc::IllConditioned, "span_coefficients: u_" + std::to_string(j + 1) + " within k0 R of the previous span");
    t(j, j) = off;
    q.col(j) = w / off;
  }
  const Vec coords = q.transpose() * v;
  const double residual = (v - q * coords).norm();
  if (residual > config::span_residual_tol * std::max(v.norm(), std::numeric_limits<double>::min()))
    throw Error(Errc::NotInSpan, "span_coefficients: residual " + std::to_string(residual));
  return t.triangularView<Eigen::Upper>().solve(coords);
}

/// Worst-case |beta_j| R / |v| for admissible systems: (1/k0) (1 + K0/k0)^(n-1), from back
/// substitution through the triangular factor.
inline double span_coefficient_bound(int n, double k0, double k_big0) {
  return std::pow(1.0 + k_big0 / k0, n - 1) / k0;
}

}  // namespace qrect
