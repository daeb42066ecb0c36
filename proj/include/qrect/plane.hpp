#pragma once

#include <limits>
#include <vector>

#include "qrect/jacobi.hpp"
#include "qrect/linalg.hpp"

namespace qrect {

/// Affine plane: base point plus orthonormal frame (columns). The frame may have any number
/// of columns, so the same type also serves lower-dimensional affine subspaces.
class AffinePlane {
 public:
  AffinePlane() = default;
  AffinePlane(Vec base, Mat frame) : base_(std::move(base)), frame_(std::move(frame)) {
    if (frame_.rows() != base_.size())
      throw Error(Errc::DimensionMismatch, "AffinePlane: frame rows differ from base dimension");
    const Mat gram = frame_.transpose() * frame_;
    if (frame_.cols() > 0 && (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > config::frame_tol)
      throw Error(Errc::InvalidInput, "AffinePlane: frame is not orthonormal");
  }

  /// Orthonormalizes the given spanning vectors (modified Gram-Schmidt, two passes).
  static AffinePlane spanned_by(Vec base, const Mat& vectors) {
    Mat q = vectors;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      const double nrm = q.col(j).norm();
      if (!(nrm > 1e-12 * std::max(1.0, vectors.col(j).norm())))
        throw Error(Errc::InvalidInput, "AffinePlane: spanning vectors are linearly dependent");
      q.col(j) /= nrm;
    }
    return AffinePlane(std::move(base), std::move(q));
  }

  const Vec& base() const noexcept { return base_; }
  const Mat& frame() const noexcept { return frame_; }
  Eigen::Index dim() const noexcept { return frame_.cols(); }
  Eigen::Index ambient_dim() const noexcept { return base_.size(); }

  Vec project(const Eigen::Ref<const Vec>& y) const {
    return base_ + frame_ * (frame_.transpose() * (y - base_));
  }
  /// Component of y - base orthogonal to the plane.
  Vec residual(const Eigen::Ref<const Vec>& y) const {
    const Vec off = y - base_;
    return off - frame_ * (frame_.transpose() * off);
  }
  double distance(const Eigen::Ref<const Vec>& y) const { return residual(y).norm(); }

  AffinePlane through(const Eigen::Ref<const Vec>& p) const { return AffinePlane(Vec(p), frame_); }

 private:
  Vec base_;
  Mat frame_;
};

inline ProjMatrix projection_matrix(const AffinePlane& plane) { return ProjMatrix(frame_projection(plane.frame())); }

namespace detail {

/// max over |t| <= rho of |w + M t|^2 (a convex quadratic, so the max sits on the sphere).
inline double max_quadratic_on_ball(const Vec& w, const Mat& m, double rho) {
  const double base = w.squaredNorm();
  if (rho <= 0.0 || m.cols() == 0) return base;
  const Mat h = m.transpose() * m;
  const Vec g = m.transpose() * w;
  const SymmetricEigen eig = symmetric_eigen(h);  // PSD, so |.|-order = value order
  const Eigen::Index n = h.rows();
  const Vec gamma = eig.vectors.transpose() * g;
  const double hmax = eig.values(0);
  const double gnorm = gamma.norm();

  auto eval = [&](const Vec& tau) { return (w + m * (eig.vectors * tau)).squaredNorm(); };

  Vec tau = Vec::Zero(n);
  if (gnorm > 0.0) {
    auto phi = [&](double mu) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double den = mu - eig.values(i);
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        s += gamma(i) * gamma(i) / (den * den);
      }
      return s;
    };
    double lo = hmax;
    double hi = hmax + gnorm / rho;
    while (phi(hi) > rho * rho) hi += (hi - lo) + 1e-300;  // guards against rounding in the initial bracket
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (phi(mid) > rho * rho) lo = mid; else hi = mid;
    }
    for (Eigen::Index i = 0; i < n; ++i) tau(i) = gamma(i) / (hi - eig.values(i));
  }
  // top up along the leading direction so that |tau| = rho (covers the degenerate case)
  const double deficit = rho * rho - tau.squaredNorm();
  if (deficit > 0.0) tau(0) += (gamma(0) >= 0.0 ? 1.0 : -1.0) * std::sqrt(deficit);
  double best = eval(tau);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = rho;
    best = std::max({best, eval(e), eval(-e)});
  }
  return std::max(best, base);
}

inline double one_sided_sup(const AffinePlane& e, const AffinePlane& f, const Eigen::Ref<const Vec>& x, double r) {
  const Vec ce = e.project(x);
  const double rho = std::sqrt(std::max(0.0, r * r - (x - ce).squaredNorm()));
  const Vec w = f.residual(ce);
  const Mat m = e.frame() - f.frame() * (f.frame().transpose() * e.frame());
  return std::sqrt(max_quadratic_on_ball(w, m, rho));
}

}  // namespace detail

/// Normalized local Hausdorff distance d_{x,r}(E, F) between two affine planes, computed
/// analytically from the two one-sided suprema over the plane-ball intersections.
inline double plane_distance_local(const AffinePlane& e, const AffinePlane& f, const Eigen::Ref<const Vec>& x, double r) {
  if (!(r > 0.0)) throw Error(Errc::InvalidInput, "plane_distance_local: r must be positive");
  if (e.ambient_dim() != f.ambient_dim() || e.ambient_dim() != x.size())
    throw Error(Errc::DimensionMismatch, "plane_distance_local: ambient dimensions differ");
  if (e.distance(x) > r || f.distance(x) > r)
    throw Error(Errc::PlaneMissesBall, "plane_distance_local: plane misses the closed ball");
  return std::max(detail::one_sided_sup(e, f, x, r), detail::one_sided_sup(f, e, x, r)) / r;
}

}  // namespace qrect
