#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "qrect/config.hpp"
#include "qrect/error.hpp"

namespace qrect {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double max_asymmetry(const Mat& a) {
  double defect = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      defect = std::max(defect, std::abs(a(i, j) - a(j, i)));
  return defect;
}

/// Symmetric (n+d)x(n+d) matrix holding a tangent projection or an average of projections.
class ProjMatrix {
 public:
  ProjMatrix() = default;
  explicit ProjMatrix(Mat m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw Error(Errc::DimensionMismatch, "projection matrix must be square");
    if (max_asymmetry(m_) > config::symmetry_tol)
      throw Error(Errc::NotSymmetric, "projection matrix is not symmetric");
  }

  const Mat& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// Idempotent with integral trace, within the configured tolerance.
  bool is_orthogonal_projection(double tol = config::idempotence_tol) const {
    const double tr = m_.trace();
    return (m_ * m_ - m_).cwiseAbs().maxCoeff() <= tol && std::abs(tr - std::round(tr)) <= tol;
  }

 private:
  Mat m_;
};

/// Orthogonal projection onto the column span of an orthonormal frame, symmetrized exactly.
inline Mat frame_projection(const Mat& frame) {
  Mat p = frame * frame.transpose();
  return 0.5 * (p + p.transpose());
}

inline double frobenius_distance(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::DimensionMismatch, "frobenius_distance: " + std::to_string(a.rows()) + "x" +
                                             std::to_string(a.cols()) + " vs " +
                                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  return (a - b).norm();
}

inline double frobenius_distance(const ProjMatrix& a, const ProjMatrix& b) {
  return frobenius_distance(a.matrix(), b.matrix());
}

/// Spectral norm of a symmetric matrix by power iteration on A^2 (so +-lambda pairs do not
/// oscillate). The estimate is the Rayleigh quotient and iteration stops on a small residual.
inline double operator_norm_power(const Mat& a, int max_iter = 20000, double tol = 1e-13) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
  v.normalize();
  double mu = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec w = a * (a * v);
    mu = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    if ((w - mu * v).norm() <= tol * nw) break;
    v = w / nw;
  }
  return std::sqrt(std::max(0.0, mu));
}

}  // namespace qrect
