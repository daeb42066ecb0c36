#pragma once

#include <numeric>
#include <vector>

#include "qrect/linalg.hpp"

namespace qrect {

struct SymmetricEigen {
  Vec values;   // sorted by decreasing absolute value
  Mat vectors;  // column i pairs with values(i)
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver. Stops once the off-diagonal Frobenius mass is at most
/// tol * ||A||_F.
inline SymmetricEigen symmetric_eigen(const Mat& input, double tol = config::jacobi_tol,
                                      int max_sweeps = config::jacobi_max_sweeps) {
  if (input.rows() != input.cols()) throw Error(Errc::DimensionMismatch, "symmetric_eigen: matrix not square");
  const Eigen::Index n = input.rows();
  const double scale_entries = std::max(1.0, input.cwiseAbs().maxCoeff());
  if (max_asymmetry(input) > config::eigen_symmetry_tol * scale_entries)
    throw Error(Errc::NotSymmetric, "symmetric_eigen: symmetry defect " + std::to_string(max_asymmetry(input)));

  Mat a = 0.5 * (input + input.transpose());
  Mat v = Mat::Identity(n, n);
  const double fro = a.norm();
  int sweep = 0;
  auto off_mass = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  if (fro > 0.0) {
    while (off_mass() > tol * fro) {
      if (sweep == max_sweeps)
        throw Error(Errc::NoConvergence, "symmetric_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
      ++sweep;
      for (Eigen::Index p = 0; p < n - 1; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (Eigen::Index k = 0; k < n; ++k) {
            const double akp = a(k, p), akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (Eigen::Index k = 0; k < n; ++k) {
            const double apk = a(p, k), aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return std::abs(a(i, i)) > std::abs(a(j, j)); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<size_t>(i)]);
  }
  out.sweeps = sweep;
  return out;
}

}  // namespace qrect
