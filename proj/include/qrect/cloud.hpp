#pragma once

#include <cmath>
#include <string>

#include "qrect/linalg.hpp"

namespace qrect {

/// Finite weighted sample of an n-dimensional set in R^(n+d). Points are stored as columns.
class WeightedCloud {
 public:
  WeightedCloud() = default;
  WeightedCloud(int n, Mat points, Vec weights) : n_(n), points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.cols() == 0) throw Error(Errc::InvalidInput, "WeightedCloud: no points");
    if (n_ < 1 || n_ >= points_.rows())
      throw Error(Errc::InvalidInput, "WeightedCloud: need 1 <= n < ambient dimension");
    if (weights_.size() != points_.cols())
      throw Error(Errc::DimensionMismatch, "WeightedCloud: one weight per point required");
    if (!points_.allFinite()) throw Error(Errc::InvalidInput, "WeightedCloud: non-finite coordinate");
    for (Eigen::Index i = 0; i < weights_.size(); ++i)
      if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i)))
        throw Error(Errc::InvalidInput, "WeightedCloud: weight " + std::to_string(i) + " is not positive");
    total_mass_ = weights_.sum();
  }

  /// Uniform weights summing to total_mass.
  static WeightedCloud uniform(int n, Mat points, double total_mass = 1.0) {
    const auto count = points.cols();
    Vec w = Vec::Constant(count, total_mass / static_cast<double>(std::max<Eigen::Index>(count, 1)));
    return WeightedCloud(n, std::move(points), std::move(w));
  }

  int dim_intrinsic() const noexcept { return n_; }
  int dim_ambient() const noexcept { return static_cast<int>(points_.rows()); }
  int codim() const noexcept { return dim_ambient() - n_; }
  Eigen::Index size() const noexcept { return points_.cols(); }
  const Mat& points() const noexcept { return points_; }
  auto point(Eigen::Index i) const { return points_.col(i); }
  const Vec& weights() const noexcept { return weights_; }
  double weight(Eigen::Index i) const { return weights_(i); }
  double total_mass() const noexcept { return total_mass_; }

  Vec centroid() const { return points_ * weights_ / total_mass_; }

 private:
  int n_ = 0;
  Mat points_;
  Vec weights_;
  double total_mass_ = 0.0;
};

}  // namespace qrect
