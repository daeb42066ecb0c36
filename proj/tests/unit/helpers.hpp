#pragma once

#include <random>

#include "qrect/linalg.hpp"
#include "qrect/plane.hpp"

namespace qtest {

using qrect::Mat;
using qrect::Vec;

inline Mat random_orthogonal(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(dim, dim);
}

inline Mat random_symmetric(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

inline Vec random_vec(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = u(rng);
  return v;
}

inline qrect::AffinePlane random_plane(int n, int dim, const Vec& base, std::mt19937_64& rng) {
  return qrect::AffinePlane(base, random_orthogonal(dim, rng).leftCols(n));
}

inline qrect::Vec Vec2(double a, double b) { return (qrect::Vec(2) << a, b).finished(); }
inline qrect::Vec Vec3(double a, double b, double c) { return (qrect::Vec(3) << a, b, c).finished(); }

}  // namespace qtest

