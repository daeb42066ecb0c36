#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "qrect/cloud.hpp"

namespace qrect {

/// Uniform hashed grid over a point set. Closed-ball queries return exactly the points with
/// |p - x|^2 <= r^2, the same predicate a linear scan uses.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  SpatialIndex(const Mat& points, double cell) : pts_(points), cell_(cell) {
    if (!(cell_ > 0.0) || !std::isfinite(cell_)) throw Error(Errc::InvalidInput, "SpatialIndex: cell size must be positive");
    const auto dim = pts_.rows();
    kmin_.assign(static_cast<size_t>(dim), std::numeric_limits<int64_t>::max());
    kmax_.assign(static_cast<size_t>(dim), std::numeric_limits<int64_t>::min());
    std::vector<int64_t> key(static_cast<size_t>(dim));
    for (Eigen::Index i = 0; i < pts_.cols(); ++i) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        key[static_cast<size_t>(d)] = coord(pts_(d, i));
        kmin_[static_cast<size_t>(d)] = std::min(kmin_[static_cast<size_t>(d)], key[static_cast<size_t>(d)]);
        kmax_[static_cast<size_t>(d)] = std::max(kmax_[static_cast<size_t>(d)], key[static_cast<size_t>(d)]);
      }
      const int c = find_or_add(key);
      cells_[static_cast<size_t>(c)].members.push_back(static_cast<int>(i));
    }
  }

  SpatialIndex(const WeightedCloud& cloud, double cell) : SpatialIndex(cloud.points(), cell) {}

  double cell_size() const noexcept { return cell_; }
  Eigen::Index size() const noexcept { return pts_.cols(); }
  const Mat& points() const noexcept { return pts_; }

  template <class F>
  void for_each_in_ball(const Eigen::Ref<const Vec>& x, double r, F&& visit) const {
    if (pts_.cols() == 0 || !(r >= 0.0)) return;
    const auto dim = static_cast<size_t>(pts_.rows());
    const double r2 = r * r;
    std::vector<int64_t> lo(dim), hi(dim);
    double count = 1.0;
    for (size_t d = 0; d < dim; ++d) {
      lo[d] = std::max(kmin_[d], coord(x(static_cast<Eigen::Index>(d)) - r) - 1);
      hi[d] = std::min(kmax_[d], coord(x(static_cast<Eigen::Index>(d)) + r) + 1);
      if (lo[d] > hi[d]) return;
      count *= static_cast<double>(hi[d] - lo[d] + 1);
    }
    auto scan = [&](const Cell& cell) {
      for (int i : cell.members)
        if ((pts_.col(i) - x).squaredNorm() <= r2) visit(i);
    };
    if (count > static_cast<double>(cells_.size())) {
      for (const Cell& cell : cells_) {
        bool inside = true;
        for (size_t d = 0; d < dim && inside; ++d) inside = cell.key[d] >= lo[d] && cell.key[d] <= hi[d];
        if (inside) scan(cell);
      }
      return;
    }
    std::vector<int64_t> key = lo;
    while (true) {
      auto it = lookup_.find(hash(key));
      if (it != lookup_.end())
        for (int c : it->second)
          if (cells_[static_cast<size_t>(c)].key == key) scan(cells_[static_cast<size_t>(c)]);
      size_t d = 0;
      while (d < dim && key[d] == hi[d]) key[d] = lo[d], ++d;
      if (d == dim) break;
      ++key[d];
    }
  }

  /// Indices in the closed ball, ascending.
  std::vector<int> ball(const Eigen::Ref<const Vec>& x, double r) const {
    std::vector<int> out;
    for_each_in_ball(x, r, [&](int i) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Nearest point (smallest index on ties); returns -1 for an empty index.
  int nearest(const Eigen::Ref<const Vec>& x, double* dist = nullptr) const {
    if (pts_.cols() == 0) return -1;
    double rad = cell_;
    while (true) {
      int best = -1;
      double best_d2 = std::numeric_limits<double>::infinity();
      for_each_in_ball(x, rad, [&](int i) {
        const double d2 = (pts_.col(i) - x).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && i < best)) best = i, best_d2 = d2;
      });
      if (best >= 0) {
        if (dist) *dist = std::sqrt(best_d2);
        return best;
      }
      rad *= 2.0;
    }
  }

 private:
  struct Cell {
    std::vector<int64_t> key;
    std::vector<int> members;
  };

  int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v / cell_)); }

  static uint64_t hash(const std::vector<int64_t>& key) {
    uint64_t h = 1469598103934665603ull;
    for (int64_t k : key) {
      h ^= static_cast<uint64_t>(k) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 1099511628211ull;
    }
    return h;
  }

  int find_or_add(const std::vector<int64_t>& key) {
    auto& bucket = lookup_[hash(key)];
    for (int c : bucket)
      if (cells_[static_cast<size_t>(c)].key == key) return c;
    cells_.push_back(Cell{key, {}});
    bucket.push_back(static_cast<int>(cells_.size() - 1));
    return static_cast<int>(cells_.size() - 1);
  }

  Mat pts_;
  double cell_ = 1.0;
  std::vector<Cell> cells_;
  std::unordered_map<uint64_t, std::vector<int>> lookup_;
  std::vector<int64_t> kmin_, kmax_;
};

struct BallQuery {
  std::vector<int> indices;
  double mass = 0.0;
};

inline BallQuery ball_query(const WeightedCloud& cloud, const SpatialIndex& index, const Eigen::Ref<const Vec>& x, double r) {
  if (!(r > 0.0)) throw Error(Errc::InvalidInput, "ball_query: r must be positive");
  BallQuery q;
  q.indices = index.ball(x, r);
  for (int i : q.indices) q.mass += cloud.weight(i);
  return q;
}

/// Rough spacing guess from the bounding box, used to size grid cells before any query is possible.
inline double bbox_spacing(const WeightedCloud& cloud) {
  const Vec ext = cloud.points().rowwise().maxCoeff() - cloud.points().rowwise().minCoeff();
  std::vector<double> e(ext.data(), ext.data() + ext.size());
  std::sort(e.rbegin(), e.rend());
  double vol = 1.0;
  int used = 0;
  for (int i = 0; i < cloud.dim_intrinsic() && i < static_cast<int>(e.size()); ++i)
    if (e[static_cast<size_t>(i)] > 0.0) vol *= e[static_cast<size_t>(i)], ++used;
  if (used == 0) return 1.0;
  return std::pow(vol / static_cast<double>(cloud.size()), 1.0 / used);
}

inline SpatialIndex make_index(const WeightedCloud& cloud) { return SpatialIndex(cloud, 2.0 * bbox_spacing(cloud)); }

/// Mean distance from each point to its nearest other point.
inline double mean_nn_spacing(const WeightedCloud& cloud, const SpatialIndex& index) {
  if (cloud.size() < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    double rad = index.cell_size();
    double best = std::numeric_limits<double>::infinity();
    while (!std::isfinite(best)) {
      index.for_each_in_ball(cloud.point(i), rad, [&](int j) {
        if (j != i) best = std::min(best, (cloud.point(j) - cloud.point(i)).norm());
      });
      rad *= 2.0;
    }
    total += best;
  }
  return total / static_cast<double>(cloud.size());
}

}  // namespace qrect
