#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrect/plane_fit.hpp"

namespace qrect {

struct CcbpConfig {
  double lambda = 1.0;
  std::optional<Vec> anchor;   // default: mass centroid
  std::optional<double> unit;  // length of one model unit: r_k = unit * 10^(-k-l0-5)
  double region_factor = config::ccbp_region_factor;
  int depth = config::ccbp_depth;
  double fit_factor = config::ccbp_fit_factor;
  double spacing_factor = config::ccbp_spacing_factor;
};

struct CcbpLevel {
  int k = 0;
  double radius = 0.0;
  std::vector<int> raw_index;   // samples chosen as raw centers
  Mat raw;                      // raw centers, columns
  std::vector<int> node_index;  // snapped samples
  Mat nodes;                    // snapped centers x_jk, columns
  std::vector<AffinePlane> planes;

  Eigen::Index size() const noexcept { return nodes.cols(); }
};

struct Ccbp {
  int l0 = 0;
  double lambda = 1.0;
  double unit = 1.0;
  Vec anchor;
  double region_radius = 0.0;
  double fit_factor = config::ccbp_fit_factor;
  double spacing = 0.0;  // mean nearest-neighbour spacing of the source cloud
  std::vector<CcbpLevel> levels;
  AffinePlane sigma0;
  int sigma0_node = 0;
  std::vector<std::string> warnings;

  double radius(int k) const { return unit * std::pow(10.0, -k - l0 - 5); }
  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

inline int level_offset(double lambda) {
  if (!(lambda >= 1.0)) throw Error(Errc::InvalidInput, "ccbp: lambda must be >= 1");
  return static_cast<int>(std::floor(std::log10(lambda)));
}

namespace detail {

/// Incremental hash grid used for separation tests while a net grows.
class PointGrid {
 public:
  PointGrid(int dim, double cell) : dim_(dim), cell_(cell) {}

  void add(const Eigen::Ref<const Vec>& p) {
    pts_.push_back(p);
    cells_[key(p)].push_back(static_cast<int>(pts_.size() - 1));
  }

  /// True when some stored point q has |q - p| < r (r at most the cell size).
  bool any_closer(const Eigen::Ref<const Vec>& p, double r) const {
    std::vector<int64_t> base(static_cast<size_t>(dim_)), k(static_cast<size_t>(dim_));
    for (int d = 0; d < dim_; ++d) base[static_cast<size_t>(d)] = static_cast<int64_t>(std::floor(p(d) / cell_));
    std::vector<int> off(static_cast<size_t>(dim_), -1);
    while (true) {
      for (int d = 0; d < dim_; ++d) k[static_cast<size_t>(d)] = base[static_cast<size_t>(d)] + off[static_cast<size_t>(d)];
      auto it = cells_.find(hash(k));
      if (it != cells_.end())
        for (int i : it->second)
          if ((pts_[static_cast<size_t>(i)] - p).norm() < r) return true;
      int d = 0;
      while (d < dim_ && off[static_cast<size_t>(d)] == 1) off[static_cast<size_t>(d)] = -1, ++d;
      if (d == dim_) return false;
      ++off[static_cast<size_t>(d)];
    }
  }

 private:
  static uint64_t hash(const std::vector<int64_t>& k) {
    uint64_t h = 1469598103934665603ull;
    for (int64_t v : k) h = (h ^ (static_cast<uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2))) * 1099511628211ull;
    return h;
  }
  uint64_t key(const Eigen::Ref<const Vec>& p) const {
    std::vector<int64_t> k(static_cast<size_t>(dim_));
    for (int d = 0; d < dim_; ++d) k[static_cast<size_t>(d)] = static_cast<int64_t>(std::floor(p(d) / cell_));
    return hash(k);
  }

  int dim_;
  double cell_;
  std::vector<Vec> pts_;
  std::unordered_map<uint64_t, std::vector<int>> cells_;
};

}  // namespace detail

/// Greedy maximal (4 r_k / 3)-separated set of samples in the working region, scanned in index
/// order (at level 0 the sample nearest the anchor goes first). For k >= 1 the candidates are
/// restricted to V^2_{k-1}, the union of the open balls B(x_{i,k-1}, 2 r_{k-1}), shrunk by the
/// snap radius r_k / 6 so that snapped nodes stay inside V^2_{k-1}.
inline std::vector<int> build_net(const WeightedCloud& cloud, const SpatialIndex& index, const Eigen::Ref<const Vec>& anchor,
                                  double region_radius, double r_k, const CcbpLevel* previous) {
  std::vector<int> candidates = index.ball(anchor, region_radius);
  if (previous) {
    const double reach = 2.0 * previous->radius - r_k / 6.0;
    detail::PointGrid prev(cloud.dim_ambient(), reach);
    for (Eigen::Index i = 0; i < previous->size(); ++i) prev.add(previous->nodes.col(i));
    std::erase_if(candidates, [&](int i) { return !prev.any_closer(cloud.point(i), reach); });
  }
  if (candidates.empty()) throw Error(Errc::EmptyRegion, "build_net: no samples in the working region");
  if (!previous) {
    int first = candidates.front();
    double best = (cloud.point(first) - anchor).squaredNorm();
    for (int i : candidates)
      if ((cloud.point(i) - anchor).squaredNorm() < best) first = i, best = (cloud.point(i) - anchor).squaredNorm();
    std::erase(candidates, first);
    candidates.insert(candidates.begin(), first);
  }
  const double sep = 4.0 * r_k / 3.0;
  detail::PointGrid grid(cloud.dim_ambient(), sep);
  std::vector<int> net;
  for (int i : candidates) {
    if (grid.any_closer(cloud.point(i), sep)) continue;
    grid.add(cloud.point(i));
    net.push_back(i);
  }
  return net;
}

struct SnapResult {
  std::vector<int> node_index;
  Mat nodes;
  std::vector<AffinePlane> planes;
};

/// Fits P' at each raw center (ball fit_factor * r_k, dilation lambda), snaps the center to the
/// sample of B(raw, r_k / 6) closest to P' and moves P' through it. Ties go to the sample closest
/// to the raw center, then to the smallest index.
inline SnapResult snap_and_assign(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field,
                                  const Mat& raw, double r_k, double lambda, double fit_factor = config::ccbp_fit_factor) {
  SnapResult out;
  out.nodes.resize(cloud.dim_ambient(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const AffinePlane fit = fit_plane_t1(cloud, index, field, raw.col(j), fit_factor * r_k, lambda);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity(), best_raw = best_d;
    for (int i : index.ball(raw.col(j), r_k / 6.0)) {
      const double dist = fit.distance(cloud.point(i));
      const double to_raw = (cloud.point(i) - raw.col(j)).squaredNorm();
      if (dist < best_d || (dist == best_d && to_raw < best_raw)) best = i, best_d = dist, best_raw = to_raw;
    }
    if (best < 0) throw Error(Errc::SnapFailed, "snap_and_assign: no sample within r_k/6 of raw center " + std::to_string(j));
    out.node_index.push_back(best);
    out.nodes.col(j) = cloud.point(best);
    out.planes.push_back(fit.through(cloud.point(best)));
  }
  return out;
}

/// Default unit: the working region reaches the farthest sample from the anchor.
inline double default_unit(const WeightedCloud& cloud, const Vec& anchor, double lambda, double region_factor) {
  const double reach = (cloud.points().colwise() - anchor).colwise().norm().maxCoeff();
  const double r0 = reach / region_factor;
  return r0 * std::pow(10.0, level_offset(lambda) + 5);
}

inline Ccbp build_ccbp(const WeightedCloud& cloud, const SpatialIndex& index, const TangentField& field, const CcbpConfig& cfg = {}) {
  Ccbp c;
  c.lambda = cfg.lambda;
  c.l0 = level_offset(cfg.lambda);
  c.anchor = cfg.anchor ? *cfg.anchor : cloud.centroid();
  if (c.anchor.size() != cloud.dim_ambient()) throw Error(Errc::DimensionMismatch, "build_ccbp: anchor dimension");
  c.unit = cfg.unit ? *cfg.unit : default_unit(cloud, c.anchor, cfg.lambda, cfg.region_factor);
  if (!(c.unit > 0.0)) throw Error(Errc::InvalidInput, "build_ccbp: unit must be positive");
  if (!(cfg.region_factor > 0.0)) throw Error(Errc::InvalidInput, "build_ccbp: region factor must be positive");
  c.region_radius = cfg.region_factor * c.radius(0);
  c.fit_factor = cfg.fit_factor;
  c.spacing = mean_nn_spacing(cloud, index);

  for (int k = 0; k <= cfg.depth; ++k) {
    const double rk = c.radius(k);
    if (rk < cfg.spacing_factor * c.spacing) {
      c.warnings.push_back("level " + std::to_string(k) + " dropped: r_k = " + std::to_string(rk) + " < " +
                           std::to_string(cfg.spacing_factor) + " x mean spacing " + std::to_string(c.spacing));
      break;
    }
    CcbpLevel level;
    level.k = k;
    level.radius = rk;
    level.raw_index = build_net(cloud, index, c.anchor, c.region_radius, rk, k == 0 ? nullptr : &c.levels.back());
    level.raw.resize(cloud.dim_ambient(), static_cast<Eigen::Index>(level.raw_index.size()));
    for (size_t j = 0; j < level.raw_index.size(); ++j) level.raw.col(static_cast<Eigen::Index>(j)) = cloud.point(level.raw_index[j]);
    auto snap = snap_and_assign(cloud, index, field, level.raw, rk, cfg.lambda, cfg.fit_factor);
    level.node_index = std::move(snap.node_index);
    level.nodes = std::move(snap.nodes);
    level.planes = std::move(snap.planes);
    c.levels.push_back(std::move(level));
  }
  if (c.levels.empty()) throw Error(Errc::EmptyRegion, "build_ccbp: r_0 is below the sampling resolution");

  const CcbpLevel& top = c.levels.front();
  Eigen::Index nearest = 0;
  (top.nodes.colwise() - c.anchor).colwise().squaredNorm().minCoeff(&nearest);
  c.sigma0_node = static_cast<int>(nearest);
  c.sigma0 = top.planes[static_cast<size_t>(nearest)];
  return c;
}

struct PairOffender {
  int level_a = 0, node_a = 0, level_b = 0, node_b = 0;
  double value = 0.0;
};

struct CompatReport {
  double eps_initial = 0.0;     // max_j d(x_j0, Sigma_0), in model units
  double eps_sigma0 = 0.0;      // max_i d_{x_i0, 100 r_0}(P_i0, Sigma_0)
  double eps_same_level = 0.0;  // pairs |x_ik - x_jk| <= 100 r_k, ball 100 r_k
  double eps_cross_level = 0.0; // pairs |x_ik - x_j,k+1| <= 2 r_k, ball 20 r_k
  std::vector<double> same_by_level;
  std::vector<double> cross_by_level;
  PairOffender worst_same, worst_cross, worst_sigma0;
  long same_pairs = 0, cross_pairs = 0;

  double max_eps() const { return std::max({eps_sigma0, eps_same_level, eps_cross_level}); }
};

inline SpatialIndex node_index(const CcbpLevel& level, double cell) { return SpatialIndex(level.nodes, cell); }

inline CompatReport validate_ccbp(const Ccbp& c) {
  CompatReport rep;
  const CcbpLevel& top = c.levels.front();
  for (Eigen::Index j = 0; j < top.size(); ++j) {
    rep.eps_initial = std::max(rep.eps_initial, c.sigma0.distance(top.nodes.col(j)) / c.unit);
    const double r = 100.0 * top.radius;
    double v = std::numeric_limits<double>::infinity();
    if (c.sigma0.distance(top.nodes.col(j)) <= r) v = plane_distance_local(top.planes[static_cast<size_t>(j)], c.sigma0, top.nodes.col(j), r);
    if (j == 0 || v > rep.eps_sigma0) {
      rep.eps_sigma0 = v;
      rep.worst_sigma0 = {0, static_cast<int>(j), 0, c.sigma0_node, v};
    }
  }
  for (size_t li = 0; li < c.levels.size(); ++li) {
    const CcbpLevel& lv = c.levels[li];
    const double reach = 100.0 * lv.radius;
    const SpatialIndex idx = node_index(lv, reach);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < lv.size(); ++i) {
      idx.for_each_in_ball(lv.nodes.col(i), reach, [&](int j) {
        if (j == i) return;
        const double v = plane_distance_local(lv.planes[static_cast<size_t>(i)], lv.planes[static_cast<size_t>(j)], lv.nodes.col(i), reach);
        ++rep.same_pairs;
        worst = std::max(worst, v);
        if (v > rep.eps_same_level) {
          rep.eps_same_level = v;
          rep.worst_same = {lv.k, static_cast<int>(i), lv.k, j, v};
        }
      });
    }
    rep.same_by_level.push_back(worst);
    if (li + 1 == c.levels.size()) continue;
    const CcbpLevel& fine = c.levels[li + 1];
    const SpatialIndex fidx = node_index(fine, 2.0 * lv.radius);
    double worst_cross = 0.0;
    for (Eigen::Index i = 0; i < lv.size(); ++i) {
      fidx.for_each_in_ball(lv.nodes.col(i), 2.0 * lv.radius, [&](int j) {
        const double v = plane_distance_local(lv.planes[static_cast<size_t>(i)], fine.planes[static_cast<size_t>(j)], lv.nodes.col(i), 20.0 * lv.radius);
        ++rep.cross_pairs;
        worst_cross = std::max(worst_cross, v);
        if (v > rep.eps_cross_level) {
          rep.eps_cross_level = v;
          rep.worst_cross = {lv.k, static_cast<int>(i), fine.k, j, v};
        }
      });
    }
    rep.cross_by_level.push_back(worst_cross);
  }
  return rep;
}

/// Evaluates epsilon'_k(y): the sup of d_{x_im, 100 r_m}(P_jk, P_im) over j in level k and i in
/// level m in {k, k-1} with |y - x_jk| <= 10 r_k and |y - x_im| <= 11 r_m. At k = 0 only m = 0
/// takes part. Pair distances are memoized, so one evaluator must not be shared across threads.
class EpsilonPrimeEvaluator {
 public:
  explicit EpsilonPrimeEvaluator(const Ccbp& c) : c_(c) {
    for (const auto& lv : c.levels) index_.emplace_back(lv.nodes, 10.0 * lv.radius);
  }

  double operator()(int k, const Eigen::Ref<const Vec>& y) const {
    if (k < 0) throw Error(Errc::InvalidInput, "epsilon_prime: k must be >= 0");
    if (k >= static_cast<int>(c_.levels.size())) return 0.0;
    const auto active_k = index_[static_cast<size_t>(k)].ball(y, 10.0 * c_.levels[static_cast<size_t>(k)].radius);
    if (active_k.empty()) return 0.0;
    double sup = 0.0;
    for (int m = std::max(0, k - 1); m <= k; ++m) {
      const CcbpLevel& lm = c_.levels[static_cast<size_t>(m)];
      const auto active_m = index_[static_cast<size_t>(m)].ball(y, 11.0 * lm.radius);
      for (int j : active_k)
        for (int i : active_m) sup = std::max(sup, pair(k, j, m, i));
    }
    return sup;
  }

 private:
  double pair(int k, int j, int m, int i) const {
    const uint64_t key = (static_cast<uint64_t>(k) << 56) ^ (static_cast<uint64_t>(m) << 48) ^
                         (static_cast<uint64_t>(static_cast<uint32_t>(j)) << 24) ^ static_cast<uint64_t>(static_cast<uint32_t>(i));
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const CcbpLevel& lk = c_.levels[static_cast<size_t>(k)];
    const CcbpLevel& lm = c_.levels[static_cast<size_t>(m)];
    const double v = plane_distance_local(lk.planes[static_cast<size_t>(j)], lm.planes[static_cast<size_t>(i)], lm.nodes.col(i), 100.0 * lm.radius);
    cache_.emplace(key, v);
    return v;
  }

  const Ccbp& c_;
  std::vector<SpatialIndex> index_;
  mutable std::unordered_map<uint64_t, double> cache_;
};

inline double epsilon_prime(const Ccbp& c, int k, const Eigen::Ref<const Vec>& y) { return EpsilonPrimeEvaluator(c)(k, y); }

}  // namespace qrect
