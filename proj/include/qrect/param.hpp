#pragma once

#include <memory>
#include <vector>

#include "qrect/ccbp.hpp"

namespace qrect {

/// Quintic smoothstep cutoff in units of r_k: 1 on [0, inner], 0 on [outer, inf), C^2 in between.
inline double bump(double t, double inner = config::bump_inner, double outer = config::bump_outer) {
  if (t <= inner) return 1.0;
  if (t >= outer) return 0.0;
  const double s = (t - inner) / (outer - inner);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

struct PartitionWeights {
  std::vector<int> nodes;     // active nodes (bump > 0)
  std::vector<double> theta;  // theta_jk for the active nodes
  double background = 1.0;    // theta_0
};

namespace detail {

inline PartitionWeights weights_from(const CcbpLevel& lv, const std::vector<int>& candidates, const Eigen::Ref<const Vec>& y) {
  PartitionWeights w;
  double sum = 0.0;
  for (int j : candidates) {
    const double phi = bump((y - lv.nodes.col(j)).norm() / lv.radius);
    if (phi <= 0.0) continue;
    w.nodes.push_back(j);
    w.theta.push_back(phi);
    sum += phi;
  }
  const double scale = std::max(1.0, sum);
  double total = 0.0;
  for (double& t : w.theta) total += (t /= scale);
  w.background = std::clamp(1.0 - total, 0.0, 1.0);
  return w;
}

inline Vec apply_sigma(const CcbpLevel& lv, const PartitionWeights& w, const Eigen::Ref<const Vec>& y) {
  Vec out = y;
  for (size_t a = 0; a < w.nodes.size(); ++a) out -= w.theta[a] * lv.planes[static_cast<size_t>(w.nodes[a])].residual(y);
  return out;
}

inline const CcbpLevel& level_at(const Ccbp& c, int k) {
  if (k < 0 || k >= static_cast<int>(c.levels.size())) throw Error(Errc::InvalidInput, "level index out of range");
  return c.levels[static_cast<size_t>(k)];
}

inline std::vector<int> all_nodes(const CcbpLevel& lv) {
  std::vector<int> v(static_cast<size_t>(lv.size()));
  for (size_t j = 0; j < v.size(); ++j) v[j] = static_cast<int>(j);
  return v;
}

}  // namespace detail

inline PartitionWeights partition_weights(const Ccbp& c, int k, const Eigen::Ref<const Vec>& y) {
  const CcbpLevel& lv = detail::level_at(c, k);
  return detail::weights_from(lv, detail::all_nodes(lv), y);
}

/// sigma_k(y) = y + sum_j theta_jk(y) (pi_jk(y) - y).
inline Vec sigma_k(const Ccbp& c, int k, const Eigen::Ref<const Vec>& y) {
  const CcbpLevel& lv = detail::level_at(c, k);
  return detail::apply_sigma(lv, partition_weights(c, k, y), y);
}

struct MapTrace {
  Vec value;                  // f_K(z)
  std::vector<Vec> iterates;  // f_0 = z, f_1, ..., f_K
  std::vector<double> steps;  // |f_{k+1}(z) - f_k(z)|
};

class MapPipeline {
 public:
  /// depth < 0 uses every level of the CCBP.
  explicit MapPipeline(std::shared_ptr<const Ccbp> ccbp, int depth = -1) : ccbp_(std::move(ccbp)) {
    if (!ccbp_) throw Error(Errc::InvalidInput, "MapPipeline: null ccbp");
    const int available = static_cast<int>(ccbp_->levels.size());
    depth_ = depth < 0 ? available : std::min(depth, available);
    for (int k = 0; k < depth_; ++k) {
      const CcbpLevel& lv = ccbp_->levels[static_cast<size_t>(k)];
      index_.emplace_back(lv.nodes, config::bump_outer * lv.radius);
    }
  }

  const Ccbp& ccbp() const noexcept { return *ccbp_; }
  int depth() const noexcept { return depth_; }

  PartitionWeights weights(int k, const Eigen::Ref<const Vec>& y) const {
    const CcbpLevel& lv = detail::level_at(*ccbp_, k);
    return detail::weights_from(lv, index_.at(static_cast<size_t>(k)).ball(y, config::bump_outer * lv.radius), y);
  }

  Vec sigma(int k, const Eigen::Ref<const Vec>& y) const {
    return detail::apply_sigma(detail::level_at(*ccbp_, k), weights(k, y), y);
  }

  MapTrace trace(const Eigen::Ref<const Vec>& z) const {
    MapTrace t;
    t.iterates.reserve(static_cast<size_t>(depth_) + 1);
    t.iterates.emplace_back(z);
    for (int k = 0; k < depth_; ++k) {
      Vec next = sigma(k, t.iterates.back());
      t.steps.push_back((next - t.iterates.back()).norm());
      t.iterates.push_back(std::move(next));
    }
    t.value = t.iterates.back();
    return t;
  }

  Vec map(const Eigen::Ref<const Vec>& z) const {
    Vec y = z;
    for (int k = 0; k < depth_; ++k) y = sigma(k, y);
    return y;
  }

 private:
  std::shared_ptr<const Ccbp> ccbp_;
  int depth_ = 0;
  std::vector<SpatialIndex> index_;
};

inline MapTrace map_f(const MapPipeline& pipeline, const Eigen::Ref<const Vec>& z) { return pipeline.trace(z); }

/// Points of Sigma_0 on a square lattice (spacing h) clipped to the disk of radius rho around
/// the projection of the anchor. Returns the ambient points as columns.
inline Mat sigma0_grid(const Ccbp& c, double rho, double h) {
  if (!(rho > 0.0) || !(h > 0.0)) throw Error(Errc::InvalidInput, "sigma0_grid: radius and spacing must be positive");
  const AffinePlane& s0 = c.sigma0;
  const Vec center = s0.frame().transpose() * (c.anchor - s0.base());
  const int n = static_cast<int>(s0.dim());
  const int half = static_cast<int>(std::floor(rho / h));
  std::vector<Vec> pts;
  std::vector<int> idx(static_cast<size_t>(n), -half);
  while (true) {
    Vec t(n);
    for (int a = 0; a < n; ++a) t(a) = idx[static_cast<size_t>(a)] * h;
    if (t.norm() <= rho) pts.push_back(s0.base() + s0.frame() * (center + t));
    int a = 0;
    while (a < n && idx[static_cast<size_t>(a)] == half) idx[static_cast<size_t>(a)] = -half, ++a;
    if (a == n) break;
    ++idx[static_cast<size_t>(a)];
  }
  Mat out(s0.ambient_dim(), static_cast<Eigen::Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = pts[i];
  return out;
}

/// Deterministic pseudo-random points of Sigma_0 in the disk of radius rho around the anchor projection.
inline Mat sigma0_samples(const Ccbp& c, int count, double rho, uint64_t seed) {
  if (count < 2) throw Error(Errc::InvalidInput, "sigma0_samples: need at least two points");
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const AffinePlane& s0 = c.sigma0;
  const Vec center = s0.frame().transpose() * (c.anchor - s0.base());
  const auto n = s0.dim();
  Mat out(s0.ambient_dim(), count);
  for (int i = 0; i < count; ++i) {
    Vec t(n);
    do {
      for (Eigen::Index a = 0; a < n; ++a) t(a) = (2.0 * unit() - 1.0) * rho;
    } while (t.norm() > rho);
    out.col(i) = s0.base() + s0.frame() * (center + t);
  }
  return out;
}

struct DistortionReport {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  double k_est = 1.0;
  long pairs = 0;
  long skipped = 0;            // coincident inputs
  std::vector<double> budgets; // sum_k eps'_k(f_k(z))^2 per sample
  double max_budget = 0.0;
  std::vector<double> max_step_by_level;
};

inline DistortionReport distortion(const MapPipeline& pipeline, const Mat& samples) {
  if (samples.cols() < 2) throw Error(Errc::DegeneratePair, "distortion: need at least two sample points");
  DistortionReport rep;
  const auto m = samples.cols();
  std::vector<MapTrace> traces;
  traces.reserve(static_cast<size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) traces.push_back(pipeline.trace(samples.col(i)));

  EpsilonPrimeEvaluator eps(pipeline.ccbp());
  rep.max_step_by_level.assign(static_cast<size_t>(pipeline.depth()), 0.0);
  for (const MapTrace& t : traces) {
    double b = 0.0;
    for (int k = 0; k < pipeline.depth(); ++k) {
      const double e = eps(k, t.iterates[static_cast<size_t>(k)]);
      b += e * e;
      rep.max_step_by_level[static_cast<size_t>(k)] = std::max(rep.max_step_by_level[static_cast<size_t>(k)], t.steps[static_cast<size_t>(k)]);
    }
    rep.budgets.push_back(b);
    rep.max_budget = std::max(rep.max_budget, b);
  }

  bool first = true;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double base = (samples.col(i) - samples.col(j)).norm();
      if (base == 0.0) {
        ++rep.skipped;
        continue;
      }
      const double ratio = (traces[static_cast<size_t>(i)].value - traces[static_cast<size_t>(j)].value).norm() / base;
      if (first) rep.min_ratio = rep.max_ratio = ratio, first = false;
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      ++rep.pairs;
    }
  if (rep.pairs == 0) throw Error(Errc::DegeneratePair, "distortion: all sample pairs coincide");
  rep.k_est = rep.min_ratio > 0.0 ? std::max(rep.max_ratio, 1.0 / rep.min_ratio) : std::numeric_limits<double>::infinity();
  return rep;
}

struct ContainmentOptions {
  int grid = 81;            // lattice points per axis across the Sigma_0 disk
  double margin = 1.25;     // the disk radius is margin * theta
  bool symmetric = false;
  int newton_steps = 8;
};

struct ContainmentReport {
  double one_sided = 0.0;   // max over samples in B(anchor, theta) of distance to f_K(grid)
  double reverse = 0.0;     // max over grid images in B(anchor, theta) of distance to the cloud
  double grid_spacing = 0.0;
  long samples = 0;
  long images = 0;
  int worst_sample = -1;
  Vec worst_image;

  double two_sided() const { return std::max(one_sided, reverse); }
};

/// Distance from the cloud inside B(anchor, theta) to f_K(Sigma_0), refined from the nearest
/// grid image by Gauss-Newton on the Sigma_0 coordinates; optionally the reverse sup as well.
inline ContainmentReport containment_check(const WeightedCloud& cloud, const SpatialIndex& index, const MapPipeline& pipeline,
                                           double theta, const ContainmentOptions& opt = {}) {
  if (!(theta > 0.0)) throw Error(Errc::InvalidInput, "containment_check: theta must be positive");
  if (opt.grid < 2) throw Error(Errc::InvalidInput, "containment_check: grid must have at least two points per axis");
  const Ccbp& c = pipeline.ccbp();
  const auto region = index.ball(c.anchor, theta);
  if (region.empty()) throw Error(Errc::EmptyRegion, "containment_check: no samples within theta of the anchor");

  ContainmentReport rep;
  const double rho = opt.margin * theta;
  rep.grid_spacing = 2.0 * rho / (opt.grid - 1);
  const Mat grid = sigma0_grid(c, rho, rep.grid_spacing);
  Mat images(grid.rows(), grid.cols());
  for (Eigen::Index i = 0; i < grid.cols(); ++i) images.col(i) = pipeline.map(grid.col(i));
  const SpatialIndex image_index(images, rep.grid_spacing);

  const AffinePlane& s0 = c.sigma0;
  const auto n = s0.dim();
  const double fd = 1e-3 * rep.grid_spacing;
  auto eval = [&](const Vec& t) { return pipeline.map(s0.base() + s0.frame() * t); };

  for (int q : region) {
    const Vec p = cloud.point(q);
    double best = 0.0;
    const int g = image_index.nearest(p, &best);
    Vec t = s0.frame().transpose() * (grid.col(g) - s0.base());
    Vec ft = images.col(g);
    for (int step = 0; step < opt.newton_steps && best > 0.0; ++step) {
      Mat jac(p.size(), n);
      for (Eigen::Index a = 0; a < n; ++a) {
        Vec tp = t, tm = t;
        tp(a) += fd;
        tm(a) -= fd;
        jac.col(a) = (eval(tp) - eval(tm)) / (2.0 * fd);
      }
      const Vec delta = jac.colPivHouseholderQr().solve(p - ft);
      const Vec t_new = t + delta;
      const Vec f_new = eval(t_new);
      const double d_new = (f_new - p).norm();
      if (!(d_new < best)) break;
      t = t_new, ft = f_new, best = d_new;
    }
    ++rep.samples;
    if (best > rep.one_sided || rep.worst_sample < 0) rep.one_sided = std::max(rep.one_sided, best), rep.worst_sample = q;
  }

  if (opt.symmetric) {
    for (Eigen::Index i = 0; i < images.cols(); ++i) {
      if ((images.col(i) - c.anchor).norm() > theta) continue;
      double d = 0.0;
      index.nearest(images.col(i), &d);
      ++rep.images;
      if (d > rep.reverse) rep.reverse = d, rep.worst_image = images.col(i);
    }
  }
  return rep;
}

}  // namespace qrect
