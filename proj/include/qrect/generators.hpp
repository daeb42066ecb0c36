#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qrect/analysis.hpp"

namespace qrect {

enum class GeneratorKind { PlaneDisk, SphereCap, LipschitzGraph, PuncturedDisk, TwoPlaneBlend };

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::PlaneDisk: return "plane_disk";
    case GeneratorKind::SphereCap: return "sphere_cap";
    case GeneratorKind::LipschitzGraph: return "lipschitz_graph";
    case GeneratorKind::PuncturedDisk: return "punctured_disk";
    case GeneratorKind::TwoPlaneBlend: return "two_plane_blend";
  }
  return "unknown";
}

inline GeneratorKind generator_kind_from_string(const std::string& s) {
  for (auto k : {GeneratorKind::PlaneDisk, GeneratorKind::SphereCap, GeneratorKind::LipschitzGraph,
                 GeneratorKind::PuncturedDisk, GeneratorKind::TwoPlaneBlend})
    if (to_string(k) == s) return k;
  throw Error(Errc::BadSpec, "unknown generator kind '" + s + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::PlaneDisk;
  int n = 2;
  int d = 1;
  int count = 2000;         // target sample count of the base grid
  double amplitude = 0.0;   // lipschitz_graph height scale
  std::uint64_t seed = 1;
  double radius = 1.0;      // disk radius, or sphere radius for sphere_cap
  double cap_angle = std::numbers::pi / 3.0;
  double jitter = 0.5;      // jitter amplitude as a fraction of the cell side
  int refine_levels = 0;    // dyadic refinement shells around the parameter origin
  int refine_cells = 12;    // inner refinement radius, in base cells
  double hole_side = 0.1;   // punctured_disk: side of the removed square
  double hole_center = 0.5; // punctured_disk: first coordinate of the square's center
  double blend_c = 1.0;     // two_plane_blend: alpha(0, 10^-k) = blend_c * 10^-k
  int blend_depth = 6;
};

struct Generated {
  WeightedCloud cloud;
  TangentField tangents;  // analytic; for two_plane_blend it is the synthetic field
  GeneratorSpec spec;
};

namespace detail {

class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : eng_(seed) {}
  double operator()() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

inline double ball_volume(int n, double r) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(r, n);
}

struct ParamSample {
  Vec u;
  double cell_volume;
};

/// Stratified jittered lattice over the parameter ball |u| < extent, with optional dyadic
/// refinement toward u = 0. Cells are assigned to a shell by their centers.
inline std::vector<ParamSample> stratified_samples(const GeneratorSpec& spec, double extent, double domain_volume,
                                                   const std::function<bool(const Vec&)>& inside) {
  const int n = spec.n;
  const double s0 = std::pow(domain_volume / spec.count, 1.0 / n);
  UnitRng rng(spec.seed);
  std::vector<ParamSample> out;
  const int levels = std::max(0, spec.refine_levels);
  const double rho1 = spec.refine_cells * s0;
  for (int level = 0; level <= levels; ++level) {
    const double s = s0 * std::pow(0.5, level);
    const double outer = level == 0 ? extent : rho1 * std::pow(0.5, level - 1);
    const double inner = (levels == 0 || level == levels) ? 0.0 : rho1 * std::pow(0.5, level);
    const auto half = static_cast<long>(std::ceil(outer / s));
    std::vector<long> c(static_cast<size_t>(n), -half);
    while (true) {
      Vec center(n), u(n);
      for (int i = 0; i < n; ++i) center(i) = (static_cast<double>(c[static_cast<size_t>(i)]) + 0.5) * s;
      for (int i = 0; i < n; ++i) u(i) = center(i) + spec.jitter * s * (rng() - 0.5);
      const double cn = center.norm();
      if (cn < outer && cn >= inner && inside(u)) out.push_back({u, std::pow(s, n)});
      int dd = 0;
      while (dd < n && c[static_cast<size_t>(dd)] == half - 1) c[static_cast<size_t>(dd)] = -half, ++dd;
      if (dd == n) break;
      ++c[static_cast<size_t>(dd)];
    }
  }
  return out;
}

/// Graph heights z_j(u) = a * sum_t sin(<w_jt, u> + phase_jt) / t and their gradients.
inline void graph_height(const GeneratorSpec& spec, const Vec& u, Vec& z, Mat& jac) {
  const int n = spec.n;
  z = Vec::Zero(spec.d);
  jac = Mat::Zero(spec.d, n);
  for (int j = 0; j < spec.d; ++j) {
    for (int t = 1; t <= 3; ++t) {
      Vec w(n);
      for (int i = 0; i < n; ++i) w(i) = (((i + 2 * j + 3 * t) % 2) ? -1.0 : 1.0) * (1.1 + 0.6 * ((i + j + t) % 3));
      const double phase = 0.4 + 1.3 * t + 0.9 * j;
      const double arg = w.dot(u) + phase;
      z(j) += spec.amplitude * std::sin(arg) / t;
      jac.row(j) += spec.amplitude * std::cos(arg) / t * w.transpose();
    }
  }
}

}  // namespace detail

inline Generated generate(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw Error(Errc::BadSpec, "generate: need n >= 1 and d >= 1");
  if (spec.count < 1) throw Error(Errc::BadSpec, "generate: count must be positive");
  if (!(spec.jitter >= 0.0 && spec.jitter <= 1.0)) throw Error(Errc::BadSpec, "generate: jitter must lie in [0,1]");
  if (spec.refine_levels < 0 || spec.refine_cells < 1) throw Error(Errc::BadSpec, "generate: bad refinement settings");
  const int n = spec.n, d = spec.d, dim = n + d;

  std::vector<Vec> pts;
  std::vector<double> wts;
  std::vector<Mat> tang;
  double exact_mass = -1.0;

  auto flat_tangent = [&] {
    Mat p = Mat::Zero(dim, dim);
    p.topLeftCorner(n, n).setIdentity();
    return p;
  };
  auto embed = [&](const Vec& u) {
    Vec p = Vec::Zero(dim);
    p.head(n) = u;
    return p;
  };

  switch (spec.kind) {
    case GeneratorKind::PlaneDisk: {
      if (!(spec.radius > 0.0)) throw Error(Errc::BadSpec, "plane_disk: radius must be positive");
      const double vol = detail::ball_volume(n, spec.radius);
      for (auto& s : detail::stratified_samples(spec, spec.radius, vol, [&](const Vec& u) { return u.norm() <= spec.radius; })) {
        pts.push_back(embed(s.u));
        wts.push_back(s.cell_volume);
        tang.push_back(flat_tangent());
      }
      exact_mass = vol;
      break;
    }
    case GeneratorKind::PuncturedDisk: {
      if (n < 2) throw Error(Errc::BadSpec, "punctured_disk: needs n >= 2");
      const double h = spec.hole_side / 2.0;
      if (!(h > 0.0) || std::hypot(std::abs(spec.hole_center) + h, h * std::sqrt(n - 1.0)) >= 1.0)
        throw Error(Errc::BadSpec, "punctured_disk: the square must lie strictly inside the unit disk");
      auto in_hole = [&](const Vec& u) {
        if (std::abs(u(0) - spec.hole_center) > h) return false;
        for (int i = 1; i < n; ++i)
          if (std::abs(u(i)) > h) return false;
        return true;
      };
      const double vol = detail::ball_volume(n, 1.0) - std::pow(spec.hole_side, n);
      for (auto& s : detail::stratified_samples(spec, 1.0, vol, [&](const Vec& u) { return u.norm() <= 1.0 && !in_hole(u); })) {
        pts.push_back(embed(s.u));
        wts.push_back(s.cell_volume);
        tang.push_back(flat_tangent());
      }
      exact_mass = vol;
      break;
    }
    case GeneratorKind::SphereCap: {
      if (n != 2) throw Error(Errc::BadSpec, "sphere_cap: only n = 2 is supported");
      if (!(spec.radius > 0.0) || !(spec.cap_angle > 0.0 && spec.cap_angle <= std::numbers::pi))
        throw Error(Errc::BadSpec, "sphere_cap: bad radius or angle");
      const double big_r = spec.radius;
      // Lambert azimuthal equal-area chart: planar radius rho <-> polar angle 2 asin(rho / 2R)
      const double extent = 2.0 * big_r * std::sin(spec.cap_angle / 2.0);
      const double vol = std::numbers::pi * extent * extent;
      for (auto& s : detail::stratified_samples(spec, extent, vol, [&](const Vec& u) { return u.norm() <= extent; })) {
        const double rho = s.u.norm();
        const double phi = 2.0 * std::asin(std::min(1.0, rho / (2.0 * big_r)));
        const double th = std::atan2(s.u(1), s.u(0));
        Vec p = Vec::Zero(dim);
        p(0) = big_r * std::sin(phi) * std::cos(th);
        p(1) = big_r * std::sin(phi) * std::sin(th);
        p(2) = big_r * std::cos(phi);
        Mat t = Mat::Zero(dim, dim);
        const Vec nu = p.head(3) / big_r;
        t.topLeftCorner(3, 3) = Mat::Identity(3, 3) - nu * nu.transpose();
        pts.push_back(p);
        wts.push_back(s.cell_volume);
        tang.push_back(0.5 * (t + t.transpose()));
      }
      exact_mass = vol;
      break;
    }
    case GeneratorKind::LipschitzGraph: {
      if (!(spec.radius > 0.0)) throw Error(Errc::BadSpec, "lipschitz_graph: radius must be positive");
      const double vol = detail::ball_volume(n, spec.radius);
      for (auto& s : detail::stratified_samples(spec, spec.radius, vol, [&](const Vec& u) { return u.norm() <= spec.radius; })) {
        Vec z;
        Mat jac;
        detail::graph_height(spec, s.u, z, jac);
        Vec p(dim);
        p.head(n) = s.u;
        p.tail(d) = z;
        Mat span(dim, n);
        span.topRows(n).setIdentity();
        span.bottomRows(d) = jac;
        const Mat gram = span.transpose() * span;
        pts.push_back(p);
        wts.push_back(s.cell_volume * std::sqrt(gram.determinant()));
        tang.push_back(frame_projection(AffinePlane::spanned_by(p, span).frame()));
      }
      break;
    }
    case GeneratorKind::TwoPlaneBlend: {
      if (n != 1 || d != 1) throw Error(Errc::BadSpec, "two_plane_blend: defined for n = 1, d = 1");
      const int depth = spec.blend_depth;
      const double c = spec.blend_c;
      if (depth < 1 || !(c > 0.0) || 2.0 * c * c * 1e-2 > 1.0) throw Error(Errc::BadSpec, "two_plane_blend: need depth >= 1, 0 < c <= 10/sqrt(2)");
      // ball of radius 10^-k holds mass 10^-k, a fraction q_k of it carrying the second projection,
      // with q_k (1 - q_k) |P1 - P2|^2 = (c 10^-k)^2 and |P1 - P2|^2 = 2
      auto q = [&](int k) {
        if (k > depth) return 0.0;
        const double a2 = std::pow(c * std::pow(10.0, -k), 2);
        return a2 / (1.0 + std::sqrt(1.0 - 2.0 * a2));  // = (1 - sqrt(1 - 2 a2)) / 2 without cancellation
      };
      Mat p1 = Mat::Zero(2, 2), p2 = Mat::Zero(2, 2);
      p1(0, 0) = 1.0;
      p2(1, 1) = 1.0;
      auto add = [&](double x, double w, const Mat& p) {
        Vec v(2);
        v << x, 0.0;
        pts.push_back(v);
        wts.push_back(w);
        tang.push_back(p);
      };
      add(0.0, std::pow(10.0, -(depth + 1)), p1);
      for (int k = 1; k <= depth; ++k) {
        const double mk = std::pow(10.0, -k), mnext = std::pow(10.0, -(k + 1));
        const double shell = mk - mnext;
        const double second = q(k) * mk - q(k + 1) * mnext;
        add(0.5 * mk, shell - second, p1);
        add(-0.5 * mk, second, p2);
      }
      break;
    }
  }
  if (pts.empty()) throw Error(Errc::BadSpec, "generate: no samples produced");

  Mat points(dim, static_cast<Eigen::Index>(pts.size()));
  Vec weights(static_cast<Eigen::Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) {
    points.col(static_cast<Eigen::Index>(i)) = pts[i];
    weights(static_cast<Eigen::Index>(i)) = wts[i];
  }
  if (exact_mass > 0.0) weights *= exact_mass / weights.sum();

  Generated g{WeightedCloud(n, std::move(points), std::move(weights)), TangentField{}, spec};
  g.tangents.n = n;
  g.tangents.proj = std::move(tang);
  g.tangents.valid.assign(g.tangents.proj.size(), 1);
  return g;
}

}  // namespace qrect
