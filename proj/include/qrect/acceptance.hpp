#pragma once

// Acceptance suite: nine property checks with pinned tolerances. Each check generates its own
// corpora from a seed and returns a verdict with the measured quantities.

#include <chrono>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qrect/qrect.hpp"
#include "qrect/report.hpp"

namespace qrect::acceptance {

struct Options {
  std::uint64_t seed = 1;
};

struct Verdict {
  int id = 0;
  std::string name;
  bool pass = false;
  Json measured = Json::object();
  std::string summary;
  double seconds = 0.0;

  std::string line() const {
    return fmt::format("[{}] criterion {} {}: {} ({:.1f} s)", pass ? "PASS" : "FAIL", id, name, summary, seconds);
  }
};

inline Json verdict_json(const Verdict& v) {
  return Json{{"id", v.id}, {"name", v.name}, {"pass", v.pass}, {"seconds", v.seconds}, {"summary", v.summary}, {"measured", v.measured}};
}

namespace detail {

struct Corpus {
  Generated g;
  SpatialIndex index;
  double spacing = 0.0;

  const WeightedCloud& cloud() const { return g.cloud; }
};

inline Corpus make_corpus(const GeneratorSpec& spec) {
  Corpus c{generate(spec), {}, 0.0};
  c.index = make_index(c.g.cloud);
  c.spacing = mean_nn_spacing(c.g.cloud, c.index);
  return c;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  int index(Eigen::Index n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }
  double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, unit()); }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline Vec point3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

inline std::shared_ptr<Ccbp> ccbp_at_origin(const Corpus& c, double r0, double region_factor, int depth) {
  CcbpConfig cfg;
  cfg.anchor = Vec::Zero(c.cloud().dim_ambient());
  cfg.unit = r0 * 1e5;
  cfg.region_factor = region_factor;
  cfg.depth = depth;
  return std::make_shared<Ccbp>(build_ccbp(c.cloud(), c.index, c.g.tangents, cfg));
}

inline double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline Mat random_orthogonal(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(dim, dim);
}

}  // namespace detail

// 1. On a flat disk every diagnostic is exact.
inline Verdict flat_identity(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 1;
  v.name = "flat identity";
  GeneratorSpec s;
  s.count = 2000;
  s.seed = opt.seed;
  const Corpus c = make_corpus(s);
  Rng rng(opt.seed);
  double alpha_max = 0.0, beta_max = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vec x = c.cloud().point(rng.index(c.cloud().size()));
    const double r = rng.log_uniform(0.1, 0.5);
    alpha_max = std::max(alpha_max, alpha(c.cloud(), c.index, c.g.tangents, x, r));
    const AffinePlane plane = fit_plane_t1(c.cloud(), c.index, c.g.tangents, x, r, 2.0);
    beta_max = std::max(beta_max, beta1(c.cloud(), c.index, x, r, plane));
  }
  const auto ccbp = ccbp_at_origin(c, 1.5, 0.7, 1);
  const CompatReport rep = validate_ccbp(*ccbp);
  const double eps = std::max(rep.max_eps(), rep.eps_initial);
  const MapPipeline pipe(ccbp);

  // beyond every bump support the map must return its input bit for bit
  const double far = ccbp->region_radius + 10.0 * ccbp->radius(0) + 1.0;
  bool off_exact = true;
  for (int t = 0; t < 16; ++t) {
    const double ang = 2.0 * std::numbers::pi * t / 16.0;
    const Vec z = point3(far * std::cos(ang), far * std::sin(ang), 0.0);
    off_exact = off_exact && pipe.map(z) == z;
  }
  const Mat grid = sigma0_grid(*ccbp, 0.8, 0.05);
  double disp = 0.0;
  for (Eigen::Index i = 0; i < grid.cols(); ++i) disp = std::max(disp, (pipe.map(grid.col(i)) - grid.col(i)).norm());
  const DistortionReport d = distortion(pipe, sigma0_samples(*ccbp, 80, 0.8, opt.seed));

  v.pass = alpha_max <= 1e-9 && beta_max <= 1e-9 && eps <= 1e-8 && off_exact && disp <= 1e-8 &&
           std::abs(d.min_ratio - 1.0) <= 1e-8 && std::abs(d.max_ratio - 1.0) <= 1e-8;
  v.measured = Json{{"alpha_max", alpha_max}, {"beta1_max", beta_max}, {"ccbp_eps_max", eps}, {"ccbp_levels", ccbp->levels.size()},
                    {"identity_off_supports", off_exact}, {"grid_points", grid.cols()}, {"grid_displacement", disp},
                    {"distortion_min", d.min_ratio}, {"distortion_max", d.max_ratio}};
  v.summary = fmt::format("alpha {:.2e}, beta1 {:.2e}, eps {:.2e}, off-support exact {}, displacement {:.2e}, distortion [{:.12f}, {:.12f}]",
                          alpha_max, beta_max, eps, off_exact, disp, d.min_ratio, d.max_ratio);
  return v;
}

// 2. Codimension one: normal oscillation against alpha.
inline Verdict codim_one_identity(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 2;
  v.name = "codimension-one identity";
  struct Item {
    std::string name;
    GeneratorSpec spec;
    double r_lo, r_hi;
  };
  std::vector<Item> items;
  auto add = [&](const std::string& name, GeneratorKind kind, int count, double lo, double hi) {
    GeneratorSpec s;
    s.kind = kind;
    s.count = count;
    s.seed = opt.seed;
    if (kind == GeneratorKind::LipschitzGraph) s.amplitude = 0.05;
    if (kind == GeneratorKind::TwoPlaneBlend) s.n = 1;
    items.push_back({name, s, lo, hi});
  };
  add("plane_disk", GeneratorKind::PlaneDisk, 2000, 0.05, 0.5);
  add("sphere_cap", GeneratorKind::SphereCap, 4000, 0.05, 0.5);
  add("lipschitz_graph", GeneratorKind::LipschitzGraph, 4000, 0.05, 0.5);
  add("punctured_disk", GeneratorKind::PuncturedDisk, 4000, 0.05, 0.5);
  add("two_plane_blend", GeneratorKind::TwoPlaneBlend, 1, 1e-5, 0.1);

  double worst = 0.0, worst_alt = 0.0, ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
  Json per = Json::object();
  Rng rng(opt.seed);
  for (const Item& it : items) {
    const Corpus c = make_corpus(it.spec);
    const OrientedNormals normals = orient_normals(c.cloud(), c.index, c.g.tangents, 2.5 * c.spacing);
    double item_worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Vec x = c.cloud().point(rng.index(c.cloud().size()));
      const double r = rng.log_uniform(it.r_lo, it.r_hi);
      const double a = alpha(c.cloud(), c.index, c.g.tangents, x, r);
      const double o = normal_oscillation(c.cloud(), c.index, normals, x, r);
      item_worst = std::max(item_worst, std::abs(o * o - a * a));
      // alternative form: alpha^2 = 1 - |mean of nu nu^T|_F^2
      Mat m = Mat::Zero(c.cloud().dim_ambient(), c.cloud().dim_ambient());
      double mass = 0.0;
      for (int i : c.index.ball(x, r)) {
        const Vec nu = normals.normals.col(i);
        m += c.cloud().weight(i) * nu * nu.transpose();
        mass += c.cloud().weight(i);
      }
      m /= mass;
      worst_alt = std::max(worst_alt, std::abs(a * a - (1.0 - m.squaredNorm())));
      if (o > 1e-6) ratio_lo = std::min(ratio_lo, a * a / (o * o)), ratio_hi = std::max(ratio_hi, a * a / (o * o));
    }
    per[it.name] = item_worst;
    worst = std::max(worst, item_worst);
  }
  v.pass = worst <= 1e-9;
  v.measured = Json{{"max_abs_osc2_minus_alpha2", worst}, {"per_corpus", per}, {"max_abs_alpha2_minus_one_minus_mean_nn", worst_alt},
                    {"alpha2_over_osc2_min", ratio_lo}, {"alpha2_over_osc2_max", ratio_hi}};
  v.summary = fmt::format("max |osc^2 - alpha^2| = {:.3e} (tol 1e-9); alpha^2/osc^2 in [{:.3f}, {:.3f}]; |alpha^2 - (1 - |mean nu nu^T|^2)| <= {:.1e}",
                          worst, ratio_lo, ratio_hi, worst_alt);
  return v;
}

// 3. Eigenvalue bands of perturbed projections.
inline Verdict gershgorin_trials(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 3;
  v.name = "gershgorin split";
  Rng rng(opt.seed);
  long violations = 0, trials = 0, certified = 0;
  double worst_big = std::numeric_limits<double>::infinity(), worst_small = 0.0;
  Json per = Json::object();
  for (auto [n, d] : std::vector<std::pair<int, int>>{{2, 1}, {2, 2}, {3, 2}}) {
    const int dim = n + d;
    const double d0 = admissible_delta(n, d);
    long local = 0;
    for (int t = 0; t < 1000; ++t, ++trials) {
      const Mat q = random_orthogonal(dim, rng.engine());
      const AffinePlane plane(Vec::Zero(dim), q.leftCols(n));
      Mat e(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) e(i, j) = e(j, i) = 2.0 * rng.unit() - 1.0;
      const double delta = d0 * std::max(rng.unit(), 1e-3);
      e *= delta / std::abs(symmetric_eigen(e).values(0));
      const Mat l = frame_projection(plane.frame()) + e;
      try {
        const EigenSplit sp = gershgorin_split(l, n, d, plane);
        const double band = dim * sp.delta;
        for (Eigen::Index i = 0; i < n; ++i) worst_big = std::min(worst_big, std::abs(sp.big_values(i)) - (1.0 - band));
        for (Eigen::Index i = 0; i < d; ++i) worst_small = std::max(worst_small, std::abs(sp.small_values(i)) - band);
        certified += sp.disc_certified;
      } catch (const Error& err) {
        if (err.code() != Errc::SplitViolation) throw;
        ++violations, ++local;
      }
    }
    per[fmt::format("{}_{}", n, d)] = local;
  }
  v.pass = violations == 0;
  v.measured = Json{{"trials", trials}, {"violations", violations}, {"per_shape", per}, {"disc_certified", certified},
                    {"min_big_margin", worst_big}, {"max_small_excess", worst_small}};
  v.summary = fmt::format("{} violations in {} trials; min big-band margin {:.3e}, max small-band excess {:.3e}", violations, trials,
                          worst_big, worst_small);
  return v;
}

// 4. beta_1 of the center-of-mass plane against alpha at the dilated scale.
inline Verdict plane_fit_bound(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 4;
  v.name = "plane-fit bound";
  const double lambda = 2.0;
  const std::vector<double> scales{0.2, 0.1, 0.05, 0.025};
  double c_max = 0.0, stability = 0.0;
  long skipped = 0;
  Json per = Json::object();
  Rng rng(opt.seed);
  for (int item = 0; item < 2; ++item) {
    GeneratorSpec s;
    s.seed = opt.seed;
    s.count = 20000;
    if (item == 0) {
      s.kind = GeneratorKind::SphereCap;
    } else {
      s.kind = GeneratorKind::LipschitzGraph;
      s.amplitude = 0.05;
    }
    const Corpus c = make_corpus(s);
    std::vector<std::vector<double>> by_scale(scales.size());
    for (int t = 0; t < 100; ++t) {
      const size_t k = static_cast<size_t>(t) % scales.size();
      const double r = scales[k];
      Vec x;
      // keep the dilated ball away from the corpus boundary
      for (int tries = 0;; ++tries) {
        x = c.cloud().point(rng.index(c.cloud().size()));
        const double reach = item == 0 ? std::acos(std::clamp(x(2), -1.0, 1.0)) + 2.0 * lambda * r : x.head(2).norm() + lambda * r;
        if (reach <= (item == 0 ? s.cap_angle : 0.95)) break;
      }
      const double a = alpha(c.cloud(), c.index, c.g.tangents, x, lambda * r);
      if (!(a > 1e-12)) {
        ++skipped;
        continue;
      }
      const AffinePlane plane = fit_plane_t1(c.cloud(), c.index, c.g.tangents, x, r, lambda);
      const double ratio = beta1(c.cloud(), c.index, x, r, plane) / a;
      by_scale[k].push_back(ratio);
      c_max = std::max(c_max, ratio);
    }
    std::vector<double> medians;
    for (const auto& b : by_scale) medians.push_back(median(b));
    stability = std::max(stability, spread(medians));
    per[to_string(s.kind)] = Json{{"scales", to_json(scales)}, {"median_ratio", to_json(medians)}, {"spread", spread(medians)}};
  }
  v.pass = c_max <= 50.0 && stability <= 5.0;
  v.measured = Json{{"lambda", lambda}, {"max_ratio", c_max}, {"median_spread", stability}, {"skipped_flat", skipped}, {"per_corpus", per}};
  v.summary = fmt::format("max beta1/alpha = {:.3f} (<= 50), max/min of per-scale medians = {:.3f} (<= 5)", c_max, stability);
  return v;
}

// 5. Dyadic sum of alpha^2 against the continuous integral of alpha^2 dr/r.
inline Verdict dyadic_vs_integral(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 5;
  v.name = "dyadic vs integral";
  struct Item {
    std::string name;
    GeneratorSpec spec;
    Vec focus;
  };
  std::vector<Item> items;
  {
    GeneratorSpec s;
    s.kind = GeneratorKind::TwoPlaneBlend;
    s.n = 1;
    s.blend_c = 1.0;
    s.blend_depth = 6;
    items.push_back({"two_plane_blend", s, Vec::Zero(2)});
  }
  {
    GeneratorSpec s;
    s.kind = GeneratorKind::SphereCap;
    s.count = 4000;
    s.seed = opt.seed;
    s.refine_levels = 4;
    items.push_back({"sphere_cap", s, point3(0, 0, 1)});
  }
  {
    GeneratorSpec s;
    s.kind = GeneratorKind::LipschitzGraph;
    s.amplitude = 0.05;
    s.count = 4000;
    s.seed = opt.seed;
    s.refine_levels = 4;
    items.push_back({"lipschitz_graph", s, Vec::Zero(3)});
  }
  double c_max = 0.0, c_min = std::numeric_limits<double>::infinity();
  Json per = Json::object();
  for (const Item& it : items) {
    const Corpus c = make_corpus(it.spec);
    const Vec x = c.cloud().point(c.index.nearest(it.focus));
    const AlphaProfile prof = carleson_profile(c.cloud(), c.index, c.g.tangents, x, 12, 1.0);
    // stop the integral at the finest scale that still holds a handful of samples
    const double r_min = prof.scales.back();
    const int per_decade = 40;
    const int steps = static_cast<int>(std::ceil(per_decade * std::log10(1.0 / r_min)));
    double integral = 0.0, prev = 0.0;
    for (int j = 0; j <= steps; ++j) {
      const double r = std::pow(10.0, -std::log10(1.0 / r_min) * j / steps);
      const double a = alpha(c.cloud(), c.index, c.g.tangents, x, r);
      if (j > 0) integral += 0.5 * (prev + a * a) * (std::log10(1.0 / r_min) / steps) * std::log(10.0);
      prev = a * a;
    }
    const double ratio = prof.carleson_sum / integral;
    c_max = std::max(c_max, ratio);
    c_min = std::min(c_min, ratio);
    per[it.name] = Json{{"dyadic_sum", prof.carleson_sum}, {"integral", integral}, {"ratio", ratio}, {"finest_scale", r_min},
                        {"levels", prof.scales.size()}};
  }
  v.pass = c_max <= 30.0;
  v.measured = Json{{"max_ratio", c_max}, {"min_ratio", c_min}, {"per_corpus", per}};
  v.summary = fmt::format("sum/integral in [{:.3f}, {:.3f}] (upper bound 30)", c_min, c_max);
  return v;
}

namespace detail {

struct ResponseSample {
  double amplitude = 0.0;
  double eps_same = 0.0, eps_cross = 0.0, eps_max = 0.0;
  double k_minus_one = 0.0, min_ratio = 1.0, containment = 0.0, grid_spacing = 0.0;
  double max_budget = 0.0;
  bool budgets_finite = true;
  double carleson_max = 0.0;
  size_t nodes = 0;
};

inline ResponseSample graph_response(double amplitude, std::uint64_t seed, bool with_containment, bool with_carleson) {
  GeneratorSpec s;
  s.kind = amplitude > 0.0 ? GeneratorKind::LipschitzGraph : GeneratorKind::PlaneDisk;
  s.amplitude = amplitude;
  s.count = 20000;
  s.seed = seed;
  const Corpus c = make_corpus(s);
  const auto ccbp = ccbp_at_origin(c, 0.4, 1.5, 1);
  const CompatReport rep = validate_ccbp(*ccbp);
  const MapPipeline pipe(ccbp);
  const DistortionReport d = distortion(pipe, sigma0_samples(*ccbp, 60, 0.4, seed));
  ResponseSample out;
  out.amplitude = amplitude;
  out.eps_same = rep.eps_same_level;
  out.eps_cross = rep.eps_cross_level;
  out.eps_max = rep.max_eps();
  out.k_minus_one = d.k_est - 1.0;
  out.min_ratio = d.min_ratio;
  out.max_budget = d.max_budget;
  for (double b : d.budgets) out.budgets_finite = out.budgets_finite && std::isfinite(b);
  for (const auto& lv : ccbp->levels) out.nodes += static_cast<size_t>(lv.size());
  if (with_containment) {
    ContainmentOptions copt;
    copt.grid = 61;
    const ContainmentReport cr = containment_check(c.cloud(), c.index, pipe, 0.3, copt);
    out.containment = cr.one_sided;
    out.grid_spacing = cr.grid_spacing;
  }
  if (with_carleson) {
    Rng rng(seed);
    for (int t = 0; t < 30; ++t) {
      const Vec x = c.cloud().point(rng.index(c.cloud().size()));
      if ((x - ccbp->anchor).norm() > ccbp->region_radius) continue;
      out.carleson_max = std::max(out.carleson_max, carleson_profile(c.cloud(), c.index, c.g.tangents, x, 3, 1.0).carleson_sum);
    }
  }
  return out;
}

}  // namespace detail

// 6. Response of the CCBP diagnostics to the graph amplitude.
inline Verdict linear_response(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 6;
  v.name = "ccbp linear response";
  std::vector<ResponseSample> rs;
  for (double a : {0.01, 0.02, 0.04}) rs.push_back(graph_response(a, opt.seed, true, false));
  auto normalized = [&](auto get) {
    std::vector<double> out;
    for (const auto& r : rs) out.push_back(get(r) / r.amplitude);
    return out;
  };
  const double s_same = spread(normalized([](const ResponseSample& r) { return r.eps_same; }));
  const double s_cross = spread(normalized([](const ResponseSample& r) { return r.eps_cross; }));
  const double s_k = spread(normalized([](const ResponseSample& r) { return r.k_minus_one; }));
  const double s_cont = spread(normalized([](const ResponseSample& r) { return r.containment; }));
  Json rows = Json::array();
  for (const auto& r : rs)
    rows.push_back(Json{{"amplitude", r.amplitude}, {"eps_same_level", r.eps_same}, {"eps_cross_level", r.eps_cross},
                        {"k_est_minus_one", r.k_minus_one}, {"containment", r.containment}, {"grid_spacing", r.grid_spacing},
                        {"nodes", r.nodes}});
  v.pass = s_same <= 3.0 && s_cross <= 3.0 && s_k <= 3.0 && s_cont <= 3.0;
  v.measured = Json{{"rows", rows},
                    {"spread_over_amplitude", Json{{"eps_same_level", s_same}, {"eps_cross_level", s_cross},
                                                   {"k_est_minus_one", s_k}, {"containment", s_cont}}}};
  v.summary = fmt::format("max/min of value/a: eps_same {:.2f}, eps_cross {:.2f}, K-1 {:.2f}, containment {:.2f} (each <= 3)", s_same,
                          s_cross, s_k, s_cont);
  return v;
}

// 7. Bi-Lipschitz budget on nearly flat corpora.
inline Verdict bilipschitz_budget(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 7;
  v.name = "bi-lipschitz budget";
  Json rows = Json::array();
  bool finite = true;
  double min_ratio = std::numeric_limits<double>::infinity(), c_needed = 0.0, max_budget = 0.0;
  int used = 0;
  for (double a : {0.0, 0.01, 0.02}) {
    const ResponseSample r = graph_response(a, opt.seed, false, true);
    const bool eligible = r.eps_max <= 0.05;
    rows.push_back(Json{{"amplitude", a}, {"eps_max", r.eps_max}, {"eligible", eligible}, {"max_budget", r.max_budget},
                        {"budgets_finite", r.budgets_finite}, {"carleson_max", r.carleson_max}, {"min_ratio", r.min_ratio},
                        {"k_est", r.k_minus_one + 1.0}});
    if (!eligible) continue;
    ++used;
    finite = finite && r.budgets_finite;
    min_ratio = std::min(min_ratio, r.min_ratio);
    max_budget = std::max(max_budget, r.max_budget);
    if (r.max_budget > 1.0)
      c_needed = r.carleson_max > 0.0 ? std::max(c_needed, (r.max_budget - 1.0) / r.carleson_max) : std::numeric_limits<double>::infinity();
  }
  v.pass = used > 0 && finite && std::isfinite(c_needed) && min_ratio >= 0.5;
  v.measured = Json{{"rows", rows}, {"corpora_used", used}, {"budget_constant", c_needed}, {"max_budget", max_budget}, {"min_distortion_ratio", min_ratio}};
  v.summary = fmt::format("{} corpora with eps <= 0.05; budgets finite {}, max {:.3e}; corpus constant C = {:.3g}; min distortion ratio {:.4f} (>= 0.5)",
                          used, finite, max_budget, c_needed, min_ratio);
  return v;
}

// 8. The punctured disk: flat and regular, yet the parameterization overshoots the hole.
inline Verdict punctured_disk_suite(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 8;
  v.name = "punctured disk";
  GeneratorSpec s;
  s.kind = GeneratorKind::PuncturedDisk;
  s.seed = opt.seed;
  s.count = 125000;
  s.jitter = 0.1;
  const Corpus dense = make_corpus(s);
  Rng rng(opt.seed);

  double carleson = 0.0;
  AhlforsSummary ahl;
  for (int t = 0; t < 100; ++t) {
    const Vec x = dense.cloud().point(rng.index(dense.cloud().size()));
    carleson = std::max(carleson, carleson_profile(dense.cloud(), dense.index, dense.g.tangents, x, 3, 1.0).carleson_sum);
    std::vector<double> scales;
    for (int j = 0; j <= 8; ++j) scales.push_back(0.02 * std::pow(50.0, j / 8.0));
    for (double ratio : ahlfors_ratio(dense.cloud(), dense.index, x, scales)) ahl.add(ratio);
  }
  const Vec edge = dense.cloud().point(dense.index.nearest(point3(0.45, 0.0, 0.0)));
  const double flat_edge = reifenberg_flatness(dense.cloud(), dense.index, edge, 0.1);
  const double flat_far = reifenberg_flatness(dense.cloud(), dense.index, point3(-0.5, 0.0, 0.0), 0.1);

  s.count = 30000;
  s.jitter = 0.2;
  const Corpus sparse = make_corpus(s);
  const NeighborGraph graph = build_graph(sparse.cloud(), sparse.index, 2.5 * sparse.spacing);
  std::vector<std::pair<int, int>> pairs;
  for (double y : {-0.04, -0.02, 0.0, 0.02, 0.04})
    pairs.emplace_back(sparse.index.nearest(point3(0.4, y, 0.0)), sparse.index.nearest(point3(0.6, y, 0.0)));
  const QuasiconvexityResult q = quasiconvexity(sparse.cloud(), graph, pairs);
  double kappa_min = std::numeric_limits<double>::infinity();
  for (double r : q.ratios) kappa_min = std::min(kappa_min, r);

  CcbpConfig cfg;
  cfg.anchor = point3(0.5, 0.0, 0.0);
  cfg.unit = 0.2e5;
  cfg.region_factor = 2.0;
  cfg.depth = 0;
  const auto ccbp = std::make_shared<Ccbp>(build_ccbp(sparse.cloud(), sparse.index, sparse.g.tangents, cfg));
  const MapPipeline pipe(ccbp);
  ContainmentOptions copt;
  copt.symmetric = true;
  const ContainmentReport cr = containment_check(sparse.cloud(), sparse.index, pipe, 0.15, copt);
  const double limit = 3.0 * cr.grid_spacing;

  const bool ok_carleson = carleson <= 1e-12, ok_ahl = ahl.constant() <= 10.0;
  const bool ok_flat = flat_edge >= 0.2 && flat_far <= 0.05;
  const bool ok_kappa = kappa_min > 1.0 && q.kappa <= 2.0;
  const bool ok_contain = cr.one_sided <= limit && cr.reverse > limit;
  v.pass = ok_carleson && ok_ahl && ok_flat && ok_kappa && ok_contain;
  v.measured = Json{{"carleson_max", carleson},
                    {"ahlfors_constant", ahl.constant()},
                    {"flatness_hole_edge", flat_edge},
                    {"flatness_far", flat_far},
                    {"dense_spacing", dense.spacing},
                    {"kappa_straddling", to_json(q.ratios)},
                    {"containment_one_sided", cr.one_sided},
                    {"containment_reverse", cr.reverse},
                    {"grid_spacing", cr.grid_spacing}};
  v.summary = fmt::format(
      "carleson {:.1e}, C_M {:.2f}, flatness edge {:.3f} / far {:.3f}, kappa in [{:.3f}, {:.3f}], containment one-sided {:.2e} vs reverse {:.3f} "
      "(3 x grid = {:.3f})",
      carleson, ahl.constant(), flat_edge, flat_far, kappa_min, q.kappa, cr.one_sided, cr.reverse, limit);
  return v;
}

namespace detail {

struct PoincareSetup {
  Corpus c;
  NeighborGraph graph;
  double h = 0.0;
};

inline PoincareSetup poincare_setup(int count, std::uint64_t seed) {
  GeneratorSpec s;
  s.count = count;
  s.seed = seed;
  PoincareSetup p{make_corpus(s), {}, 0.0};
  p.graph = build_graph(p.c.cloud(), p.c.index, 2.5 * p.c.spacing);
  p.h = 2.5 * p.c.spacing;
  return p;
}

/// Max Poincare ratio over a family of hinge sums and a fixed set of balls.
inline double empirical_cp(const PoincareSetup& p, GradMode mode, int family) {
  const std::vector<std::pair<Vec, double>> balls{{point3(0, 0, 0), 0.4}, {point3(0.3, 0.2, 0), 0.2}, {point3(-0.3, -0.3, 0), 0.3},
                                                  {point3(0.1, 0.5, 0), 0.2}, {point3(0, 0, 0), 0.2}};
  double cp = 0.0;
  for (int k = 1; k <= family; ++k) {
    const ScalarField field = random_lipschitz(Vec::Zero(3), 0.5, static_cast<std::uint64_t>(k));
    const Vec f = field.evaluate(p.c.cloud());
    const Vec rho = gradient_field(p.c.cloud(), p.c.index, p.graph, p.c.g.tangents, f, mode, p.h);
    for (const auto& [x, r] : balls) cp = std::max(cp, poincare_ratio(p.c.cloud(), p.c.index, f, rho, x, r, 2.0));
  }
  return cp;
}

}  // namespace detail

// 9. Poincare diagnostics on the flat disk.
inline Verdict poincare_diagnostics(const Options& opt) {
  using namespace detail;
  Verdict v;
  v.id = 9;
  v.name = "poincare diagnostics";
  const PoincareSetup small = poincare_setup(2000, opt.seed), large = poincare_setup(4000, opt.seed);

  const Vec f = ScalarField::coord(0).evaluate(small.c.cloud());
  const Vec rho = gradient_field(small.c.cloud(), small.c.index, small.graph, small.c.g.tangents, f, GradMode::Tangential, small.h);
  const double ratio = poincare_ratio(small.c.cloud(), small.c.index, f, rho, Vec::Zero(3), 1.0, 1.0);
  const double target = 8.0 / (3.0 * std::numbers::pi);
  const double disk_mean = 4.0 / (3.0 * std::numbers::pi);  // mean of |y_1| over the unit disk
  const bool ok_closed = std::abs(ratio - target) <= 0.05 * target;

  const int family = 20;
  const double cp_small = empirical_cp(small, GradMode::Tangential, family);
  const double cp_large = empirical_cp(large, GradMode::Tangential, family);
  const double cp_lip = empirical_cp(large, GradMode::Lip, family);
  const double drift = cp_large / cp_small - 1.0;
  const double modes = cp_large / cp_lip;
  const bool ok_stable = std::abs(drift) <= 0.2;
  const bool ok_modes = modes >= 0.5 && modes <= 2.0;
  v.pass = ok_closed && ok_stable && ok_modes;
  v.measured = Json{{"disk_ratio", ratio},
                    {"target_8_over_3pi", target},
                    {"disk_mean_abs_y1", disk_mean},
                    {"relative_error_vs_target", ratio / target - 1.0},
                    {"relative_error_vs_disk_mean", ratio / disk_mean - 1.0},
                    {"cp_tangential_n2000", cp_small},
                    {"cp_tangential_n4000", cp_large},
                    {"cp_lip_n4000", cp_lip},
                    {"cp_relative_drift", drift},
                    {"tangential_over_lip", modes}};
  v.summary = fmt::format("disk ratio {:.4f} vs 8/(3 pi) = {:.4f} [{}] (|y_1| disk mean 4/(3 pi) = {:.4f}); C_P {:.4f} -> {:.4f} ({:+.1f}%) [{}]; "
                          "tangential/lip {:.3f} [{}]",
                          ratio, target, ok_closed ? "ok" : "off", disk_mean, cp_small, cp_large, 100.0 * drift, ok_stable ? "ok" : "off",
                          modes, ok_modes ? "ok" : "off");
  return v;
}

struct Criterion {
  int id;
  Verdict (*run)(const Options&);
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{{1, flat_identity},     {2, codim_one_identity}, {3, gershgorin_trials},
                                          {4, plane_fit_bound},   {5, dyadic_vs_integral}, {6, linear_response},
                                          {7, bilipschitz_budget}, {8, punctured_disk_suite}, {9, poincare_diagnostics}};
  return all;
}

/// Runs one criterion and times it. Library errors become failing verdicts.
inline Verdict run(int id, const Options& opt = {}) {
  for (const Criterion& c : criteria()) {
    if (c.id != id) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(opt);
    } catch (const Error& e) {
      v.id = id;
      v.name = "error";
      v.pass = false;
      v.summary = e.what();
      v.measured = Json{{"error", std::string(errc_name(e.code()))}, {"message", e.what()}};
    }
    v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return v;
  }
  throw Error(Errc::InvalidInput, "no acceptance criterion " + std::to_string(id));
}

}  // namespace qrect::acceptance
