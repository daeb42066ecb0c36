// Command-line front end: generate clouds, run the diagnostics and the acceptance suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qrect/acceptance.hpp"
#include "qrect/io.hpp"
#include "qrect/qrect.hpp"
#include "qrect/report.hpp"

using namespace qrect;

namespace {

/// JSON config files: top-level keys are global options, nested objects hold subcommand options.
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    std::vector<CLI::ConfigItem> out;
    walk(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
    return v.dump();
  }

  static void walk(const nlohmann::json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto next = parents;
        next.push_back(it.key());
        walk(*it, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      out.push_back(std::move(item));
    }
  }
};

struct CloudOptions {
  std::string path;
  double total_mass = 1.0;
  std::string kind = "plane_disk";
  GeneratorSpec spec;
  bool estimate_tangents = false;
  double tangent_radius = 0.0;
};

void add_cloud_options(CLI::App* sub, CloudOptions& o, bool with_file = true) {
  if (with_file) {
    sub->add_option("--cloud", o.path, "input CSV (with a .json sidecar); otherwise a cloud is generated");
    sub->add_option("--total-mass", o.total_mass, "total mass for CSV input without a w column");
    sub->add_flag("--estimate-tangents", o.estimate_tangents, "estimate tangents by local PCA even for generated clouds");
    sub->add_option("--tangent-radius", o.tangent_radius, "PCA radius (default: 2 x mean NN spacing)");
  }
  sub->add_option("--kind", o.kind, "plane_disk | sphere_cap | lipschitz_graph | punctured_disk | two_plane_blend");
  sub->add_option("--n", o.spec.n, "intrinsic dimension");
  sub->add_option("--d", o.spec.d, "codimension");
  sub->add_option("--count", o.spec.count, "target sample count");
  sub->add_option("--amplitude", o.spec.amplitude, "lipschitz_graph height scale");
  sub->add_option("--radius", o.spec.radius, "disk radius or sphere radius");
  sub->add_option("--cap-angle", o.spec.cap_angle, "sphere_cap polar angle");
  sub->add_option("--jitter", o.spec.jitter, "jitter as a fraction of the cell side");
  sub->add_option("--refine-levels", o.spec.refine_levels, "dyadic refinement shells around the origin");
  sub->add_option("--refine-cells", o.spec.refine_cells, "inner refinement radius in base cells");
  sub->add_option("--hole-side", o.spec.hole_side, "punctured_disk square side");
  sub->add_option("--hole-center", o.spec.hole_center, "punctured_disk square center (first coordinate)");
  sub->add_option("--blend-c", o.spec.blend_c, "two_plane_blend alpha constant");
  sub->add_option("--blend-depth", o.spec.blend_depth, "two_plane_blend depth");
}

struct Loaded {
  WeightedCloud cloud;
  TangentField tangents;
  SpatialIndex index;
  double spacing = 0.0;
  Json source;
};

Loaded load(const CloudOptions& o, std::uint64_t seed) {
  Loaded l;
  bool analytic = false;
  if (!o.path.empty()) {
    l.cloud = read_cloud_csv(o.path, o.total_mass);
    l.source = Json{{"file", o.path}};
  } else {
    GeneratorSpec s = o.spec;
    s.kind = generator_kind_from_string(o.kind);
    s.seed = seed;
    Generated g = generate(s);
    l.cloud = std::move(g.cloud);
    l.tangents = std::move(g.tangents);
    analytic = true;
    l.source = Json{{"kind", o.kind}, {"n", s.n}, {"d", s.d}, {"count", s.count}, {"seed", s.seed}};
  }
  l.index = make_index(l.cloud);
  l.spacing = mean_nn_spacing(l.cloud, l.index);
  if (!analytic || o.estimate_tangents) {
    const double h = o.tangent_radius > 0.0 ? o.tangent_radius : default_tangent_radius(l.cloud, l.index);
    l.tangents = estimate_tangent_field(l.cloud, l.index, h);
  }
  l.source["size"] = l.cloud.size();
  l.source["mean_spacing"] = l.spacing;
  l.source["tangents"] = analytic && !o.estimate_tangents ? "analytic" : "estimated";
  return l;
}

Vec parse_point(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<Vec> pick_centers(const Loaded& l, const std::vector<double>& x, int count, std::uint64_t seed) {
  if (!x.empty()) {
    if (static_cast<int>(x.size()) != l.cloud.dim_ambient()) throw Error(Errc::DimensionMismatch, "--x must have one value per ambient coordinate");
    return {parse_point(x)};
  }
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.emplace_back(l.cloud.point(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(l.cloud.size()))));
  return out;
}

void emit(const Json& report, const std::string& out) {
  const std::string text = dump_report(report);
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(Errc::Io, "cannot write " + out);
  f << text;
}

struct CcbpOptions {
  int depth = config::ccbp_depth;
  double lambda = 1.0;
  std::vector<double> anchor;
  double unit = 0.0;
  double region_factor = config::ccbp_region_factor;
  double fit_factor = config::ccbp_fit_factor;
};

void add_ccbp_options(CLI::App* sub, CcbpOptions& o) {
  sub->add_option("--depth", o.depth, "deepest level index K");
  sub->add_option("--lambda", o.lambda, "dilation factor (>= 1)");
  sub->add_option("--anchor", o.anchor, "anchor point (default: mass centroid)")->delimiter(',');
  sub->add_option("--unit", o.unit, "length of one model unit; r_k = unit * 10^(-k-l0-5)");
  sub->add_option("--region-factor", o.region_factor, "working radius in units of r_0");
  sub->add_option("--fit-factor", o.fit_factor, "plane fit radius in units of r_k");
}

CcbpConfig ccbp_config(const CcbpOptions& o) {
  CcbpConfig cfg;
  cfg.depth = o.depth;
  cfg.lambda = o.lambda;
  if (!o.anchor.empty()) cfg.anchor = parse_point(o.anchor);
  if (o.unit > 0.0) cfg.unit = o.unit;
  cfg.region_factor = o.region_factor;
  cfg.fit_factor = o.fit_factor;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrect: multiscale flatness and parameterization diagnostics for point clouds"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--out", out, "output path (CSV for generate, JSON report otherwise; default stdout)");

  // pick the config parser from the file extension before parsing
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config" && std::filesystem::path(argv[i + 1]).extension() == ".json")
      app.config_formatter(std::make_shared<ConfigJson>());
  app.set_config("--config", "", "JSON or TOML key-value file; nested tables hold subcommand options");

  // generate
  CloudOptions gen;
  bool no_weights = false;
  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic cloud as CSV plus sidecar");
  add_cloud_options(generate_cmd, gen, false);
  generate_cmd->add_flag("--no-weights", no_weights, "omit the w column");

  // analyze
  CloudOptions an;
  std::vector<double> an_x;
  int an_centers = 10, an_depth = 4;
  double an_base = 1.0;
  std::vector<double> an_flat_r{0.1, 0.2};
  auto* analyze_cmd = app.add_subcommand("analyze", "alpha profiles, Ahlfors constant and flatness table");
  add_cloud_options(analyze_cmd, an);
  analyze_cmd->add_option("--x", an_x, "single center")->delimiter(',');
  analyze_cmd->add_option("--centers", an_centers, "number of random sample centers");
  analyze_cmd->add_option("--depth", an_depth, "scales base * 10^-(k-1), k = 1..depth");
  analyze_cmd->add_option("--base", an_base, "coarsest scale (<= 1)");
  analyze_cmd->add_option("--flatness-r", an_flat_r, "radii for the flatness table")->delimiter(',');

  // fit
  CloudOptions ft;
  std::vector<double> ft_x;
  double ft_r = 0.2, ft_lambda = 2.0;
  auto* fit_cmd = app.add_subcommand("fit", "center-of-mass plane at (x, r) with its beta1/alpha ratio");
  add_cloud_options(fit_cmd, ft);
  fit_cmd->add_option("--x", ft_x, "center (default: sample nearest the centroid)")->delimiter(',');
  fit_cmd->add_option("--r", ft_r, "radius");
  fit_cmd->add_option("--lambda", ft_lambda, "dilation for the averaged projection");

  // ccbp
  CloudOptions cb;
  CcbpOptions cb_opt;
  auto* ccbp_cmd = app.add_subcommand("ccbp", "build and validate the coherent collection of balls and planes");
  add_cloud_options(ccbp_cmd, cb);
  add_ccbp_options(ccbp_cmd, cb_opt);

  // param
  CloudOptions pm;
  CcbpOptions pm_opt;
  int pm_grid = 81, pm_pairs = 60;
  bool pm_symmetric = false;
  double pm_theta = 0.0, pm_rho = 0.0;
  auto* param_cmd = app.add_subcommand("param", "compose the sigma maps: distortion, budgets and containment");
  add_cloud_options(param_cmd, pm);
  add_ccbp_options(param_cmd, pm_opt);
  param_cmd->add_option("--grid", pm_grid, "Sigma_0 lattice points per axis for containment");
  param_cmd->add_option("--pairs", pm_pairs, "number of distortion sample points (all pairs are used)");
  param_cmd->add_flag("--symmetric", pm_symmetric, "also measure the reverse containment");
  param_cmd->add_option("--theta", pm_theta, "containment radius (default: r_0)");
  param_cmd->add_option("--sample-radius", pm_rho, "radius of the distortion samples on Sigma_0 (default: r_0)");

  // poincare
  CloudOptions pc;
  double pc_p = config::poincare_p, pc_lambda = 2.0, pc_graph = 2.5;
  std::string pc_mode = "tangential";
  int pc_family = 10, pc_centers = 5, pc_pairs = 50;
  std::vector<double> pc_r{0.1, 0.2};
  auto* poincare_cmd = app.add_subcommand("poincare", "Poincare ratios over a random Lipschitz family and quasiconvexity");
  add_cloud_options(poincare_cmd, pc);
  poincare_cmd->add_option("--p", pc_p, "exponent");
  poincare_cmd->add_option("--lambda", pc_lambda, "dilation of the gradient ball");
  poincare_cmd->add_option("--mode", pc_mode, "tangential | lip");
  poincare_cmd->add_option("--family-size", pc_family, "number of hinge-sum test functions");
  poincare_cmd->add_option("--centers", pc_centers, "number of random centers");
  poincare_cmd->add_option("--r", pc_r, "radii")->delimiter(',');
  poincare_cmd->add_option("--graph-factor", pc_graph, "graph radius in mean NN spacings");
  poincare_cmd->add_option("--pairs", pc_pairs, "random pairs for the quasiconvexity constant");

  // accept
  std::vector<int> acc_ids;
  auto* accept_cmd = app.add_subcommand("accept", "run acceptance criteria; exit code 0 iff all pass");
  accept_cmd->add_option("--criteria", acc_ids, "criterion ids (default: all)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate_cmd) {
      GeneratorSpec s = gen.spec;
      s.kind = generator_kind_from_string(gen.kind);
      s.seed = seed;
      const Generated g = generate(s);
      const std::string path = out.empty() ? "cloud.csv" : out;
      write_cloud_csv(path, g.cloud, !no_weights);
      Json r = make_report("generate");
      r["path"] = path;
      r["sidecar"] = sidecar_path(path).string();
      r["kind"] = gen.kind;
      r["n"] = s.n;
      r["d"] = s.d;
      r["seed"] = seed;
      r["size"] = g.cloud.size();
      r["total_mass"] = g.cloud.total_mass();
      std::cout << dump_report(r);
      return EXIT_SUCCESS;
    }

    if (*analyze_cmd) {
      const Loaded l = load(an, seed);
      Json r = make_report("analyze");
      r["source"] = l.source;
      Json profiles = Json::array(), flat = Json::array();
      AhlforsSummary ahl;
      std::vector<double> ahl_scales;
      for (int j = 0; j < 8; ++j) ahl_scales.push_back(std::max(3.0 * l.spacing, 0.01) * std::pow(std::min(1.0, 1.0 / (3.0 * l.spacing)), j / 7.0));
      for (const Vec& x : pick_centers(l, an_x, an_centers, seed)) {
        const AlphaProfile p = carleson_profile(l.cloud, l.index, l.tangents, x, an_depth, an_base);
        profiles.push_back(Json{{"center", to_json(x)}, {"scales", to_json(p.scales)}, {"alphas", to_json(p.alphas)}, {"carleson_sum", p.carleson_sum}});
        std::vector<double> clipped;
        for (double s : ahl_scales) clipped.push_back(std::min(s, 1.0));
        for (double v : ahlfors_ratio(l.cloud, l.index, x, clipped)) ahl.add(v);
        for (double rr : an_flat_r) {
          try {
            flat.push_back(Json{{"center", to_json(x)}, {"r", rr}, {"flatness", reifenberg_flatness(l.cloud, l.index, x, rr)}});
          } catch (const Error& e) {
            flat.push_back(Json{{"center", to_json(x)}, {"r", rr}, {"error", std::string(errc_name(e.code()))}});
          }
        }
      }
      r["profiles"] = profiles;
      r["ahlfors"] = Json{{"constant", ahl.constant()}, {"min_ratio", ahl.min_ratio}, {"max_ratio", ahl.max_ratio}, {"scales", to_json(ahl_scales)}};
      r["flatness"] = flat;
      emit(r, out);
      return EXIT_SUCCESS;
    }

    if (*fit_cmd) {
      const Loaded l = load(ft, seed);
      Vec x = ft_x.empty() ? Vec(l.cloud.point(l.index.nearest(l.cloud.centroid()))) : parse_point(ft_x);
      const T1Fit fit = fit_plane_t1_detail(l.cloud, l.index, l.tangents, x, ft_r, ft_lambda);
      const double b = beta1(l.cloud, l.index, x, ft_r, fit.plane);
      const double a = alpha(l.cloud, l.index, l.tangents, x, ft_lambda * ft_r);
      Json r = make_report("fit");
      r["source"] = l.source;
      r["x"] = to_json(x);
      r["r"] = ft_r;
      r["lambda"] = ft_lambda;
      r["plane"] = to_json(fit.plane);
      r["eigenvalues"] = to_json(fit.eigenvalues);
      r["eigengap"] = fit.gap;
      r["beta1"] = b;
      r["alpha_lambda_r"] = a;
      r["beta1_over_alpha"] = a > 0.0 ? b / a : std::numeric_limits<double>::infinity();
      emit(r, out);
      return EXIT_SUCCESS;
    }

    if (*ccbp_cmd) {
      const Loaded l = load(cb, seed);
      const Ccbp c = build_ccbp(l.cloud, l.index, l.tangents, ccbp_config(cb_opt));
      Json r = make_report("ccbp");
      r["source"] = l.source;
      r["ccbp"] = to_json(c);
      r["compat"] = to_json(validate_ccbp(c));
      emit(r, out);
      return EXIT_SUCCESS;
    }

    if (*param_cmd) {
      const Loaded l = load(pm, seed);
      const auto c = std::make_shared<Ccbp>(build_ccbp(l.cloud, l.index, l.tangents, ccbp_config(pm_opt)));
      const MapPipeline pipe(c);
      const double rho = pm_rho > 0.0 ? pm_rho : c->radius(0);
      const DistortionReport d = distortion(pipe, sigma0_samples(*c, pm_pairs, rho, seed));
      ContainmentOptions copt;
      copt.grid = pm_grid;
      copt.symmetric = pm_symmetric;
      const ContainmentReport cr = containment_check(l.cloud, l.index, pipe, pm_theta > 0.0 ? pm_theta : c->radius(0), copt);
      Json r = make_report("param");
      r["source"] = l.source;
      r["depth"] = pipe.depth();
      r["warnings"] = c->warnings;
      r["k_est"] = d.k_est;
      r["min_ratio"] = d.min_ratio;
      r["max_ratio"] = d.max_ratio;
      r["pairs"] = d.pairs;
      r["budgets"] = to_json(d.budgets);
      r["max_budget"] = d.max_budget;
      r["per_level_decay"] = to_json(d.max_step_by_level);
      Json cj{{"one_sided", cr.one_sided}, {"grid_spacing", cr.grid_spacing}, {"samples", cr.samples}, {"images", cr.images}};
      if (pm_symmetric) cj["reverse"] = cr.reverse;
      r["containment"] = cj;
      emit(r, out);
      return EXIT_SUCCESS;
    }

    if (*poincare_cmd) {
      const Loaded l = load(pc, seed);
      const GradMode mode = grad_mode_from_string(pc_mode);
      if (mode == GradMode::GivenRho) throw Error(Errc::InvalidInput, "poincare: the CLI supports tangential and lip modes");
      const NeighborGraph g = build_graph(l.cloud, l.index, pc_graph * l.spacing);
      const std::vector<Vec> centers = pick_centers(l, {}, pc_centers, seed);
      Json rows = Json::array();
      double cp = 0.0;
      for (int k = 1; k <= pc_family; ++k) {
        const ScalarField field = random_lipschitz(l.cloud.centroid(), 0.5, seed * 1000 + static_cast<std::uint64_t>(k));
        const Vec f = field.evaluate(l.cloud);
        const Vec rho = gradient_field(l.cloud, l.index, g, l.tangents, f, mode, pc_graph * l.spacing);
        for (size_t ci = 0; ci < centers.size(); ++ci)
          for (double rr : pc_r) {
            const PoincareTerms t = poincare_terms(l.cloud, l.index, f, rho, centers[ci], rr, pc_lambda, pc_p);
            cp = std::max(cp, t.ratio);
            rows.push_back(Json{{"function", k}, {"center", ci}, {"r", rr}, {"lhs", t.lhs}, {"rhs", t.rhs}, {"ratio", t.ratio}});
          }
      }
      const QuasiconvexityResult q = quasiconvexity(l.cloud, g, sample_pairs(l.cloud.size(), pc_pairs, seed));
      Json r = make_report("poincare");
      r["source"] = l.source;
      r["mode"] = pc_mode;
      r["p"] = pc_p;
      r["lambda"] = pc_lambda;
      r["graph_radius"] = g.radius;
      r["components"] = g.component_sizes.size();
      Json cj = Json::array();
      for (const Vec& x : centers) cj.push_back(to_json(x));
      r["centers"] = cj;
      r["ratios"] = rows;
      r["empirical_cp"] = cp;
      r["kappa"] = q.kappa;
      emit(r, out);
      return EXIT_SUCCESS;
    }

    if (*accept_cmd) {
      if (acc_ids.empty())
        for (const auto& c : acceptance::criteria()) acc_ids.push_back(c.id);
      acceptance::Options opt;
      opt.seed = seed;
      Json r = make_report("accept");
      r["seed"] = seed;
      Json verdicts = Json::array();
      bool all = true;
      for (int id : acc_ids) {
        const acceptance::Verdict v = acceptance::run(id, opt);
        std::cerr << v.line() << std::endl;
        verdicts.push_back(acceptance::verdict_json(v));
        all = all && v.pass;
      }
      r["verdicts"] = verdicts;
      r["all_pass"] = all;
      emit(r, out);
      return all ? EXIT_SUCCESS : EXIT_FAILURE;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return EXIT_SUCCESS;
}
