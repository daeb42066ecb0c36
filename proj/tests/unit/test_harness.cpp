#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "helpers.hpp"
#include "qrect/generators.hpp"
#include "qrect/io.hpp"
#include "qrect/report.hpp"

using namespace qrect;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qrect_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_code(Errc code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

std::vector<GeneratorSpec> all_kinds() {
  std::vector<GeneratorSpec> out;
  for (auto k : {GeneratorKind::PlaneDisk, GeneratorKind::SphereCap, GeneratorKind::LipschitzGraph,
                 GeneratorKind::PuncturedDisk, GeneratorKind::TwoPlaneBlend}) {
    GeneratorSpec s;
    s.kind = k;
    s.count = 1500;
    s.seed = 9;
    if (k == GeneratorKind::LipschitzGraph) s.amplitude = 0.05;
    if (k == GeneratorKind::TwoPlaneBlend) s.n = 1;
    out.push_back(s);
  }
  return out;
}

double dist_to_square(double u, double v, double cx, double half) {
  const double dx = std::max(0.0, std::abs(u - cx) - half), dy = std::max(0.0, std::abs(v) - half);
  return std::hypot(dx, dy);
}

}  // namespace

TEST(Generate, SeedDeterministicBitIdenticalCsv) {
  for (const GeneratorSpec& s : all_kinds()) {
    const fs::path a = scratch("det_a.csv"), b = scratch("det_b.csv");
    write_cloud_csv(a, generate(s).cloud);
    write_cloud_csv(b, generate(s).cloud);
    EXPECT_EQ(slurp(a), slurp(b)) << to_string(s.kind);
  }
  GeneratorSpec s;
  const Generated g1 = generate(s);
  s.seed = 2;
  EXPECT_NE(g1.cloud.points(), generate(s).cloud.points());
}

TEST(Generate, CloudsSatisfyInvariantsAndTangentsAreProjections) {
  for (const GeneratorSpec& s : all_kinds()) {
    const Generated g = generate(s);
    EXPECT_EQ(g.tangents.size(), g.cloud.size());
    EXPECT_GT(g.cloud.weights().minCoeff(), 0.0);
    for (Eigen::Index i = 0; i < g.cloud.size(); i += 37) {
      const Mat& p = g.tangents.at(i);
      EXPECT_LE((p * p - p).norm(), 1e-12);
      EXPECT_LE((p - p.transpose()).norm(), 1e-15);
      EXPECT_NEAR(p.trace(), g.cloud.dim_intrinsic(), 1e-12);
    }
  }
}

TEST(Generate, PlaneDiskIsFlatAndAhlforsRegular) {
  GeneratorSpec s;
  s.count = 2000;
  const Generated g = generate(s);
  EXPECT_EQ(g.cloud.points().row(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(g.cloud.total_mass(), std::numbers::pi, 1e-12);
  const SpatialIndex idx = make_index(g.cloud);
  AhlforsSummary sum;
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<uint64_t>(g.cloud.size()));
    for (double r : ahlfors_ratio(g.cloud, idx, g.cloud.point(i), {0.1, 0.2, 0.4, 0.8, 1.0})) sum.add(r / std::numbers::pi);
  }
  EXPECT_LE(sum.constant(), 4.0);
}

TEST(Generate, PuncturedDiskAvoidsTheSquare) {
  GeneratorSpec s;
  s.kind = GeneratorKind::PuncturedDisk;
  s.count = 20000;
  const Generated g = generate(s);
  int near_hole = 0;
  for (Eigen::Index i = 0; i < g.cloud.size(); ++i) {
    const auto p = g.cloud.point(i);
    EXPECT_EQ(p(2), 0.0);
    const bool inside = std::abs(p(0) - 0.5) <= 0.05 && std::abs(p(1)) <= 0.05;
    ASSERT_FALSE(inside) << "sample " << i;
    if (dist_to_square(p(0), p(1), 0.5, 0.05) < 0.02) ++near_hole;
  }
  EXPECT_GT(near_hole, 50);
}

TEST(Generate, SphereCapOnTheUnitSphere) {
  GeneratorSpec s;
  s.kind = GeneratorKind::SphereCap;
  s.count = 2000;
  const Generated g = generate(s);
  for (Eigen::Index i = 0; i < g.cloud.size(); ++i) ASSERT_NEAR(g.cloud.point(i).norm(), 1.0, 1e-12);
  EXPECT_GE(g.cloud.points().row(2).minCoeff(), 0.5 - 1e-12);
}

TEST(Generate, BadSpecs) {
  GeneratorSpec s;
  s.count = 0;
  expect_code(Errc::BadSpec, [&] { generate(s); });
  s = {};
  s.kind = GeneratorKind::PuncturedDisk;
  s.hole_center = 0.95;
  expect_code(Errc::BadSpec, [&] { generate(s); });
  s = {};
  s.kind = GeneratorKind::SphereCap;
  s.n = 3;
  expect_code(Errc::BadSpec, [&] { generate(s); });
  s = {};
  s.kind = GeneratorKind::TwoPlaneBlend;
  s.n = 2;
  expect_code(Errc::BadSpec, [&] { generate(s); });
  s = {};
  s.jitter = 1.5;
  expect_code(Errc::BadSpec, [&] { generate(s); });
  expect_code(Errc::BadSpec, [] { generator_kind_from_string("torus"); });
}

TEST(Generate, PuncturedDiskCorkscrew) {
  // for each (x, r), search the largest disk inside B_r(x) and the domain, by brute force over a grid of centers
  GeneratorSpec s;
  s.kind = GeneratorKind::PuncturedDisk;
  s.count = 4000;
  const Generated g = generate(s);
  std::mt19937_64 rng(17);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  double worst = 1.0;
  for (int t = 0; t < 200; ++t) {
    const auto x = g.cloud.point(static_cast<Eigen::Index>(rng() % static_cast<uint64_t>(g.cloud.size())));
    const double r = 0.02 * std::pow(50.0, unit());
    double best = 0.0;
    const int m = 60;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double u = x(0) + r * (2.0 * i / m - 1.0), v = x(1) + r * (2.0 * j / m - 1.0);
        const bool in_hole = std::abs(u - 0.5) <= 0.05 && std::abs(v) <= 0.05;
        if (in_hole) continue;
        const double clearance = std::min({r - std::hypot(u - x(0), v - x(1)), 1.0 - std::hypot(u, v),
                                           dist_to_square(u, v, 0.5, 0.05)});
        best = std::max(best, clearance);
      }
    worst = std::min(worst, best / r);
  }
  EXPECT_GE(worst, 1.0 / 20.0);
}

TEST(Io, CsvRoundTripIsExact) {
  GeneratorSpec s;
  s.kind = GeneratorKind::LipschitzGraph;
  s.amplitude = 0.05;
  s.count = 500;
  const Generated g = generate(s);
  const fs::path p = scratch("round.csv");
  write_cloud_csv(p, g.cloud);
  const CloudMeta meta = read_meta(p);
  EXPECT_EQ(meta.n, 2);
  EXPECT_EQ(meta.d, 1);
  const WeightedCloud back = read_cloud_csv(p);
  EXPECT_EQ(back.points(), g.cloud.points());
  EXPECT_EQ(back.weights(), g.cloud.weights());
  EXPECT_EQ(back.dim_intrinsic(), 2);

  write_cloud_csv(p, g.cloud, false);
  const WeightedCloud uni = read_cloud_csv(p, 4.0);
  EXPECT_EQ(uni.points(), g.cloud.points());
  EXPECT_NEAR(uni.total_mass(), 4.0, 1e-12);
  EXPECT_EQ(uni.weights().minCoeff(), uni.weights().maxCoeff());
}

TEST(Io, MalformedInputs) {
  const fs::path p = scratch("bad.csv");
  {
    std::ofstream(p) << "x1,x2,x3,w\n0,0,0,1\n1,2,oops,1\n";
    std::ofstream(sidecar_path(p)) << R"({"n":2,"d":1})";
  }
  expect_code(Errc::Io, [&] { read_cloud_csv(p); });
  std::ofstream(p) << "x1,x2,x3,w\n0,0,0,1\n1,2\n";
  expect_code(Errc::Io, [&] { read_cloud_csv(p); });
  std::ofstream(sidecar_path(p)) << R"({"n":1,"d":1})";
  expect_code(Errc::DimensionMismatch, [&] { read_cloud_csv(p); });
  fs::remove(sidecar_path(p));
  expect_code(Errc::Io, [&] { read_cloud_csv(p); });
  expect_code(Errc::Io, [&] { read_meta(scratch("missing.csv")); });
}

TEST(Report, VersionAndSeventeenDigits) {
  Json j = make_report("analyze");
  j["third"] = 1.0 / 3.0;
  j["big"] = std::numeric_limits<double>::infinity();
  j["count"] = 3;
  const std::string text = dump_report(j);
  const Json back = Json::parse(text);
  EXPECT_EQ(back.at("version"), report_version);
  EXPECT_EQ(back.at("command"), "analyze");
  EXPECT_EQ(back.at("third").get<double>(), 1.0 / 3.0);
  EXPECT_EQ(back.at("big"), "inf");
  EXPECT_EQ(back.at("count"), 3);
  EXPECT_NE(text.find("0.33333333333333331"), std::string::npos);
  std::regex number(R"(-?\d+\.\d+(e[-+]\d+)?)");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
    std::string digits = it->str();
    digits = digits.substr(0, digits.find('e'));
    digits.erase(std::remove_if(digits.begin(), digits.end(), [](char ch) { return ch == '.' || ch == '-'; }), digits.end());
    digits.erase(0, digits.find_first_not_of('0'));
    EXPECT_LE(digits.size(), 17u);
  }
  EXPECT_EQ(dump_report(Json{{"x", 0.1}}, -1), "{\"x\":0.10000000000000001}\n");
}
