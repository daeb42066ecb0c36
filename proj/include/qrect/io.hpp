#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qrect/cloud.hpp"

namespace qrect {

struct CloudMeta {
  int n = 0;
  int d = 0;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

/// CSV with header x1,...,xD,w and values at 17 significant digits, plus the {n, d} sidecar.
inline void write_cloud_csv(const std::filesystem::path& path, const WeightedCloud& cloud, bool with_weights = true) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  const auto dim = cloud.dim_ambient();
  for (Eigen::Index c = 0; c < dim; ++c) out << (c ? "," : "") << "x" << c + 1;
  if (with_weights) out << ",w";
  out << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    line.clear();
    for (Eigen::Index c = 0; c < dim; ++c) {
      if (c) line += ',';
      line += fmt::format("{:.17g}", cloud.points()(c, i));
    }
    if (with_weights) line += fmt::format(",{:.17g}", cloud.weight(i));
    out << line << '\n';
  }
  std::ofstream meta(sidecar_path(path));
  if (!meta) throw Error(Errc::Io, "cannot write sidecar for " + path.string());
  meta << nlohmann::json{{"n", cloud.dim_intrinsic()}, {"d", cloud.codim()}}.dump() << '\n';
}

inline CloudMeta read_meta(const std::filesystem::path& csv) {
  std::ifstream in(sidecar_path(csv));
  if (!in) throw Error(Errc::Io, "missing sidecar " + sidecar_path(csv).string());
  try {
    const auto j = nlohmann::json::parse(in);
    return {j.at("n").get<int>(), j.at("d").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, "bad sidecar " + sidecar_path(csv).string() + ": " + e.what());
  }
}

/// Reads a cloud; without a w column the weights are uniform and sum to total_mass.
inline WeightedCloud read_cloud_csv(const std::filesystem::path& path, double total_mass = 1.0) {
  const CloudMeta meta = read_meta(path);
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Io, path.string() + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const bool has_w = !header.empty() && header.back() == "w";
  const int dim = static_cast<int>(header.size()) - (has_w ? 1 : 0);
  if (dim != meta.n + meta.d) throw Error(Errc::DimensionMismatch, path.string() + ": column count disagrees with sidecar n + d");
  std::vector<double> coords, weights;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      try {
        size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size() && cell.find_first_not_of(" \r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(Errc::Io, fmt::format("{}: row {} has a malformed value '{}'", path.string(), row, cell));
      }
      (col < dim ? coords : weights).push_back(v);
      ++col;
    }
    if (col != static_cast<int>(header.size())) throw Error(Errc::Io, fmt::format("{}: row {} has {} columns", path.string(), row, col));
  }
  const auto count = static_cast<Eigen::Index>(coords.size() / static_cast<size_t>(dim));
  Mat pts = Eigen::Map<const Mat>(coords.data(), dim, count);
  if (!has_w) return WeightedCloud::uniform(meta.n, std::move(pts), total_mass);
  return WeightedCloud(meta.n, std::move(pts), Eigen::Map<const Vec>(weights.data(), count));
}

}  // namespace qrect
