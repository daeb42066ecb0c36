#pragma once

#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "qrect/ccbp.hpp"

namespace qrect {

inline constexpr const char* report_version = "1.0";

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Matrix as a list of columns.
inline Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(to_json(Vec(m.col(c))));
  return a;
}

inline Json to_json(const AffinePlane& p) { return Json{{"base", to_json(p.base())}, {"frame", to_json(p.frame())}}; }

inline Json to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline Json to_json(const PairOffender& o) {
  return Json{{"level_a", o.level_a}, {"node_a", o.node_a}, {"level_b", o.level_b}, {"node_b", o.node_b}, {"value", o.value}};
}

inline Json to_json(const CompatReport& r) {
  return Json{{"eps_initial", r.eps_initial},
              {"eps_sigma0", r.eps_sigma0},
              {"eps_same_level", r.eps_same_level},
              {"eps_cross_level", r.eps_cross_level},
              {"same_by_level", to_json(r.same_by_level)},
              {"cross_by_level", to_json(r.cross_by_level)},
              {"same_pairs", r.same_pairs},
              {"cross_pairs", r.cross_pairs},
              {"worst_same", to_json(r.worst_same)},
              {"worst_cross", to_json(r.worst_cross)},
              {"worst_sigma0", to_json(r.worst_sigma0)}};
}

inline Json to_json(const Ccbp& c) {
  Json levels = Json::array();
  for (const auto& lv : c.levels) {
    Json planes = Json::array();
    for (const auto& p : lv.planes) planes.push_back(to_json(p.frame()));
    levels.push_back(Json{{"k", lv.k},
                          {"radius", lv.radius},
                          {"raw_index", lv.raw_index},
                          {"node_index", lv.node_index},
                          {"nodes", to_json(lv.nodes)},
                          {"plane_frames", planes}});
  }
  return Json{{"l0", c.l0},
              {"lambda", c.lambda},
              {"unit", c.unit},
              {"anchor", to_json(c.anchor)},
              {"region_radius", c.region_radius},
              {"spacing", c.spacing},
              {"sigma0_node", c.sigma0_node},
              {"sigma0", to_json(c.sigma0)},
              {"warnings", c.warnings},
              {"levels", levels}};
}

namespace detail {

inline void dump_json(const Json& j, std::string& out, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<size_t>(d * indent), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) { out += "{}"; break; }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_json(it.value(), out, indent, depth + 1);
      }
      pad(depth);
      out += '}';
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) { out += "[]"; break; }
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        pad(depth + 1);
        dump_json(j[i], out, indent, depth + 1);
      }
      pad(depth);
      out += ']';
      break;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt::format("{:.17g}", v) : (std::isnan(v) ? "null" : (v > 0 ? "\"inf\"" : "\"-inf\""));
      break;
    }
    default: out += j.dump();
  }
}

}  // namespace detail

/// Serializes with every float at 17 significant digits; non-finite values become strings.
inline std::string dump_report(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_json(j, out, indent, 0);
  out += '\n';
  return out;
}

inline Json make_report(const std::string& command) { return Json{{"version", report_version}, {"command", command}}; }

}  // namespace qrect
