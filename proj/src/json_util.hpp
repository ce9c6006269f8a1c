#ifndef SCATLAB_JSON_UTIL_HPP
#define SCATLAB_JSON_UTIL_HPP

// Private helpers shared by the config, dataset and record writers.

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "scatlab/common.hpp"
#include "scatlab/domain.hpp"

namespace scatlab::detail {

using nlohmann::json;

/// Throws ConfigError naming the first key of `obj` not in `allowed`.
inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline json to_json(const SceneSpec& s) {
  json prims = json::array();
  for (const auto& p : s.primitives) {
    json j{{"kind", p.kind == Primitive::Kind::annulus ? "annulus" : "circle"},
           {"center", {p.center.x, p.center.y}},
           {"radius", p.outer_radius},
           {"eps_r", p.eps_r},
           {"label", p.label}};
    if (p.kind == Primitive::Kind::annulus) j["inner_radius"] = p.inner_radius;
    prims.push_back(std::move(j));
  }
  return {{"name", s.name}, {"primitives", std::move(prims)}};
}

inline SceneSpec scene_from_json(const json& j, const std::string& where) {
  if (j.is_string()) return named_scene(j.get<std::string>());
  reject_unknown(j, {"name", "primitives"}, where);
  SceneSpec s;
  s.name = j.value("name", std::string("custom"));
  if (!j.contains("primitives") || !j["primitives"].is_array())
    throw ConfigError("'" + where + ".primitives' must be an array");
  for (const auto& pj : j["primitives"]) {
    reject_unknown(pj, {"kind", "center", "radius", "inner_radius", "eps_r", "label"}, where + ".primitives[]");
    Primitive p;
    const std::string kind = pj.value("kind", std::string("circle"));
    if (kind == "annulus")
      p.kind = Primitive::Kind::annulus;
    else if (kind != "circle")
      throw ConfigError("unknown primitive kind '" + kind + "'");
    const auto c = pj.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw ConfigError("primitive center must be [x, y]");
    p.center = {c[0], c[1]};
    p.outer_radius = pj.at("radius").get<double>();
    p.inner_radius = pj.value("inner_radius", 0.0);
    p.eps_r = pj.at("eps_r").get<double>();
    p.label = pj.value("label", std::string());
    s.primitives.push_back(std::move(p));
  }
  return s;
}

inline json to_json(const ImagingGrid& g) {
  return {{"nx", g.nx()}, {"ny", g.ny()}, {"extent", {g.extent_x(), g.extent_y()}},
          {"center", {g.center().x, g.center().y}}};
}

inline ImagingGrid grid_from_json(const json& j) {
  const auto e = j.at("extent").get<std::vector<double>>();
  const auto c = j.at("center").get<std::vector<double>>();
  if (e.size() != 2 || c.size() != 2) throw ParseError("grid extent and center must have two entries");
  return ImagingGrid(j.at("nx").get<int>(), j.at("ny").get<int>(), e[0], e[1], {c[0], c[1]});
}

/// Shortest text that reads back to the same double.
std::string format_double(double v);
/// Strict parse of a full token; throws ParseError with `line` on failure.
double parse_double(const std::string& token, long line);

}  // namespace scatlab::detail

#endif  // SCATLAB_JSON_UTIL_HPP
