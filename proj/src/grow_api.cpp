#include "irpamg/grow_api.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace irpamg {

PamgConfig resolve_config(const GrowRequest& req, PamgConfig cfg) {
  cfg.connectivity = req.connectivity;
  cfg.variant = req.variant;
  if (req.k_radius.has_value() != req.radius.has_value()) {
    throw std::invalid_argument("k_radius and radius must be given together");
  }
  if (req.r_s && req.k_radius) {
    throw std::invalid_argument("give either r_s or k_radius with radius, not both");
  }
  if (req.r_s) {
    cfg.r_s = *req.r_s;
    cfg.growth_budget.reset();
  } else if (req.k_radius) {
    if (!(*req.radius > 0.0)) throw std::invalid_argument("radius must be positive");
    if (!(*req.k_radius > 1.0)) throw std::invalid_argument("k_radius must exceed 1");
    cfg.r_s = *req.k_radius * *req.radius;
    cfg.growth_budget.reset();
  }
  cfg.validate();
  return cfg;
}

namespace {

std::optional<double> optional_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
  return j[key].get<double>();
}

}  // namespace

GrowRequest grow_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  const auto& seed = j.value("seed", nlohmann::json());
  if (!seed.is_array() || seed.size() != 2 || !seed[0].is_number_integer() ||
      !seed[1].is_number_integer()) {
    throw std::invalid_argument("seed must be [x, y] integers");
  }
  GrowRequest req;
  req.seed = {seed[0].get<int>(), seed[1].get<int>()};
  req.r_s = optional_number(j, "r_s");
  req.k_radius = optional_number(j, "k_radius");
  req.radius = optional_number(j, "radius");
  if (j.contains("connectivity")) {
    const auto& c = j["connectivity"];
    if (c.is_number_integer()) {
      req.connectivity = parse_connectivity(std::to_string(c.get<int>()));
    } else if (c.is_string()) {
      req.connectivity = parse_connectivity(c.get<std::string>());
    } else {
      throw std::invalid_argument("connectivity must be 4 or 8");
    }
  }
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw std::invalid_argument("variant must be a string");
    req.variant = parse_variant(j["variant"].get<std::string>());
  }
  return req;
}

nlohmann::json geometry_to_json(const GeomSupervision& g) {
  return {{"centroid", {g.centroid_x, g.centroid_y}},
          {"area", g.area},
          {"equiv_radius", g.equiv_radius}};
}

nlohmann::json grow_response_json(const MaskResult& result) {
  const auto trace = trace_to_json(result.trace);
  nlohmann::json out{{"v", 1},
                     {"mask", rle_to_json(result.mask)},
                     {"k_star", trace["k_star"]},
                     {"energies", trace["energies"]},
                     {"geometry", geometry_to_json(mask_geometry(result.mask))},
                     {"inverted", result.trace.inverted}};
  return out;
}

}  // namespace irpamg
