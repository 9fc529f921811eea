#pragma once

#include <optional>

#include <json.hpp>

#include "irpamg/pamg.hpp"

namespace irpamg {

/// One click-to-mask request as accepted by both the CLI and the service.
struct GrowRequest {
  PixelCoord seed;
  std::optional<double> r_s;
  /// Guided mode: r_s = k_radius * radius. Both must be given together.
  std::optional<double> k_radius;
  std::optional<double> radius;
  Connectivity connectivity = Connectivity::Eight;
  EnergyVariant variant = EnergyVariant::Full;
};

/// Resolves the request into an engine configuration. Throws
/// std::invalid_argument when r_s and guided parameters are mixed or incomplete.
PamgConfig resolve_config(const GrowRequest& req, PamgConfig base = {});

/// Parses {"seed":[x,y], "r_s"?, "k_radius"?, "radius"?, "connectivity"?, "variant"?}.
/// Throws std::invalid_argument on schema errors.
GrowRequest grow_request_from_json(const nlohmann::json& j);

/// {"v":1, "mask": RLE, "k_star", "energies" (null for sentinels), "geometry", "inverted"}.
nlohmann::json grow_response_json(const MaskResult& result);

nlohmann::json geometry_to_json(const GeomSupervision& g);

}  // namespace irpamg
