#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irpamg/raster.hpp"

namespace irpamg {

struct ManifestTarget {
  std::optional<PixelCoord> point;
  std::optional<std::filesystem::path> gt;  // resolved against the manifest directory
};

struct ManifestRecord {
  std::filesystem::path image;  // resolved against the manifest directory
  std::vector<ManifestTarget> targets;
  std::string split;
};

/// JSONL, one record per line: {"image": path, "targets": [{"point": [x,y]} | {"gt": path}],
/// "split"?}. Blank lines are skipped. Throws DataError with the line number.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

/// Image id used by the service and by batch outputs: the file stem.
std::string image_id(const std::filesystem::path& image);

}  // namespace irpamg
