#include "irpamg/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "irpamg/errors.hpp"

namespace irpamg {

namespace {

ManifestTarget parse_target(const nlohmann::json& t, const std::filesystem::path& base) {
  if (!t.is_object()) throw DataError("target must be an object");
  ManifestTarget out;
  if (t.contains("point")) {
    const auto& p = t["point"];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
      throw DataError("point must be [x, y] integers");
    }
    out.point = PixelCoord{p[0].get<int>(), p[1].get<int>()};
  }
  if (t.contains("gt")) {
    if (!t["gt"].is_string()) throw DataError("gt must be a path string");
    out.gt = base / t["gt"].get<std::string>();
  }
  if (!out.point && !out.gt) throw DataError("target needs a point or a gt mask");
  return out;
}

}  // namespace

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("image") || !j["image"].is_string()) {
        throw DataError("record needs an image path");
      }
      ManifestRecord rec;
      rec.image = base / j["image"].get<std::string>();
      if (j.contains("targets")) {
        if (!j["targets"].is_array()) throw DataError("targets must be an array");
        for (const auto& t : j["targets"]) rec.targets.push_back(parse_target(t, base));
      }
      if (j.contains("split") && j["split"].is_string()) rec.split = j["split"].get<std::string>();
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string image_id(const std::filesystem::path& image) { return image.stem().string(); }

}  // namespace irpamg
