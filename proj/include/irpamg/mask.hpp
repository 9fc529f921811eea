#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "irpamg/raster.hpp"

namespace irpamg {

/// Half-open run [start, start + length) over the row-major linear index y*w + x.
struct Run {
  std::uint32_t start = 0;
  std::uint32_t length = 0;

  friend bool operator==(const Run&, const Run&) = default;
};

/// Binary pixel set stored as canonical runs: sorted, non-overlapping, maximal.
class Mask {
 public:
  Mask(int width, int height);

  static Mask from_pixels(int width, int height, std::span<const PixelCoord> pixels);
  static Mask from_bitmap(int width, int height, std::span<const std::uint8_t> bitmap);
  /// Validates and canonicalizes (touching runs are merged). Throws DataError.
  static Mask from_runs(int width, int height, std::vector<Run> runs);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Run>& runs() const { return runs_; }
  std::size_t area() const;
  bool empty() const { return runs_.empty(); }
  bool contains(PixelCoord p) const;

  std::vector<std::uint8_t> bitmap() const;
  /// Foreground pixels in row-major order.
  std::vector<PixelCoord> pixels() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_;
  int height_;
  std::vector<Run> runs_;
};

struct GeomSupervision {
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  std::size_t area = 0;
  double equiv_radius = 0.0;
};

/// Centroid of pixel centers, pixel count, and sqrt(area / pi). Throws EmptyMask.
GeomSupervision mask_geometry(const Mask& m);

double equivalent_radius(std::size_t area);

// RLE-in-JSON: {"w":int,"h":int,"runs":[[start,len],...]}
nlohmann::json rle_to_json(const Mask& m);
Mask rle_from_json(const nlohmann::json& j);
std::string encode_rle(const Mask& m);
Mask decode_rle(std::string_view text);

/// 8-bit grayscale PNG, foreground 255 and background 0.
std::vector<std::uint8_t> mask_to_png(const Mask& m);
Mask png_to_mask(std::span<const std::uint8_t> bytes);
void write_mask_png(const Mask& m, const std::filesystem::path& path);
Mask read_mask_png(const std::filesystem::path& path);

/// Connected components ordered by their first pixel in row-major order.
std::vector<Mask> connected_components(const Mask& m, bool eight_connected = true);

/// Square (Chebyshev) dilation by `radius` pixels, clipped to bounds.
Mask dilate(const Mask& m, int radius);

Mask mask_union(const Mask& a, const Mask& b);
Mask mask_difference(const Mask& a, const Mask& b);
std::size_t intersection_area(const Mask& a, const Mask& b);

}  // namespace irpamg
