#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "irpamg/raster.hpp"

namespace irpamg {

enum class View { Raw, Clahe, Pseudocolor };

View parse_view(std::string_view name);  // throws std::invalid_argument
std::string_view to_string(View v);

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Parses "x,y,w,h" with w, h >= 1. Throws std::invalid_argument.
CropRect parse_crop(std::string_view text);

/// Intersects the rectangle with the image; nullopt when nothing is left.
std::optional<CropRect> clip_crop(const CropRect& rect, int width, int height);

RawImage crop(const RawImage& image, const CropRect& rect);

/// Contrast-limited adaptive histogram equalization, 8x8 tiles, clip limit 2.0.
/// Keeps the bit depth of the input.
RawImage clahe(const RawImage& image);

/// Min-max stretch to 8 bits followed by the inferno colormap. Returns
/// interleaved RGB, 3 bytes per pixel.
std::vector<std::uint8_t> pseudocolor_rgb(const RawImage& image);

/// PNG bytes for one view of the image, cropped first when a rectangle is given.
std::vector<std::uint8_t> render_view_png(const RawImage& image, View view,
                                          const std::optional<CropRect>& rect = std::nullopt);

}  // namespace irpamg
