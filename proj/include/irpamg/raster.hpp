#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace irpamg {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Normalized single-channel intensity grid, values in [0,1], row-major.
/// Immutable after construction.
class Raster {
 public:
  Raster(int width, int height, std::vector<double> data, int bit_depth_origin = 8);

  static Raster filled(int width, int height, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  int bit_depth_origin() const { return bit_depth_origin_; }
  std::span<const double> data() const { return data_; }

  bool contains(PixelCoord p) const {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }
  std::size_t index(PixelCoord p) const {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.x);
  }
  double operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  double at(PixelCoord p) const { return data_[index(p)]; }

  /// Elementwise 1 - I.
  Raster complement() const;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> data_;
  int bit_depth_origin_;
};

/// Undecoded-to-float sample grid as stored in the source file (8 or 16 bit).
struct RawImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

struct Normalization {
  enum class Mode { MinMax, Percentile };
  Mode mode = Mode::MinMax;
  double lo = 1.0;   // percentile mode only, in [0,100]
  double hi = 99.0;

  static Normalization minmax() { return {}; }
  static Normalization percentile(double lo, double hi) { return {Mode::Percentile, lo, hi}; }
};

/// Decodes an 8/16-bit single-channel PNG or binary PGM (P5). Throws DataError.
RawImage decode_image(std::span<const std::uint8_t> bytes);
RawImage read_image(const std::filesystem::path& path);

/// Lossless PNG encoding at the image's own bit depth.
std::vector<std::uint8_t> encode_png(const RawImage& image);

/// Sample value at sorted rank round(p/100 * (N-1)), computed from a histogram.
std::uint16_t sample_percentile(const RawImage& image, double percent);

Raster normalize(const RawImage& image, const Normalization& norm = {});
Raster load_raster(const std::filesystem::path& path, const Normalization& norm = {});

/// Quantizes a raster to 8 bits (round(255 * v)) for display paths.
RawImage to_raw8(const Raster& raster);

/// Median of the window x window neighbourhood around p, clipped at the borders.
/// Even-sized clipped windows average the two middle values.
double local_background_median(const Raster& img, PixelCoord p, int window);

struct PolarityResult {
  Raster raster;
  bool inverted = false;
};

/// Inverts the image when the seed is darker than its local background median.
PolarityResult unify_polarity(const Raster& img, PixelCoord seed, int window = 21);

}  // namespace irpamg
