#include "irpamg/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "irpamg/errors.hpp"

namespace irpamg {

Raster::Raster(int width, int height, std::vector<double> data, int bit_depth_origin)
    : width_(width), height_(height), data_(std::move(data)), bit_depth_origin_(bit_depth_origin) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("raster dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("raster data length does not match width*height");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("raster intensity outside [0,1]");
    }
  }
}

Raster Raster::filled(int width, int height, double value) {
  return Raster(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0)),
                                    value));
}

Raster Raster::complement() const {
  std::vector<double> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), [](double v) { return 1.0 - v; });
  return Raster(width_, height_, std::move(out), bit_depth_origin_);
}

namespace {

constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

bool has_png_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kPngMagic.size() &&
         std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin());
}

bool has_pgm_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
}

}  // namespace

RawImage decode_image(std::span<const std::uint8_t> bytes) {
  if (!has_png_magic(bytes) && !has_pgm_magic(bytes)) {
    throw DataError("unsupported image format (expected PNG or binary PGM)");
  }
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8U,
                       const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw DataError(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty() || decoded.rows == 0 || decoded.cols == 0) {
    throw DataError("image is empty or could not be decoded");
  }
  if (decoded.channels() != 1) {
    throw DataError("multi-channel image (expected single-channel grayscale)");
  }

  RawImage out;
  out.width = decoded.cols;
  out.height = decoded.rows;
  out.samples.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
  if (decoded.depth() == CV_8U) {
    out.bit_depth = 8;
    for (int y = 0; y < decoded.rows; ++y) {
      const auto* row = decoded.ptr<std::uint8_t>(y);
      std::copy(row, row + decoded.cols, out.samples.begin() + std::ptrdiff_t(y) * decoded.cols);
    }
  } else if (decoded.depth() == CV_16U) {
    out.bit_depth = 16;
    for (int y = 0; y < decoded.rows; ++y) {
      const auto* row = decoded.ptr<std::uint16_t>(y);
      std::copy(row, row + decoded.cols, out.samples.begin() + std::ptrdiff_t(y) * decoded.cols);
    }
  } else {
    throw DataError("unsupported sample depth (expected 8 or 16 bit)");
  }
  return out;
}

RawImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open image: " + path.string());
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const RawImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.samples.size() !=
          static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw std::invalid_argument("encode_png: inconsistent image dimensions");
  }
  cv::Mat mat;
  if (image.bit_depth == 16) {
    mat.create(image.height, image.width, CV_16U);
    std::copy(image.samples.begin(), image.samples.end(), mat.ptr<std::uint16_t>(0));
  } else {
    mat.create(image.height, image.width, CV_8U);
    auto* dst = mat.ptr<std::uint8_t>(0);
    for (std::size_t i = 0; i < image.samples.size(); ++i) {
      dst[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(image.samples[i], 255));
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", mat, out)) {
    throw DataError("PNG encoding failed");
  }
  return out;
}

std::uint16_t sample_percentile(const RawImage& image, double percent) {
  if (image.samples.empty()) {
    throw DataError("percentile of empty image");
  }
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw std::invalid_argument("percentile outside [0,100]");
  }
  std::vector<std::size_t> histogram(image.bit_depth == 16 ? 65536 : 256, 0);
  for (std::uint16_t s : image.samples) {
    ++histogram[std::min<std::size_t>(s, histogram.size() - 1)];
  }
  const auto n = image.samples.size();
  const auto rank = static_cast<std::size_t>(
      std::llround(percent / 100.0 * static_cast<double>(n - 1)));
  std::size_t seen = 0;
  for (std::size_t v = 0; v < histogram.size(); ++v) {
    seen += histogram[v];
    if (seen > rank) {
      return static_cast<std::uint16_t>(v);
    }
  }
  return static_cast<std::uint16_t>(histogram.size() - 1);
}

Raster normalize(const RawImage& image, const Normalization& norm) {
  if (image.width < 1 || image.height < 1 || image.samples.empty()) {
    throw DataError("zero-size image");
  }
  double lo = 0.0;
  double hi = 0.0;
  if (norm.mode == Normalization::Mode::MinMax) {
    const auto [mn, mx] = std::minmax_element(image.samples.begin(), image.samples.end());
    lo = *mn;
    hi = *mx;
  } else {
    if (!(norm.lo < norm.hi)) {
      throw std::invalid_argument("percentile normalization requires lo < hi");
    }
    lo = sample_percentile(image, norm.lo);
    hi = sample_percentile(image, norm.hi);
  }

  std::vector<double> data(image.samples.size(), 0.0);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double v = image.samples[i];
      data[i] = v <= lo ? 0.0 : (v >= hi ? 1.0 : (v - lo) / range);
    }
  }
  return Raster(image.width, image.height, std::move(data), image.bit_depth);
}

Raster load_raster(const std::filesystem::path& path, const Normalization& norm) {
  return normalize(read_image(path), norm);
}

RawImage to_raw8(const Raster& raster) {
  RawImage out{raster.width(), raster.height(), 8, {}};
  out.samples.resize(raster.size());
  const auto data = raster.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.samples[i] = static_cast<std::uint16_t>(std::lround(data[i] * 255.0));
  }
  return out;
}

double local_background_median(const Raster& img, PixelCoord p, int window) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("median window must be odd and >= 3");
  }
  if (!img.contains(p)) {
    throw std::out_of_range("median center outside raster");
  }
  const int half = window / 2;
  const int x0 = std::max(0, p.x - half);
  const int x1 = std::min(img.width() - 1, p.x + half);
  const int y0 = std::max(0, p.y - half);
  const int y1 = std::min(img.height() - 1, p.y + half);

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>((x1 - x0 + 1) * (y1 - y0 + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      values.push_back(img(x, y));
    }
  }
  const auto mid = values.begin() + std::ptrdiff_t(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

PolarityResult unify_polarity(const Raster& img, PixelCoord seed, int window) {
  if (!img.contains(seed)) {
    throw std::out_of_range("seed outside raster");
  }
  if (img.at(seed) < local_background_median(img, seed, window)) {
    return {img.complement(), true};
  }
  return {img, false};
}

}  // namespace irpamg
