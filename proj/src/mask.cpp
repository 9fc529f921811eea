#include "irpamg/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "irpamg/errors.hpp"

namespace irpamg {

namespace {

std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

std::vector<Run> runs_from_bitmap(std::span<const std::uint8_t> bitmap) {
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < bitmap.size()) {
    if (!bitmap[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < bitmap.size() && bitmap[i]) {
      ++i;
    }
    runs.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(i - start)});
  }
  return runs;
}

void require_same_shape(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("mask dimensions differ");
  }
}

}  // namespace

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
}

Mask Mask::from_pixels(int width, int height, std::span<const PixelCoord> pixels) {
  std::vector<std::uint8_t> bitmap(pixel_count(width, height), 0);
  for (const auto& p : pixels) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
      throw std::out_of_range("mask pixel outside bounds");
    }
    bitmap[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(p.x)] = 1;
  }
  return from_bitmap(width, height, bitmap);
}

Mask Mask::from_bitmap(int width, int height, std::span<const std::uint8_t> bitmap) {
  Mask m(width, height);
  if (bitmap.size() != pixel_count(width, height)) {
    throw std::invalid_argument("bitmap length does not match mask dimensions");
  }
  m.runs_ = runs_from_bitmap(bitmap);
  return m;
}

Mask Mask::from_runs(int width, int height, std::vector<Run> runs) {
  Mask m(width, height);
  const std::uint64_t total = pixel_count(width, height);
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.start < b.start; });
  std::vector<Run> canonical;
  canonical.reserve(runs.size());
  std::uint64_t previous_end = 0;
  for (const auto& r : runs) {
    if (r.length == 0) {
      throw DataError("RLE run with zero length");
    }
    const std::uint64_t end = std::uint64_t(r.start) + r.length;
    if (end > total) {
      throw DataError("RLE run outside mask bounds");
    }
    if (!canonical.empty() && r.start < previous_end) {
      throw DataError("RLE runs overlap");
    }
    if (!canonical.empty() && r.start == previous_end) {
      canonical.back().length += r.length;
    } else {
      canonical.push_back(r);
    }
    previous_end = end;
  }
  m.runs_ = std::move(canonical);
  return m;
}

std::size_t Mask::area() const {
  std::size_t total = 0;
  for (const auto& r : runs_) {
    total += r.length;
  }
  return total;
}

bool Mask::contains(PixelCoord p) const {
  if (p.x < 0 || p.y < 0 || p.x >= width_ || p.y >= height_) {
    return false;
  }
  const auto idx = static_cast<std::uint32_t>(p.y * width_ + p.x);
  auto it = std::upper_bound(runs_.begin(), runs_.end(), idx,
                             [](std::uint32_t v, const Run& r) { return v < r.start; });
  if (it == runs_.begin()) {
    return false;
  }
  --it;
  return idx < it->start + it->length;
}

std::vector<std::uint8_t> Mask::bitmap() const {
  std::vector<std::uint8_t> out(pixel_count(width_, height_), 0);
  for (const auto& r : runs_) {
    std::fill_n(out.begin() + r.start, r.length, std::uint8_t{1});
  }
  return out;
}

std::vector<PixelCoord> Mask::pixels() const {
  std::vector<PixelCoord> out;
  out.reserve(area());
  for (const auto& r : runs_) {
    for (std::uint32_t i = r.start; i < r.start + r.length; ++i) {
      out.push_back({static_cast<int>(i % std::uint32_t(width_)),
                     static_cast<int>(i / std::uint32_t(width_))});
    }
  }
  return out;
}

double equivalent_radius(std::size_t area) {
  return std::sqrt(static_cast<double>(area) / std::numbers::pi);
}

GeomSupervision mask_geometry(const Mask& m) {
  if (m.empty()) {
    throw EmptyMask();
  }
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (const auto& p : m.pixels()) {
    sx += p.x;
    sy += p.y;
    ++n;
  }
  return {sx / static_cast<double>(n), sy / static_cast<double>(n), n, equivalent_radius(n)};
}

nlohmann::json rle_to_json(const Mask& m) {
  auto runs = nlohmann::json::array();
  for (const auto& r : m.runs()) {
    runs.push_back({r.start, r.length});
  }
  return {{"w", m.width()}, {"h", m.height()}, {"runs", std::move(runs)}};
}

Mask rle_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("w") || !j.contains("h") || !j.contains("runs")) {
      throw DataError("RLE object requires w, h, runs");
    }
    const auto w = j.at("w").get<std::int64_t>();
    const auto h = j.at("h").get<std::int64_t>();
    if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20) {
      throw DataError("RLE dimensions out of range");
    }
    std::vector<Run> runs;
    for (const auto& item : j.at("runs")) {
      if (!item.is_array() || item.size() != 2) {
        throw DataError("RLE run must be a [start, length] pair");
      }
      const auto start = item[0].get<std::int64_t>();
      const auto length = item[1].get<std::int64_t>();
      if (start < 0 || length < 0 || start > UINT32_MAX || length > UINT32_MAX) {
        throw DataError("RLE run values out of range");
      }
      runs.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(length)});
    }
    return Mask::from_runs(static_cast<int>(w), static_cast<int>(h), std::move(runs));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed RLE: ") + e.what());
  }
}

std::string encode_rle(const Mask& m) { return rle_to_json(m).dump(); }

Mask decode_rle(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed RLE JSON: ") + e.what());
  }
  return rle_from_json(j);
}

std::vector<std::uint8_t> mask_to_png(const Mask& m) {
  RawImage img{m.width(), m.height(), 8, {}};
  const auto bits = m.bitmap();
  img.samples.assign(bits.begin(), bits.end());
  for (auto& s : img.samples) {
    s = s ? 255 : 0;
  }
  return encode_png(img);
}

Mask png_to_mask(std::span<const std::uint8_t> bytes) {
  const RawImage img = decode_image(bytes);
  const std::uint16_t on = img.bit_depth == 16 ? 65535 : 255;
  std::vector<std::uint8_t> bits(img.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto s = img.samples[i];
    if (s != 0 && s != on) {
      throw DataError("mask PNG contains non-binary pixel values");
    }
    bits[i] = s == on ? 1 : 0;
  }
  return Mask::from_bitmap(img.width, img.height, bits);
}

void write_mask_png(const Mask& m, const std::filesystem::path& path) {
  const auto bytes = mask_to_png(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write mask: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Mask read_mask_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open mask: " + path.string());
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return png_to_mask(bytes);
}

std::vector<Mask> connected_components(const Mask& m, bool eight_connected) {
  const int w = m.width();
  const int h = m.height();
  auto bits = m.bitmap();
  std::vector<Mask> out;
  std::vector<PixelCoord> stack;
  std::vector<PixelCoord> component;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!bits[std::size_t(y) * std::size_t(w) + std::size_t(x)]) {
        continue;
      }
      component.clear();
      stack.push_back({x, y});
      bits[std::size_t(y) * std::size_t(w) + std::size_t(x)] = 0;
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        component.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight_connected && dx != 0 && dy != 0)) {
              continue;
            }
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
              continue;
            }
            auto& bit = bits[std::size_t(ny) * std::size_t(w) + std::size_t(nx)];
            if (bit) {
              bit = 0;
              stack.push_back({nx, ny});
            }
          }
        }
      }
      out.push_back(Mask::from_pixels(w, h, component));
    }
  }
  return out;
}

Mask dilate(const Mask& m, int radius) {
  if (radius <= 0) {
    return m;
  }
  const int w = m.width();
  const int h = m.height();
  const auto src = m.bitmap();
  // Separable square dilation: rows then columns.
  std::vector<std::uint8_t> horiz(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src[std::size_t(y) * std::size_t(w) + std::size_t(x)]) {
        continue;
      }
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      std::fill(horiz.begin() + std::ptrdiff_t(y) * w + x0,
                horiz.begin() + std::ptrdiff_t(y) * w + x1 + 1, std::uint8_t{1});
    }
  }
  std::vector<std::uint8_t> out(src.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!horiz[std::size_t(y) * std::size_t(w) + std::size_t(x)]) {
        continue;
      }
      const int y0 = std::max(0, y - radius);
      const int y1 = std::min(h - 1, y + radius);
      for (int yy = y0; yy <= y1; ++yy) {
        out[std::size_t(yy) * std::size_t(w) + std::size_t(x)] = 1;
      }
    }
  }
  return Mask::from_bitmap(w, h, out);
}

Mask mask_union(const Mask& a, const Mask& b) {
  require_same_shape(a, b);
  auto bits = a.bitmap();
  const auto other = b.bitmap();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = bits[i] | other[i];
  }
  return Mask::from_bitmap(a.width(), a.height(), bits);
}

Mask mask_difference(const Mask& a, const Mask& b) {
  require_same_shape(a, b);
  auto bits = a.bitmap();
  const auto other = b.bitmap();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = bits[i] && !other[i];
  }
  return Mask::from_bitmap(a.width(), a.height(), bits);
}

std::size_t intersection_area(const Mask& a, const Mask& b) {
  require_same_shape(a, b);
  // Two-pointer sweep over the sorted run lists.
  std::size_t total = 0;
  auto ia = a.runs().begin();
  auto ib = b.runs().begin();
  while (ia != a.runs().end() && ib != b.runs().end()) {
    const std::uint64_t a_end = std::uint64_t(ia->start) + ia->length;
    const std::uint64_t b_end = std::uint64_t(ib->start) + ib->length;
    const std::uint64_t lo = std::max<std::uint64_t>(ia->start, ib->start);
    const std::uint64_t hi = std::min(a_end, b_end);
    if (hi > lo) {
      total += hi - lo;
    }
    if (a_end < b_end) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return total;
}

}  // namespace irpamg
