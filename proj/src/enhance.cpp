#include "irpamg/enhance.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "irpamg/errors.hpp"

namespace irpamg {

View parse_view(std::string_view name) {
  if (name == "raw") return View::Raw;
  if (name == "clahe") return View::Clahe;
  if (name == "pseudocolor") return View::Pseudocolor;
  throw std::invalid_argument("unknown view: " + std::string(name));
}

std::string_view to_string(View v) {
  switch (v) {
    case View::Raw: return "raw";
    case View::Clahe: return "clahe";
    case View::Pseudocolor: return "pseudocolor";
  }
  return "raw";
}

CropRect parse_crop(std::string_view text) {
  int vals[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t end = i < 3 ? text.find(',', pos) : text.size();
    if (end == std::string_view::npos) throw std::invalid_argument("crop needs x,y,w,h");
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, vals[i]);
    if (ec != std::errc{} || ptr != last || first == last) {
      throw std::invalid_argument("malformed crop: " + std::string(text));
    }
    pos = end + 1;
  }
  if (vals[2] < 1 || vals[3] < 1) throw std::invalid_argument("crop width and height must be >= 1");
  return {vals[0], vals[1], vals[2], vals[3]};
}

std::optional<CropRect> clip_crop(const CropRect& r, int width, int height) {
  const long x0 = std::max<long>(r.x, 0);
  const long y0 = std::max<long>(r.y, 0);
  const long x1 = std::min<long>(long(r.x) + r.w, width);
  const long y1 = std::min<long>(long(r.y) + r.h, height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return CropRect{int(x0), int(y0), int(x1 - x0), int(y1 - y0)};
}

RawImage crop(const RawImage& image, const CropRect& rect) {
  const auto r = clip_crop(rect, image.width, image.height);
  if (!r) throw DataError("crop lies outside the image");
  RawImage out{r->w, r->h, image.bit_depth, {}};
  out.samples.reserve(std::size_t(r->w) * std::size_t(r->h));
  for (int y = r->y; y < r->y + r->h; ++y) {
    const auto row = image.samples.begin() + std::ptrdiff_t(y) * image.width;
    out.samples.insert(out.samples.end(), row + r->x, row + r->x + r->w);
  }
  return out;
}

namespace {

cv::Mat to_mat(const RawImage& image) {
  if (image.bit_depth == 16) {
    cv::Mat m(image.height, image.width, CV_16U);
    std::copy(image.samples.begin(), image.samples.end(), m.ptr<std::uint16_t>(0));
    return m;
  }
  cv::Mat m(image.height, image.width, CV_8U);
  std::transform(image.samples.begin(), image.samples.end(), m.ptr<std::uint8_t>(0),
                 [](std::uint16_t v) { return std::uint8_t(std::min<std::uint16_t>(v, 255)); });
  return m;
}

RawImage from_mat(const cv::Mat& m, int bit_depth) {
  RawImage out{m.cols, m.rows, bit_depth, std::vector<std::uint16_t>(m.total())};
  if (bit_depth == 16) {
    std::copy(m.ptr<std::uint16_t>(0), m.ptr<std::uint16_t>(0) + m.total(), out.samples.begin());
  } else {
    std::copy(m.ptr<std::uint8_t>(0), m.ptr<std::uint8_t>(0) + m.total(), out.samples.begin());
  }
  return out;
}

cv::Mat stretch8(const RawImage& image) {
  const auto [lo, hi] = std::minmax_element(image.samples.begin(), image.samples.end());
  cv::Mat m(image.height, image.width, CV_8U);
  auto* dst = m.ptr<std::uint8_t>(0);
  const double span = double(*hi) - double(*lo);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    dst[i] = span > 0 ? std::uint8_t(std::lround(255.0 * (image.samples[i] - *lo) / span)) : 0;
  }
  return m;
}

}  // namespace

RawImage clahe(const RawImage& image) {
  auto op = cv::createCLAHE(2.0, cv::Size(8, 8));
  cv::Mat out;
  op->apply(to_mat(image), out);
  return from_mat(out, image.bit_depth == 16 ? 16 : 8);
}

std::vector<std::uint8_t> pseudocolor_rgb(const RawImage& image) {
  cv::Mat bgr;
  cv::applyColorMap(stretch8(image), bgr, cv::COLORMAP_INFERNO);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return {rgb.ptr<std::uint8_t>(0), rgb.ptr<std::uint8_t>(0) + rgb.total() * 3};
}

std::vector<std::uint8_t> render_view_png(const RawImage& image, View view,
                                          const std::optional<CropRect>& rect) {
  const RawImage src = rect ? crop(image, *rect) : image;
  switch (view) {
    case View::Raw: return encode_png(src);
    case View::Clahe: return encode_png(clahe(src));
    case View::Pseudocolor: {
      cv::Mat bgr;
      cv::applyColorMap(stretch8(src), bgr, cv::COLORMAP_INFERNO);
      std::vector<std::uint8_t> out;
      if (!cv::imencode(".png", bgr, out)) throw DataError("PNG encoding failed");
      return out;
    }
  }
  return {};
}

}  // namespace irpamg
