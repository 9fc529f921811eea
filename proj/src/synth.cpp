#include "irpamg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "irpamg/errors.hpp"

namespace irpamg {

namespace {

constexpr double kQuantum = 65536.0;

double quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return std::round(v * kQuantum) / kQuantum;
}

// exp(-x) * I0(x), stable for large x.
double scaled_bessel_i0(double x) {
  if (x < 50.0) {
    return std::exp(-x) * std::cyl_bessel_i(0.0, x);
  }
  const double inv = 1.0 / x;
  return (1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0) / std::sqrt(2.0 * std::numbers::pi * x);
}

double psf_weight(double x, double y, const TargetSpec& t) {
  return target_profile(std::hypot(x - t.cx, y - t.cy), t);
}

double segment_distance(double x, double y, const EdgeSegment& e) {
  const double vx = e.x1 - e.x0;
  const double vy = e.y1 - e.y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((x - e.x0) * vx + (y - e.y0) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x - (e.x0 + t * vx), y - (e.y0 + t * vy));
}

// Clipped box filter along one axis.
std::vector<double> box_blur_axis(const std::vector<double>& src, int w, int h, int radius,
                                  bool horizontal) {
  std::vector<double> out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = horizontal ? x + k : x;
        const int yy = horizontal ? y : y + k;
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
        sum += src[std::size_t(yy) * std::size_t(w) + std::size_t(xx)];
        ++count;
      }
      out[std::size_t(y) * std::size_t(w) + std::size_t(x)] = sum / count;
    }
  }
  return out;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

Moments moments_over(const Raster& raster, const Mask& m) {
  Moments out;
  double sum = 0.0;
  for (const auto& p : m.pixels()) {
    sum += raster.at(p);
    ++out.count;
  }
  if (out.count == 0) return out;
  out.mean = sum / double(out.count);
  double ss = 0.0;
  for (const auto& p : m.pixels()) {
    const double d = raster.at(p) - out.mean;
    ss += d * d;
  }
  out.stddev = std::sqrt(ss / double(out.count));
  return out;
}

}  // namespace

double target_profile(double r, const TargetSpec& t) {
  const double s2 = t.sigma_t * t.sigma_t;
  if (t.extent <= 0.0) {
    return std::exp(-(r * r) / (2.0 * s2));
  }
  if (r > t.extent + 10.0 * t.sigma_t) {
    return 0.0;
  }
  // Uniform disc of radius `extent` convolved with the Gaussian PSF, written as
  // a radial integral over the disc and normalized by its central value.
  constexpr int kIntervals = 64;
  const double R = t.extent;
  const double h = R / kIntervals;
  auto integrand = [&](double u) {
    const double d = r - u;
    return (u / s2) * std::exp(-(d * d) / (2.0 * s2)) * scaled_bessel_i0(r * u / s2);
  };
  double sum = integrand(0.0) + integrand(R);
  for (int i = 1; i < kIntervals; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  }
  const double value = sum * h / 3.0;
  const double peak = 1.0 - std::exp(-(R * R) / (2.0 * s2));
  return value / peak;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // SplitMix64 finalizer over the combined state.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Mask psf_support(int width, int height, const TargetSpec& target, double tau) {
  std::vector<std::uint8_t> bits(std::size_t(width) * std::size_t(height), 0);
  if (target.amplitude != 0.0) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (psf_weight(x, y, target) >= tau) {
          bits[std::size_t(y) * std::size_t(width) + std::size_t(x)] = 1;
        }
      }
    }
  }
  return Mask::from_bitmap(width, height, bits);
}

SceneTruth render(const SyntheticSpec& spec) {
  if (spec.width < 1 || spec.height < 1) {
    throw std::invalid_argument("synthetic canvas must be non-empty");
  }
  if (!(spec.tau > 0.0 && spec.tau < 1.0)) {
    throw std::invalid_argument("tau must lie in (0,1)");
  }
  const auto& bg = spec.background;
  if (bg.noise_sigma < 0.0 || bg.structure_gain < 0.0) {
    throw std::invalid_argument("background deviations must be non-negative");
  }
  for (const auto& t : spec.targets) {
    if (!(t.sigma_t > 0.0)) {
      throw std::invalid_argument("target sigma_t must be positive");
    }
    const double margin = std::max(t.extent, 0.0) + 3.0 * t.sigma_t;
    if (t.cx - margin < 0.0 || t.cy - margin < 0.0 || t.cx + margin > spec.width - 1 ||
        t.cy + margin > spec.height - 1) {
      throw DataError("target off-canvas (needs a 3 sigma margin)");
    }
  }

  const int w = spec.width;
  const int h = spec.height;
  const std::size_t n = std::size_t(w) * std::size_t(h);
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> white(n);
  for (auto& v : white) v = normal(rng);
  std::vector<double> structure(n);
  for (auto& v : structure) v = normal(rng);

  std::vector<double> field(n, bg.base);
  for (std::size_t i = 0; i < n; ++i) field[i] += bg.noise_sigma * white[i];

  if (bg.structure_gain > 0.0) {
    const int radius = std::max(1, static_cast<int>(std::lround(bg.correlation_length)));
    auto smooth = box_blur_axis(box_blur_axis(structure, w, h, radius, true), w, h, radius, false);
    double mean = 0.0;
    for (double v : smooth) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (double v : smooth) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(n));
    if (sd > 0.0) {
      for (std::size_t i = 0; i < n; ++i) field[i] += bg.structure_gain * (smooth[i] - mean) / sd;
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& e : bg.edges) {
        const double d = segment_distance(x, y, e);
        v += e.amplitude * std::exp(-(d * d) / (2.0 * e.width * e.width));
      }
      for (const auto& t : spec.targets) {
        v += t.amplitude * psf_weight(x, y, t);
      }
      field[std::size_t(y) * std::size_t(w) + std::size_t(x)] += v;
    }
  }
  for (auto& v : field) v = quantize(v);

  SceneTruth truth{spec, Raster(w, h, std::move(field), 16), {}, {}};
  for (const auto& t : spec.targets) {
    Mask gt = psf_support(w, h, t, spec.tau);
    for (const auto& other : truth.gt_masks) {
      if (intersection_area(gt, other) > 0) {
        throw DataError("overlapping ground-truth masks");
      }
    }
    truth.gt_masks.push_back(std::move(gt));
  }
  for (std::size_t i = 0; i < truth.gt_masks.size(); ++i) {
    try {
      truth.measures.emplace_back(measure_scr_gamma(truth, i));
    } catch (const DataError&) {
      truth.measures.emplace_back(std::nullopt);
    }
  }
  return truth;
}

SceneTruth mirrored(const SceneTruth& scene) {
  SceneTruth out{scene.spec, scene.raster.complement(), scene.gt_masks, {}};
  for (auto& t : out.spec.targets) t.amplitude = -t.amplitude;
  out.spec.background.base = 1.0 - out.spec.background.base;
  for (auto& e : out.spec.background.edges) e.amplitude = -e.amplitude;
  for (std::size_t i = 0; i < out.gt_masks.size(); ++i) {
    try {
      out.measures.emplace_back(measure_scr_gamma(out, i));
    } catch (const DataError&) {
      out.measures.emplace_back(std::nullopt);
    }
  }
  return out;
}

TargetMeasure measure_scr_gamma(const Raster& raster, const Mask& target, const Mask& exclude) {
  if (target.empty()) {
    throw DataError("target mask is empty");
  }
  const Mask annulus = mask_difference(mask_difference(dilate(target, 5), dilate(target, 2)),
                                       exclude);
  if (annulus.area() < 20) {
    throw DataError("background annulus too small");
  }
  const Moments t = moments_over(raster, target);
  const Moments b = moments_over(raster, annulus);
  TargetMeasure m;
  m.n = t.count;
  m.mu_t = t.mean;
  m.sigma_t = t.stddev;
  m.mu_b = b.mean;
  m.sigma_b = b.stddev;
  const double delta = t.mean - b.mean;
  if (b.stddev > 0.0) {
    m.scr = delta / b.stddev;
  } else {
    m.scr = delta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), delta);
  }
  m.gamma = t.stddev > 0.0 ? b.stddev / t.stddev : std::numeric_limits<double>::infinity();
  return m;
}

TargetMeasure measure_scr_gamma(const SceneTruth& scene, std::size_t target_index) {
  if (target_index >= scene.gt_masks.size()) {
    throw std::out_of_range("target index out of range");
  }
  Mask exclude(scene.raster.width(), scene.raster.height());
  for (const auto& m : scene.gt_masks) exclude = mask_union(exclude, m);
  return measure_scr_gamma(scene.raster, scene.gt_masks[target_index], exclude);
}

std::size_t grid_size(const SuiteParams& p) {
  return p.scr_grid.size() * p.sigma_t_grid.size() * p.clutter_grid.size();
}

std::vector<SyntheticSpec> suite_specs(const SuiteParams& params, std::size_t count,
                                       std::uint64_t rng_seed) {
  const std::size_t cells = grid_size(params);
  if (count > 0 && cells == 0) {
    throw std::invalid_argument("suite grids must be non-empty");
  }
  std::vector<SyntheticSpec> specs;
  specs.reserve(count);
  const std::size_t n_sigma = params.sigma_t_grid.size();
  const std::size_t n_clutter = params.clutter_grid.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t cell = i % cells;
    const double scr = params.scr_grid[cell / (n_sigma * n_clutter)];
    const double sigma_t = params.sigma_t_grid[(cell / n_clutter) % n_sigma];
    const double clutter = params.clutter_grid[cell % n_clutter];

    std::mt19937_64 rng(mix_seed(rng_seed, i));
    std::uniform_real_distribution<double> jitter(-params.center_jitter, params.center_jitter);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticSpec spec;
    spec.width = params.width;
    spec.height = params.height;
    spec.tau = params.tau;
    spec.background.base = params.base;
    spec.background.noise_sigma = params.noise_sigma;
    spec.background.structure_gain = clutter * params.noise_sigma;
    spec.background.correlation_length = params.correlation_length;

    TargetSpec target;
    target.cx = 0.5 * (params.width - 1) + jitter(rng);
    target.cy = 0.5 * (params.height - 1) + jitter(rng);
    target.sigma_t = sigma_t;
    target.extent = params.extent_min + unit(rng) * (params.extent_max - params.extent_min);

    // Mean PSF weight over the ground-truth support sets the amplitude for the
    // requested nominal SCR against the total background deviation.
    target.amplitude = 1.0;
    const Mask support = psf_support(params.width, params.height, target, params.tau);
    double weight_sum = 0.0;
    for (const auto& p : support.pixels()) weight_sum += psf_weight(p.x, p.y, target);
    const double mean_weight = support.empty() ? 1.0 : weight_sum / double(support.area());
    const double background_sd = params.noise_sigma * std::sqrt(1.0 + clutter * clutter);
    target.amplitude = scr * background_sd / mean_weight;
    spec.targets.push_back(target);

    if (params.bright_edges) {
      const double theta = unit(rng) * 2.0 * std::numbers::pi;
      const double gt_radius = target.extent + sigma_t * std::sqrt(2.0 * std::log(1.0 / params.tau));
      const double gap = params.edge_gap_min + unit(rng) * (params.edge_gap_max - params.edge_gap_min);
      const double dist = gt_radius + gap;
      const double mx = target.cx + dist * std::cos(theta);
      const double my = target.cy + dist * std::sin(theta);
      const double tx = -std::sin(theta);
      const double ty = std::cos(theta);
      const double half = 0.5 * params.edge_length;
      spec.background.edges.push_back({mx - half * tx, my - half * ty, mx + half * tx,
                                       my + half * ty, params.edge_contrast * target.amplitude,
                                       params.edge_width});
    }
    spec.rng_seed = rng();
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<SceneTruth> suite(const SuiteParams& params, std::size_t count,
                              std::uint64_t rng_seed) {
  std::vector<SceneTruth> scenes;
  scenes.reserve(count);
  for (const auto& spec : suite_specs(params, count, rng_seed)) {
    scenes.push_back(render(spec));
  }
  return scenes;
}

void export_scenes(const std::vector<SceneTruth>& scenes, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream truth(dir / "truth.jsonl");
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!truth || !manifest) {
    throw DataError("cannot write scene manifests in " + dir.string());
  }
  char name[64];
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    RawImage raw{s.raster.width(), s.raster.height(), 16, {}};
    raw.samples.reserve(s.raster.size());
    for (double v : s.raster.data()) {
      raw.samples.push_back(static_cast<std::uint16_t>(std::lround(v * 65535.0)));
    }
    std::snprintf(name, sizeof name, "image_%04zu.png", i);
    const std::string image_name = name;
    {
      const auto bytes = encode_png(raw);
      std::ofstream out(dir / image_name, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    }
    nlohmann::json targets = nlohmann::json::array();
    for (std::size_t t = 0; t < s.gt_masks.size(); ++t) {
      std::snprintf(name, sizeof name, "gt_%04zu_%zu", i, t);
      const std::string stem = name;
      std::ofstream(dir / (stem + ".rle.json")) << encode_rle(s.gt_masks[t]) << '\n';
      if (s.gt_masks[t].empty()) continue;
      write_mask_png(s.gt_masks[t], dir / (stem + ".png"));
      const auto g = mask_geometry(s.gt_masks[t]);
      nlohmann::json rec{{"scene", i},
                         {"image", image_name},
                         {"target", t},
                         {"n", g.area},
                         {"centroid", {g.centroid_x, g.centroid_y}},
                         {"radius", g.equiv_radius}};
      if (s.measures[t]) {
        const auto& m = *s.measures[t];
        rec["scr"] = std::isfinite(m.scr) ? nlohmann::json(m.scr) : nlohmann::json(nullptr);
        rec["gamma"] = std::isfinite(m.gamma) ? nlohmann::json(m.gamma) : nlohmann::json(nullptr);
      } else {
        rec["scr"] = nullptr;
        rec["gamma"] = nullptr;
      }
      truth << rec.dump() << '\n';
      const auto& spec_t = s.spec.targets[t];
      targets.push_back({{"point", {static_cast<int>(std::lround(spec_t.cx)),
                                    static_cast<int>(std::lround(spec_t.cy))}},
                         {"gt", stem + ".png"}});
    }
    manifest << nlohmann::json{{"image", image_name}, {"targets", targets}}.dump() << '\n';
  }
}

}  // namespace irpamg
