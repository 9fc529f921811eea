#include "irpamg/pamg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>

#include "irpamg/errors.hpp"

namespace irpamg {

std::string_view to_string(EnergyVariant v) {
  switch (v) {
    case EnergyVariant::Full: return "full";
    case EnergyVariant::NoSizePrior: return "no_size_prior";
    case EnergyVariant::NoSaliency: return "no_saliency";
    case EnergyVariant::NoHomogeneity: return "no_homogeneity";
    case EnergyVariant::NoGeometricPrior: return "no_geometric_prior";
  }
  return "full";
}

EnergyVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (to_string(v) == name) {
      return v;
    }
  }
  throw std::invalid_argument("unknown energy variant: " + std::string(name));
}

std::string_view to_string(Connectivity c) { return c == Connectivity::Four ? "4" : "8"; }

Connectivity parse_connectivity(std::string_view name) {
  if (name == "4") return Connectivity::Four;
  if (name == "8") return Connectivity::Eight;
  throw std::invalid_argument("connectivity must be 4 or 8");
}

void PamgConfig::validate() const {
  if (!(r_s > 0.0) || !std::isfinite(r_s)) {
    throw std::invalid_argument("r_s must be positive");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (warmup < 1) {
    throw std::invalid_argument("warmup must be >= 1");
  }
  if (growth_budget && *growth_budget < static_cast<std::size_t>(warmup) + 1) {
    throw std::invalid_argument("growth_budget must be >= warmup + 1");
  }
  if (ring_width < 1) {
    throw std::invalid_argument("ring_width must be >= 1");
  }
  if (polarity_window < 3 || polarity_window % 2 == 0) {
    throw std::invalid_argument("polarity_window must be odd and >= 3");
  }
}

std::size_t PamgConfig::effective_budget(std::size_t image_area) const {
  std::size_t budget = 0;
  if (growth_budget) {
    budget = *growth_budget;
  } else {
    const double disc = std::ceil(std::numbers::pi * r_s * r_s);
    const double cap = static_cast<double>(image_area);
    budget = disc >= cap ? image_area : static_cast<std::size_t>(disc);
    budget = std::max(budget, static_cast<std::size_t>(warmup) + 1);
  }
  return std::min(budget, image_area);
}

std::optional<EnergyTerms> energy(const RegionStats& stats, double mu_out, const PamgConfig& cfg) {
  if (stats.n < 2) {
    throw std::invalid_argument("energy requires a region of at least 2 pixels");
  }
  const double contrast = stats.mu_in - mu_out;
  if (!(contrast > kContrastFloor)) {
    return std::nullopt;
  }
  EnergyTerms t;
  t.size = std::log(std::log(static_cast<double>(stats.n)));
  t.saliency_contrast = contrast;
  t.geo = -(stats.d_max * stats.d_max) / (2.0 * cfg.r_s * cfg.r_s);
  const double spread = stats.sigma_in + cfg.epsilon;
  switch (cfg.variant) {
    case EnergyVariant::Full:
      t.data = std::log(contrast / spread);
      t.total = t.size + t.data + t.geo;
      break;
    case EnergyVariant::NoSizePrior:
      t.data = std::log(contrast / spread);
      t.total = t.data + t.geo;
      break;
    case EnergyVariant::NoSaliency:
      t.data = -std::log(spread);
      t.total = t.size + t.data + t.geo;
      break;
    case EnergyVariant::NoHomogeneity:
      t.data = std::log(contrast);
      t.total = t.size + t.data + t.geo;
      break;
    case EnergyVariant::NoGeometricPrior:
      t.data = std::log(contrast / spread);
      t.total = t.size + t.data;
      break;
  }
  return t;
}

std::optional<std::size_t> energy_argmax(const std::vector<double>& energies) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double e = energies[i];
    if (!std::isfinite(e)) {
      continue;
    }
    if (!best || e > energies[*best]) {
      best = i;
    }
  }
  return best;
}

namespace {

struct Offset {
  int dx;
  int dy;
};

constexpr std::array<Offset, 8> kEightNeighbours{{
    {-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
constexpr std::array<Offset, 4> kFourNeighbours{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};

struct FrontierEntry {
  double intensity;
  std::uint64_t order;
  std::uint32_t index;
};

// Max intensity first; equal intensities pop in insertion order.
struct FrontierLess {
  bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
    if (a.intensity != b.intensity) {
      return a.intensity < b.intensity;
    }
    return a.order > b.order;
  }
};

/// Region state with running statistics and the dilated background ring.
class GrowthState {
 public:
  GrowthState(const Raster& img, PixelCoord seed, int ring_width)
      : img_(img),
        width_(img.width()),
        height_(img.height()),
        seed_(seed),
        ring_width_(ring_width),
        in_region_(img.size(), 0),
        cover_(img.size(), 0) {}

  void add(PixelCoord p) {
    const std::size_t idx = img_.index(p);
    const double v = img_.data()[idx];
    in_region_[idx] = 1;

    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);

    const std::int64_t dx = p.x - seed_.x;
    const std::int64_t dy = p.y - seed_.y;
    d2_max_ = std::max(d2_max_, dx * dx + dy * dy);

    if (cover_[idx] > 0) {
      ring_sum_ -= v;
      --ring_count_;
    }
    const int x0 = std::max(0, p.x - ring_width_);
    const int x1 = std::min(width_ - 1, p.x + ring_width_);
    const int y0 = std::max(0, p.y - ring_width_);
    const int y1 = std::min(height_ - 1, p.y + ring_width_);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t q = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                              static_cast<std::size_t>(x);
        if (cover_[q] == 0 && !in_region_[q]) {
          ring_sum_ += img_.data()[q];
          ++ring_count_;
        }
        ++cover_[q];
      }
    }
  }

  RegionStats stats() const {
    const double var = n_ > 0 ? std::max(0.0, m2_ / static_cast<double>(n_)) : 0.0;
    return {n_, mean_, std::sqrt(var), std::sqrt(static_cast<double>(d2_max_))};
  }

  double mu_out() const {
    return ring_count_ > 0 ? ring_sum_ / static_cast<double>(ring_count_)
                           : std::numeric_limits<double>::quiet_NaN();
  }

  std::size_t size() const { return n_; }

 private:
  const Raster& img_;
  int width_;
  int height_;
  PixelCoord seed_;
  int ring_width_;
  std::vector<std::uint8_t> in_region_;
  std::vector<std::uint32_t> cover_;  // region pixels within the ring window
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::int64_t d2_max_ = 0;
  double ring_sum_ = 0.0;
  std::size_t ring_count_ = 0;
};

}  // namespace

GrowthTrace grow(const Raster& img, PixelCoord seed, const PamgConfig& cfg) {
  cfg.validate();
  if (!img.contains(seed)) {
    throw std::out_of_range("seed outside raster");
  }
  const PolarityResult unified = unify_polarity(img, seed, cfg.polarity_window);
  const Raster& I = unified.raster;
  const auto data = I.data();
  const std::size_t budget = cfg.effective_budget(I.size());
  const std::span<const Offset> neighbours =
      cfg.connectivity == Connectivity::Eight ? std::span<const Offset>(kEightNeighbours)
                                              : std::span<const Offset>(kFourNeighbours);

  GrowthTrace trace;
  trace.width = I.width();
  trace.height = I.height();
  trace.inverted = unified.inverted;
  trace.path.reserve(budget);
  trace.energies.reserve(budget);
  trace.stats.reserve(budget);
  trace.mu_out.reserve(budget);

  GrowthState state(I, seed, cfg.ring_width);
  std::vector<std::uint8_t> visited(I.size(), 0);
  std::priority_queue<FrontierEntry, std::vector<FrontierEntry>, FrontierLess> frontier;
  std::uint64_t order = 0;

  auto absorb = [&](PixelCoord p) {
    state.add(p);
    const RegionStats s = state.stats();
    const double mu_out = state.mu_out();
    double e = kNoEnergy;
    if (s.n > static_cast<std::size_t>(cfg.warmup)) {
      if (const auto terms = energy(s, mu_out, cfg)) {
        e = terms->total;
      }
    }
    trace.path.push_back(p);
    trace.stats.push_back(s);
    trace.mu_out.push_back(mu_out);
    trace.energies.push_back(e);

    for (const auto& off : neighbours) {
      const PixelCoord q{p.x + off.dx, p.y + off.dy};
      if (!I.contains(q)) {
        continue;
      }
      const std::size_t qi = I.index(q);
      if (visited[qi]) {
        continue;
      }
      visited[qi] = 1;
      frontier.push({data[qi], order++, static_cast<std::uint32_t>(qi)});
    }
  };

  visited[I.index(seed)] = 1;
  absorb(seed);
  while (!frontier.empty() && state.size() < budget) {
    const FrontierEntry top = frontier.top();
    frontier.pop();
    absorb({static_cast<int>(top.index % std::uint32_t(I.width())),
            static_cast<int>(top.index / std::uint32_t(I.width()))});
  }

  trace.k_star = energy_argmax(trace.energies);
  return trace;
}

Mask backtrack_mask(const GrowthTrace& trace) {
  const auto k = energy_argmax(trace.energies);
  if (!k) {
    throw NoEnergyPeak();
  }
  return Mask::from_pixels(trace.width, trace.height,
                           std::span<const PixelCoord>(trace.path.data(), *k + 1));
}

MaskResult generate_mask(const Raster& img, PixelCoord seed, const PamgConfig& cfg) {
  GrowthTrace trace = grow(img, seed, cfg);
  Mask mask = backtrack_mask(trace);
  return {std::move(mask), std::move(trace)};
}

MaskResult guided_mask(const Raster& img, PixelCoord center, double radius, double k,
                       PamgConfig cfg) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("guided radius must be positive");
  }
  if (!(k > 1.0)) {
    throw std::invalid_argument("guided scale factor must exceed 1");
  }
  cfg.r_s = k * radius;
  cfg.growth_budget.reset();
  return generate_mask(img, center, cfg);
}

nlohmann::json trace_to_json(const GrowthTrace& trace) {
  auto path = nlohmann::json::array();
  auto energies = nlohmann::json::array();
  for (std::size_t i = 0; i < trace.path.size(); ++i) {
    path.push_back({trace.path[i].x, trace.path[i].y});
    if (std::isfinite(trace.energies[i])) {
      energies.push_back(trace.energies[i]);
    } else {
      energies.push_back(nullptr);
    }
  }
  nlohmann::json j{{"v", 1},
                   {"width", trace.width},
                   {"height", trace.height},
                   {"inverted", trace.inverted},
                   {"path", std::move(path)},
                   {"energies", std::move(energies)}};
  j["k_star"] = trace.k_star ? nlohmann::json(*trace.k_star) : nlohmann::json(nullptr);
  return j;
}

}  // namespace irpamg
