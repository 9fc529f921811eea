#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irpamg/mask.hpp"
#include "irpamg/raster.hpp"

namespace irpamg {

enum class Connectivity { Four = 4, Eight = 8 };

/// Which energy terms participate in the total. Each ablation removes one factor.
enum class EnergyVariant { Full, NoSizePrior, NoSaliency, NoHomogeneity, NoGeometricPrior };

inline constexpr EnergyVariant kAllVariants[] = {
    EnergyVariant::Full, EnergyVariant::NoSizePrior, EnergyVariant::NoSaliency,
    EnergyVariant::NoHomogeneity, EnergyVariant::NoGeometricPrior};

std::string_view to_string(EnergyVariant v);
EnergyVariant parse_variant(std::string_view name);
std::string_view to_string(Connectivity c);
Connectivity parse_connectivity(std::string_view name);

/// Recorded energy value for steps without a defined energy (warm-up, no contrast).
inline constexpr double kNoEnergy = -std::numeric_limits<double>::infinity();
/// Contrasts at or below this count as zero; absorbs rounding in the ring mean
/// on flat regions (intensities live in [0,1]).
inline constexpr double kContrastFloor = 1e-12;

struct PamgConfig {
  double r_s = 20.0;
  Connectivity connectivity = Connectivity::Eight;
  double epsilon = 1e-6;
  int warmup = 5;
  /// Region size cap. Unset means ceil(pi * r_s^2), raised to warmup + 1.
  std::optional<std::size_t> growth_budget;
  EnergyVariant variant = EnergyVariant::Full;
  int ring_width = 3;
  int polarity_window = 21;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  std::size_t effective_budget(std::size_t image_area) const;
};

struct RegionStats {
  std::size_t n = 0;
  double mu_in = 0.0;
  double sigma_in = 0.0;  // population standard deviation
  double d_max = 0.0;
};

struct EnergyTerms {
  double size = 0.0;               // ln(ln n)
  double saliency_contrast = 0.0;  // mu_in - mu_out
  double data = 0.0;               // variant-dependent likelihood term
  double geo = 0.0;                // -d_max^2 / (2 r_s^2)
  double total = 0.0;
};

/// Evaluates the posterior energy of a region. Returns nullopt when
/// mu_in - mu_out <= 0. Throws std::invalid_argument when stats.n < 2.
std::optional<EnergyTerms> energy(const RegionStats& stats, double mu_out, const PamgConfig& cfg);

struct GrowthTrace {
  int width = 0;
  int height = 0;
  std::vector<PixelCoord> path;
  std::vector<double> energies;  // kNoEnergy where undefined
  std::vector<RegionStats> stats;
  std::vector<double> mu_out;    // NaN when the background ring is empty
  std::optional<std::size_t> k_star;
  bool inverted = false;
};

/// Index of the first maximal finite energy, if any.
std::optional<std::size_t> energy_argmax(const std::vector<double>& energies);

/// Greedy max-intensity growth from `seed`, recording the full trajectory.
GrowthTrace grow(const Raster& img, PixelCoord seed, const PamgConfig& cfg = {});

/// Mask of path[0..k_star]. Throws NoEnergyPeak when no finite energy exists.
Mask backtrack_mask(const GrowthTrace& trace);

struct MaskResult {
  Mask mask;
  GrowthTrace trace;
};

MaskResult generate_mask(const Raster& img, PixelCoord seed, const PamgConfig& cfg = {});

/// Guided mode: r_s = k * radius. Requires radius > 0 and k > 1.
MaskResult guided_mask(const Raster& img, PixelCoord center, double radius, double k = 5.0,
                       PamgConfig cfg = {});

nlohmann::json trace_to_json(const GrowthTrace& trace);

}  // namespace irpamg
