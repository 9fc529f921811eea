#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "irpamg/mask.hpp"
#include "irpamg/raster.hpp"

namespace irpamg {

struct TargetSpec {
  double cx = 0.0;
  double cy = 0.0;
  double sigma_t = 1.0;    // PSF spread in pixels
  double amplitude = 0.5;  // peak contribution; negative for dark targets
  /// Radius of the uniform disc blurred by the PSF. 0 renders a point source,
  /// i.e. the plain Gaussian spot A * exp(-r^2 / 2 sigma_t^2).
  double extent = 0.0;
};

/// Normalized target profile (peak 1) at distance `r` from the target center.
double target_profile(double r, const TargetSpec& target);

/// Bright ridge with a Gaussian cross-section, used to provoke background leakage.
struct EdgeSegment {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double amplitude = 0.0;
  double width = 1.0;
};

struct BackgroundSpec {
  double base = 0.25;
  double noise_sigma = 0.02;
  /// Standard deviation of the low-pass structured clutter component.
  double structure_gain = 0.0;
  double correlation_length = 3.0;
  std::vector<EdgeSegment> edges;
};

struct SyntheticSpec {
  int width = 64;
  int height = 64;
  std::vector<TargetSpec> targets;
  BackgroundSpec background;
  std::uint64_t rng_seed = 3407;
  /// A pixel belongs to a target's ground truth when its own PSF weight is >= tau.
  double tau = 0.2;
};

struct TargetMeasure {
  double scr = 0.0;
  double gamma = 0.0;  // +inf when the target patch is constant
  std::size_t n = 0;
  double mu_t = 0.0;
  double sigma_t = 0.0;
  double mu_b = 0.0;
  double sigma_b = 0.0;
};

struct SceneTruth {
  SyntheticSpec spec;
  Raster raster;
  std::vector<Mask> gt_masks;
  /// nullopt when the target has no ground truth or its annulus is too small.
  std::vector<std::optional<TargetMeasure>> measures;
};

/// Renders clamp01(background + sum of Gaussian targets), quantized to 1/65536
/// so that 1 - I is exact. Throws DataError for off-canvas or overlapping targets.
SceneTruth render(const SyntheticSpec& spec);

/// Raster complement with identical ground truth (dark/bright twin).
SceneTruth mirrored(const SceneTruth& scene);

/// Pixels whose normalized profile weight is at least tau.
Mask psf_support(int width, int height, const TargetSpec& target, double tau);

/// Target statistics over `target`, background statistics over the annulus
/// dilate(target, 5) minus dilate(target, 2) minus `exclude`. Throws DataError
/// when the annulus holds fewer than 20 pixels.
TargetMeasure measure_scr_gamma(const Raster& raster, const Mask& target, const Mask& exclude);
TargetMeasure measure_scr_gamma(const SceneTruth& scene, std::size_t target_index);

struct SuiteParams {
  int width = 64;
  int height = 64;
  std::vector<double> scr_grid{5.0, 8.0, 12.0};
  std::vector<double> sigma_t_grid{0.9, 1.3, 1.8};
  /// Structured clutter level relative to noise_sigma.
  std::vector<double> clutter_grid{0.0, 1.0};
  /// Object disc radius per scene, drawn uniformly from [extent_min, extent_max].
  double extent_min = 0.0;
  double extent_max = 0.0;
  double base = 0.2;
  double noise_sigma = 0.02;
  double correlation_length = 3.0;
  double tau = 0.2;
  double center_jitter = 0.5;
  bool bright_edges = false;
  double edge_contrast = 0.8;  // relative to the target amplitude
  double edge_gap_min = 3.0;   // edge distance beyond the GT radius, pixels
  double edge_gap_max = 6.0;
  double edge_length = 40.0;
  double edge_width = 0.8;
};

std::size_t grid_size(const SuiteParams& params);

/// Scene i uses grid cell i mod grid_size (SCR-major cartesian order) and an
/// rng stream derived from (rng_seed, i).
std::vector<SyntheticSpec> suite_specs(const SuiteParams& params, std::size_t count,
                                       std::uint64_t rng_seed);
std::vector<SceneTruth> suite(const SuiteParams& params, std::size_t count,
                              std::uint64_t rng_seed);

/// Writes image_XXXX.png (16-bit), gt_XXXX_T.rle.json, gt_XXXX_T.png, truth.jsonl
/// and a point-annotation manifest.jsonl into `dir`.
void export_scenes(const std::vector<SceneTruth>& scenes, const std::filesystem::path& dir);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace irpamg
