#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irpamg/boundary.hpp"
#include "irpamg/metrics.hpp"
#include "irpamg/pamg.hpp"
#include "irpamg/synth.hpp"

namespace irpamg {

enum class SeedMode { Center, RandomInterior, Boundary };

std::string_view to_string(SeedMode m);

struct TargetOutcome {
  double iou = 0.0;
  std::size_t area = 0;  // 0 when no energy peak was found
  std::optional<GeometryErrors> geometry;
};

/// Aggregate over all evaluated (target, seed) samples. Samples without an
/// energy peak count as IoU 0 and are left out of the geometric means.
struct RunSummary {
  std::string label;
  double param = 0.0;
  double miou = 0.0;
  double mean_area_ratio = 0.0;
  double mean_centroid_error = 0.0;
  double mean_radius_error = 0.0;
  std::size_t samples = 0;
  std::size_t failures = 0;
};

/// Pixel nearest to the rendered PSF center.
PixelCoord center_seed(const SceneTruth& scene, std::size_t target);

/// Ground-truth pixels with at least one 4-neighbour outside the mask.
std::vector<PixelCoord> contour_pixels(const Mask& m);

TargetOutcome evaluate_seed(const SceneTruth& scene, std::size_t target, PixelCoord seed,
                            const PamgConfig& cfg);

/// Center, random-interior and boundary seeding; the random modes draw
/// `samples_per_target` seeds per target and average them.
std::vector<RunSummary> run_seed_sweep(const std::vector<SceneTruth>& scenes,
                                       const PamgConfig& cfg, std::uint64_t rng_seed,
                                       std::size_t samples_per_target = 3);

/// Blind-mode R_s sweep from center seeds.
std::vector<RunSummary> run_rs_sweep(const std::vector<SceneTruth>& scenes,
                                     const std::vector<double>& rs_grid, const PamgConfig& cfg);

/// Guided-mode sweep: R_s = k * equivalent radius of the ground truth.
std::vector<RunSummary> run_k_sweep(const std::vector<SceneTruth>& scenes,
                                    const std::vector<double>& k_grid, const PamgConfig& cfg);

/// One summary per energy variant, center seeds.
std::vector<RunSummary> run_ablation(const std::vector<SceneTruth>& scenes,
                                     const PamgConfig& cfg);

/// Per-target SCR, gamma, n and rho against center-seed IoU, bucketed by rho.
BoundaryReport run_boundary(const std::vector<SceneTruth>& scenes, const PamgConfig& cfg,
                            std::span<const double> edges = kDefaultRhoEdges);

nlohmann::json summaries_to_json(const std::vector<RunSummary>& rows);
std::string summaries_to_csv(const std::vector<RunSummary>& rows);

/// Canned suites used by the experiment commands and the acceptance tests.
SuiteParams default_suite_params();
SuiteParams cluttered_suite_params();
SuiteParams boundary_suite_params();

}  // namespace irpamg
