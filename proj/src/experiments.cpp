#include "irpamg/experiments.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "irpamg/errors.hpp"

namespace irpamg {

std::string_view to_string(SeedMode m) {
  switch (m) {
    case SeedMode::Center: return "center";
    case SeedMode::RandomInterior: return "random_interior";
    case SeedMode::Boundary: return "boundary";
  }
  return "center";
}

PixelCoord center_seed(const SceneTruth& scene, std::size_t target) {
  const auto& t = scene.spec.targets.at(target);
  return {static_cast<int>(std::lround(t.cx)), static_cast<int>(std::lround(t.cy))};
}

std::vector<PixelCoord> contour_pixels(const Mask& m) {
  std::vector<PixelCoord> out;
  for (const auto& p : m.pixels()) {
    const PixelCoord around[4] = {{p.x, p.y - 1}, {p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y + 1}};
    for (const auto& q : around) {
      if (!m.contains(q)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

TargetOutcome evaluate_seed(const SceneTruth& scene, std::size_t target, PixelCoord seed,
                            const PamgConfig& cfg) {
  const Mask& gt = scene.gt_masks.at(target);
  TargetOutcome out;
  try {
    const auto result = generate_mask(scene.raster, seed, cfg);
    out.iou = iou(result.mask, gt);
    out.area = result.mask.area();
    if (!gt.empty()) out.geometry = geometry_errors(result.mask, gt);
  } catch (const NoEnergyPeak&) {
    out.iou = 0.0;
  }
  return out;
}

namespace {

class SummaryBuilder {
 public:
  explicit SummaryBuilder(std::string label, double param = 0.0) {
    s_.label = std::move(label);
    s_.param = param;
  }

  void add(const TargetOutcome& o) {
    ++s_.samples;
    iou_sum_ += o.iou;
    if (o.geometry) {
      area_sum_ += o.geometry->area_ratio;
      centroid_sum_ += o.geometry->centroid_error;
      radius_sum_ += o.geometry->radius_error;
      ++geom_;
    } else {
      ++s_.failures;
    }
  }

  RunSummary finish() const {
    RunSummary s = s_;
    if (s.samples) s.miou = iou_sum_ / double(s.samples);
    if (geom_) {
      s.mean_area_ratio = area_sum_ / double(geom_);
      s.mean_centroid_error = centroid_sum_ / double(geom_);
      s.mean_radius_error = radius_sum_ / double(geom_);
    }
    return s;
  }

 private:
  RunSummary s_;
  double iou_sum_ = 0.0;
  double area_sum_ = 0.0;
  double centroid_sum_ = 0.0;
  double radius_sum_ = 0.0;
  std::size_t geom_ = 0;
};

// Averages several seeds of one target into a single sample.
TargetOutcome average(const std::vector<TargetOutcome>& outcomes) {
  TargetOutcome avg;
  GeometryErrors g;
  std::size_t geom = 0;
  for (const auto& o : outcomes) {
    avg.iou += o.iou;
    avg.area += o.area;
    if (o.geometry) {
      g.area_ratio += o.geometry->area_ratio;
      g.centroid_error += o.geometry->centroid_error;
      g.radius_error += o.geometry->radius_error;
      ++geom;
    }
  }
  if (!outcomes.empty()) {
    avg.iou /= double(outcomes.size());
    avg.area /= outcomes.size();
  }
  if (geom) {
    g.area_ratio /= double(geom);
    g.centroid_error /= double(geom);
    g.radius_error /= double(geom);
    avg.geometry = g;
  }
  return avg;
}

}  // namespace

std::vector<RunSummary> run_seed_sweep(const std::vector<SceneTruth>& scenes,
                                       const PamgConfig& cfg, std::uint64_t rng_seed,
                                       std::size_t samples_per_target) {
  SummaryBuilder center(std::string(to_string(SeedMode::Center)));
  SummaryBuilder interior(std::string(to_string(SeedMode::RandomInterior)));
  SummaryBuilder boundary(std::string(to_string(SeedMode::Boundary)));
  std::mt19937_64 rng(rng_seed);
  for (const auto& scene : scenes) {
    for (std::size_t t = 0; t < scene.gt_masks.size(); ++t) {
      const Mask& gt = scene.gt_masks[t];
      if (gt.empty()) continue;
      center.add(evaluate_seed(scene, t, center_seed(scene, t), cfg));

      const auto inside = gt.pixels();
      const auto contour = contour_pixels(gt);
      std::uniform_int_distribution<std::size_t> pick_inside(0, inside.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_contour(0, contour.size() - 1);
      std::vector<TargetOutcome> a;
      std::vector<TargetOutcome> b;
      for (std::size_t k = 0; k < samples_per_target; ++k) {
        a.push_back(evaluate_seed(scene, t, inside[pick_inside(rng)], cfg));
        b.push_back(evaluate_seed(scene, t, contour[pick_contour(rng)], cfg));
      }
      interior.add(average(a));
      boundary.add(average(b));
    }
  }
  return {center.finish(), interior.finish(), boundary.finish()};
}

std::vector<RunSummary> run_rs_sweep(const std::vector<SceneTruth>& scenes,
                                     const std::vector<double>& rs_grid, const PamgConfig& cfg) {
  std::vector<RunSummary> rows;
  for (double rs : rs_grid) {
    PamgConfig c = cfg;
    c.r_s = rs;
    c.growth_budget.reset();
    std::ostringstream label;
    label << "r_s=" << rs;
    SummaryBuilder builder(label.str(), rs);
    for (const auto& scene : scenes) {
      for (std::size_t t = 0; t < scene.gt_masks.size(); ++t) {
        if (scene.gt_masks[t].empty()) continue;
        builder.add(evaluate_seed(scene, t, center_seed(scene, t), c));
      }
    }
    rows.push_back(builder.finish());
  }
  return rows;
}

std::vector<RunSummary> run_k_sweep(const std::vector<SceneTruth>& scenes,
                                    const std::vector<double>& k_grid, const PamgConfig& cfg) {
  std::vector<RunSummary> rows;
  for (double k : k_grid) {
    std::ostringstream label;
    label << "k=" << k;
    SummaryBuilder builder(label.str(), k);
    for (const auto& scene : scenes) {
      for (std::size_t t = 0; t < scene.gt_masks.size(); ++t) {
        const Mask& gt = scene.gt_masks[t];
        if (gt.empty()) continue;
        PamgConfig c = cfg;
        c.r_s = k * mask_geometry(gt).equiv_radius;
        c.growth_budget.reset();
        builder.add(evaluate_seed(scene, t, center_seed(scene, t), c));
      }
    }
    rows.push_back(builder.finish());
  }
  return rows;
}

std::vector<RunSummary> run_ablation(const std::vector<SceneTruth>& scenes,
                                     const PamgConfig& cfg) {
  std::vector<RunSummary> rows;
  for (auto variant : kAllVariants) {
    PamgConfig c = cfg;
    c.variant = variant;
    SummaryBuilder builder(std::string(to_string(variant)));
    for (const auto& scene : scenes) {
      for (std::size_t t = 0; t < scene.gt_masks.size(); ++t) {
        if (scene.gt_masks[t].empty()) continue;
        builder.add(evaluate_seed(scene, t, center_seed(scene, t), c));
      }
    }
    rows.push_back(builder.finish());
  }
  return rows;
}

BoundaryReport run_boundary(const std::vector<SceneTruth>& scenes, const PamgConfig& cfg,
                            std::span<const double> edges) {
  std::vector<BoundarySample> samples;
  for (const auto& scene : scenes) {
    for (std::size_t t = 0; t < scene.gt_masks.size(); ++t) {
      const auto& measure = scene.measures[t];
      if (!measure || measure->n < 2 || !std::isfinite(measure->scr)) continue;
      BoundarySample s;
      s.scr = std::abs(measure->scr);
      s.gamma = measure->gamma;
      s.n = measure->n;
      // A constant target patch (gamma = inf) drives the boundary to zero.
      s.b_value = std::isinf(s.gamma) ? 0.0 : boundary_b(double(s.n), s.gamma, cfg.r_s);
      s.rho = satisfaction_ratio(s.scr, s.b_value);
      s.iou = evaluate_seed(scene, t, center_seed(scene, t), cfg).iou;
      samples.push_back(s);
    }
  }
  return bucketed_validation(std::move(samples), edges);
}

nlohmann::json summaries_to_json(const std::vector<RunSummary>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"label", r.label},
                   {"param", r.param},
                   {"miou", r.miou},
                   {"mean_area_ratio", r.mean_area_ratio},
                   {"mean_centroid_error", r.mean_centroid_error},
                   {"mean_radius_error", r.mean_radius_error},
                   {"samples", r.samples},
                   {"failures", r.failures}});
  }
  return {{"v", 1}, {"rows", std::move(out)}};
}

std::string summaries_to_csv(const std::vector<RunSummary>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "label,param,miou,mean_area_ratio,mean_centroid_error,mean_radius_error,samples,"
         "failures\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.param << ',' << r.miou << ',' << r.mean_area_ratio << ','
        << r.mean_centroid_error << ',' << r.mean_radius_error << ',' << r.samples << ','
        << r.failures << '\n';
  }
  return out.str();
}

// Flat-topped objects of radius 3..5 blurred by a narrow PSF; ground truth is
// the half-maximum contour, which coincides with the object edge.
SuiteParams default_suite_params() {
  SuiteParams p;
  p.sigma_t_grid = {0.4, 0.6};
  p.extent_min = 3.0;
  p.extent_max = 5.0;
  p.tau = 0.5;
  return p;
}

SuiteParams cluttered_suite_params() {
  SuiteParams p = default_suite_params();
  p.clutter_grid = {1.0, 2.0};
  p.bright_edges = true;
  return p;
}

SuiteParams boundary_suite_params() {
  SuiteParams p = default_suite_params();
  p.scr_grid = {0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0};
  p.sigma_t_grid = {0.4, 0.8, 1.2};
  p.clutter_grid = {0.0, 1.0};
  p.base = 0.15;
  p.noise_sigma = 0.015;
  return p;
}

}  // namespace irpamg
