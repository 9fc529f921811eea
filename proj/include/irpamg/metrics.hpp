#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irpamg/mask.hpp"

namespace irpamg {

struct PixelConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

PixelConfusion confusion(const Mask& pred, const Mask& gt);

/// TP / (TP + FP + FN); two empty masks score 1.0.
double iou(const Mask& pred, const Mask& gt);

/// Mean of per-pair IoU. An empty list yields 0.
double miou(std::span<const std::pair<Mask, Mask>> pairs);

struct DetectionTally {
  std::size_t n_tp = 0;
  std::size_t n_total = 0;
  std::size_t n_fp_pixels = 0;
  std::size_t n_bg_pixels = 0;

  double pd() const { return n_total ? double(n_tp) / double(n_total) : 0.0; }
  double fa() const { return n_bg_pixels ? double(n_fp_pixels) / double(n_bg_pixels) : 0.0; }
  DetectionTally& operator+=(const DetectionTally& o);
};

/// Target-level matching of one image. Targets are 8-connected components.
struct ImageMatch {
  std::vector<Mask> gt_targets;
  std::vector<Mask> pred_components;
  std::vector<std::optional<std::size_t>> gt_to_pred;
  DetectionTally tally;
};

/// A GT target is detected when a predicted component's centroid lies within
/// `match_radius` of the GT centroid or the two overlap. Candidate pairs are
/// assigned greedily by increasing centroid distance; each side matches once.
ImageMatch match_targets(const Mask& pred, const Mask& gt, double match_radius = 3.0);

DetectionTally pd_fa(std::span<const Mask> preds, std::span<const Mask> gts,
                     double match_radius = 3.0);

struct GeometryErrors {
  double area_ratio = 0.0;
  double centroid_error = 0.0;
  double radius_error = 0.0;
};

/// Throws EmptyMask when either mask is empty.
GeometryErrors geometry_errors(const Mask& pred, const Mask& gt);

struct SampleRecord {
  std::string image;
  std::size_t target = 0;
  double iou = 0.0;
  bool detected = false;
  std::optional<GeometryErrors> geometry;
};

struct MetricsReport {
  double miou = 0.0;
  double pd = 0.0;
  double fa = 0.0;
  double mean_area_ratio = 0.0;
  double mean_centroid_error = 0.0;
  double mean_radius_error = 0.0;
  DetectionTally tally;
  std::vector<SampleRecord> samples;
};

struct NamedMaskPair {
  std::string name;
  Mask pred;
  Mask gt;
};

/// Per-GT-instance evaluation; unmatched GT targets contribute IoU 0 and no
/// geometry record. Samples keep input order.
MetricsReport evaluate(std::span<const NamedMaskPair> images, double match_radius = 3.0);

nlohmann::json report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace irpamg
