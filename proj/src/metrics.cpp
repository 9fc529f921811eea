#include "irpamg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "irpamg/errors.hpp"

namespace irpamg {

namespace {

void require_same_shape(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("mask dimensions differ");
  }
}

}  // namespace

PixelConfusion confusion(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt);
  const std::size_t inter = intersection_area(pred, gt);
  return {inter, pred.area() - inter, gt.area() - inter};
}

double iou(const Mask& pred, const Mask& gt) {
  const auto c = confusion(pred, gt);
  const std::size_t denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : double(c.tp) / double(denom);
}

double miou(std::span<const std::pair<Mask, Mask>> pairs) {
  if (pairs.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& [pred, gt] : pairs) {
    sum += iou(pred, gt);
  }
  return sum / static_cast<double>(pairs.size());
}

DetectionTally& DetectionTally::operator+=(const DetectionTally& o) {
  n_tp += o.n_tp;
  n_total += o.n_total;
  n_fp_pixels += o.n_fp_pixels;
  n_bg_pixels += o.n_bg_pixels;
  return *this;
}

ImageMatch match_targets(const Mask& pred, const Mask& gt, double match_radius) {
  require_same_shape(pred, gt);
  ImageMatch m;
  m.gt_targets = connected_components(gt);
  m.pred_components = connected_components(pred);
  m.gt_to_pred.assign(m.gt_targets.size(), std::nullopt);

  std::vector<GeomSupervision> gt_geom;
  std::vector<GeomSupervision> pred_geom;
  for (const auto& t : m.gt_targets) gt_geom.push_back(mask_geometry(t));
  for (const auto& p : m.pred_components) pred_geom.push_back(mask_geometry(p));

  struct Candidate {
    double distance;
    std::size_t gt;
    std::size_t pred;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < m.gt_targets.size(); ++g) {
    for (std::size_t p = 0; p < m.pred_components.size(); ++p) {
      const double d = std::hypot(gt_geom[g].centroid_x - pred_geom[p].centroid_x,
                                  gt_geom[g].centroid_y - pred_geom[p].centroid_y);
      if (d <= match_radius || intersection_area(m.gt_targets[g], m.pred_components[p]) > 0) {
        candidates.push_back({d, g, p});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.gt, a.pred) < std::tie(b.distance, b.gt, b.pred);
  });

  std::vector<bool> pred_used(m.pred_components.size(), false);
  for (const auto& c : candidates) {
    if (m.gt_to_pred[c.gt] || pred_used[c.pred]) {
      continue;
    }
    m.gt_to_pred[c.gt] = c.pred;
    pred_used[c.pred] = true;
  }

  m.tally.n_total = m.gt_targets.size();
  for (const auto& g : m.gt_to_pred) {
    if (g) ++m.tally.n_tp;
  }
  for (std::size_t p = 0; p < m.pred_components.size(); ++p) {
    if (!pred_used[p]) m.tally.n_fp_pixels += m.pred_components[p].area();
  }
  m.tally.n_bg_pixels = static_cast<std::size_t>(gt.width()) *
                            static_cast<std::size_t>(gt.height()) -
                        gt.area();
  return m;
}

DetectionTally pd_fa(std::span<const Mask> preds, std::span<const Mask> gts,
                     double match_radius) {
  if (preds.size() != gts.size()) {
    throw std::invalid_argument("prediction and ground-truth lists differ in length");
  }
  DetectionTally total;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += match_targets(preds[i], gts[i], match_radius).tally;
  }
  return total;
}

GeometryErrors geometry_errors(const Mask& pred, const Mask& gt) {
  const auto gp = mask_geometry(pred);
  const auto gg = mask_geometry(gt);
  return {double(gp.area) / double(gg.area),
          std::hypot(gp.centroid_x - gg.centroid_x, gp.centroid_y - gg.centroid_y),
          std::abs(gp.equiv_radius - gg.equiv_radius)};
}

MetricsReport evaluate(std::span<const NamedMaskPair> images, double match_radius) {
  MetricsReport r;
  double iou_sum = 0.0;
  double area_sum = 0.0;
  double centroid_sum = 0.0;
  double radius_sum = 0.0;
  std::size_t geom_count = 0;
  for (const auto& img : images) {
    const ImageMatch m = match_targets(img.pred, img.gt, match_radius);
    r.tally += m.tally;
    for (std::size_t g = 0; g < m.gt_targets.size(); ++g) {
      SampleRecord s{img.name, g, 0.0, false, std::nullopt};
      if (const auto p = m.gt_to_pred[g]) {
        const Mask& pred = m.pred_components[*p];
        s.detected = true;
        s.iou = iou(pred, m.gt_targets[g]);
        s.geometry = geometry_errors(pred, m.gt_targets[g]);
        area_sum += s.geometry->area_ratio;
        centroid_sum += s.geometry->centroid_error;
        radius_sum += s.geometry->radius_error;
        ++geom_count;
      }
      iou_sum += s.iou;
      r.samples.push_back(std::move(s));
    }
  }
  if (!r.samples.empty()) r.miou = iou_sum / double(r.samples.size());
  if (geom_count) {
    r.mean_area_ratio = area_sum / double(geom_count);
    r.mean_centroid_error = centroid_sum / double(geom_count);
    r.mean_radius_error = radius_sum / double(geom_count);
  }
  r.pd = r.tally.pd();
  r.fa = r.tally.fa();
  return r;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  auto samples = nlohmann::json::array();
  for (const auto& s : report.samples) {
    nlohmann::json j{{"image", s.image}, {"target", s.target}, {"iou", s.iou},
                     {"detected", s.detected}};
    if (s.geometry) {
      j["area_ratio"] = s.geometry->area_ratio;
      j["centroid_error"] = s.geometry->centroid_error;
      j["radius_error"] = s.geometry->radius_error;
    } else {
      j["area_ratio"] = nullptr;
      j["centroid_error"] = nullptr;
      j["radius_error"] = nullptr;
    }
    samples.push_back(std::move(j));
  }
  return {{"v", 1},
          {"miou", report.miou},
          {"pd", report.pd},
          {"fa", report.fa},
          {"mean_area_ratio", report.mean_area_ratio},
          {"mean_centroid_error", report.mean_centroid_error},
          {"mean_radius_error", report.mean_radius_error},
          {"tally",
           {{"n_tp", report.tally.n_tp},
            {"n_total", report.tally.n_total},
            {"n_fp_pixels", report.tally.n_fp_pixels},
            {"n_bg_pixels", report.tally.n_bg_pixels}}},
          {"samples", std::move(samples)}};
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "image,target,iou,detected,area_ratio,centroid_error,radius_error\n";
  for (const auto& s : report.samples) {
    out << s.image << ',' << s.target << ',' << s.iou << ',' << (s.detected ? 1 : 0) << ',';
    if (s.geometry) {
      out << s.geometry->area_ratio << ',' << s.geometry->centroid_error << ','
          << s.geometry->radius_error;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace irpamg
