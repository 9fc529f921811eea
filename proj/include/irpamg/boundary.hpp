#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace irpamg {

/// Parameters of the approximate per-step energy increment at region size n.
struct IncrementModel {
  double n = 2.0;
  double delta_mu = 0.0;        // mu_T - mu_B
  double sigma_t_region = 1.0;  // internal target deviation
  double r_s = 20.0;
};

struct IncrementTerms {
  double gain = 0.0;             // 1 / (n ln n)
  double stat_resistance = 0.0;  // -delta_mu^2 / (2 n sigma_T^2)
  double geo_resistance = 0.0;   // -1 / (2 pi r_s^2)
  double total = 0.0;
};

/// Throws std::invalid_argument when n < 2, r_s <= 0 or sigma_t_region <= 0.
IncrementTerms increment_terms(const IncrementModel& m);

/// Detectability boundary (1/gamma) * sqrt(2n * max(0, 1/(n ln n) - 1/(2 pi r_s^2))).
double boundary_b(double n, double gamma, double r_s);

inline constexpr double kInfiniteRatio = std::numeric_limits<double>::infinity();

/// scr / B, or +inf when B == 0.
double satisfaction_ratio(double scr, double b);

struct PeakScan {
  /// First n such that the model increment stays negative for every m in [n, N].
  std::optional<std::size_t> n0;
  /// First argmax of the cumulative model energy E(2) = 0, E(n+1) = E(n) + dE(n).
  std::size_t argmax = 2;
  /// argmax <= n0 (vacuously false when n0 is absent).
  bool holds = false;
};

/// Scans n = 2..n_max with the model's delta_mu, sigma_t_region and r_s.
PeakScan peak_scan(const IncrementModel& model, std::size_t n_max);

struct BoundarySample {
  double scr = 0.0;
  double gamma = 0.0;
  std::size_t n = 0;
  double b_value = 0.0;
  double rho = 0.0;
  double iou = 0.0;
};

struct RhoBucket {
  double lo = 0.0;  // exclusive
  double hi = 0.0;  // inclusive; +inf for the top bucket
  std::size_t count = 0;
  double mean_iou = 0.0;
  double success_rate = 0.0;  // fraction with IoU > 0.5
};

struct BoundaryReport {
  std::vector<BoundarySample> samples;
  std::vector<RhoBucket> buckets;
};

inline const std::vector<double> kDefaultRhoEdges{0.5, 1.0, 1.5, 2.0};

/// Buckets (-inf, e0], (e0, e1], ..., (e_last, +inf]. Non-positive rho falls
/// into the first bucket, infinite rho into the last. Empty buckets are kept.
BoundaryReport bucketed_validation(std::vector<BoundarySample> samples,
                                   std::span<const double> edges = kDefaultRhoEdges);

nlohmann::json boundary_report_to_json(const BoundaryReport& report);
std::string boundary_report_to_csv(const BoundaryReport& report);
/// Standalone SVG bar chart: success rate bars and mean IoU markers per bucket.
std::string boundary_report_to_svg(const BoundaryReport& report);

}  // namespace irpamg
