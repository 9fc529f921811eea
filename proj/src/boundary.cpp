#include "irpamg/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace irpamg {

IncrementTerms increment_terms(const IncrementModel& m) {
  if (!(m.n >= 2.0)) throw std::invalid_argument("increment model requires n >= 2");
  if (!(m.r_s > 0.0)) throw std::invalid_argument("increment model requires r_s > 0");
  if (!(m.sigma_t_region > 0.0)) {
    throw std::invalid_argument("increment model requires sigma_T > 0");
  }
  IncrementTerms t;
  t.gain = 1.0 / (m.n * std::log(m.n));
  t.stat_resistance =
      -(m.delta_mu * m.delta_mu) / (2.0 * m.n * m.sigma_t_region * m.sigma_t_region);
  t.geo_resistance = -1.0 / (2.0 * std::numbers::pi * m.r_s * m.r_s);
  t.total = t.gain + t.stat_resistance + t.geo_resistance;
  return t;
}

double boundary_b(double n, double gamma, double r_s) {
  if (!(n >= 2.0)) throw std::invalid_argument("boundary requires n >= 2");
  if (!(gamma > 0.0)) throw std::invalid_argument("boundary requires gamma > 0");
  if (!(r_s > 0.0)) throw std::invalid_argument("boundary requires r_s > 0");
  const double slack =
      std::max(0.0, 1.0 / (n * std::log(n)) - 1.0 / (2.0 * std::numbers::pi * r_s * r_s));
  return std::sqrt(2.0 * n * slack) / gamma;
}

double satisfaction_ratio(double scr, double b) {
  if (b == 0.0) return kInfiniteRatio;
  return scr / b;
}

PeakScan peak_scan(const IncrementModel& model, std::size_t n_max) {
  if (n_max < 3) throw std::invalid_argument("peak scan needs n_max >= 3");
  // increments[i] is dE at n = i + 2; energies[i] is E at n = i + 2.
  std::vector<double> increments;
  increments.reserve(n_max - 1);
  for (std::size_t n = 2; n <= n_max; ++n) {
    IncrementModel m = model;
    m.n = static_cast<double>(n);
    increments.push_back(increment_terms(m).total);
  }

  PeakScan scan;
  std::size_t first_negative_tail = increments.size();
  while (first_negative_tail > 0 && increments[first_negative_tail - 1] < 0.0) {
    --first_negative_tail;
  }
  if (first_negative_tail < increments.size()) {
    scan.n0 = first_negative_tail + 2;
  }

  double energy = 0.0;
  double best = 0.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    energy += increments[i];
    if (energy > best) {
      best = energy;
      best_index = i + 1;
    }
  }
  scan.argmax = best_index + 2;
  scan.holds = scan.n0.has_value() && scan.argmax <= *scan.n0;
  return scan;
}

BoundaryReport bucketed_validation(std::vector<BoundarySample> samples,
                                   std::span<const double> edges) {
  if (!std::is_sorted(edges.begin(), edges.end())) {
    throw std::invalid_argument("bucket edges must be sorted");
  }
  BoundaryReport report;
  report.buckets.resize(edges.size() + 1);
  for (std::size_t i = 0; i < report.buckets.size(); ++i) {
    report.buckets[i].lo = i == 0 ? 0.0 : edges[i - 1];
    report.buckets[i].hi = i < edges.size() ? edges[i] : kInfiniteRatio;
  }
  std::vector<double> iou_sum(report.buckets.size(), 0.0);
  std::vector<std::size_t> successes(report.buckets.size(), 0);
  for (const auto& s : samples) {
    // First edge >= rho; NaN lands in the first bucket.
    std::size_t b = 0;
    if (!std::isnan(s.rho)) {
      b = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), s.rho) -
                                   edges.begin());
    }
    ++report.buckets[b].count;
    iou_sum[b] += s.iou;
    if (s.iou > 0.5) ++successes[b];
  }
  for (std::size_t i = 0; i < report.buckets.size(); ++i) {
    auto& bucket = report.buckets[i];
    if (bucket.count) {
      bucket.mean_iou = iou_sum[i] / double(bucket.count);
      bucket.success_rate = double(successes[i]) / double(bucket.count);
    }
  }
  report.samples = std::move(samples);
  return report;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json boundary_report_to_json(const BoundaryReport& report) {
  auto samples = nlohmann::json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"scr", finite_or_null(s.scr)},
                       {"gamma", finite_or_null(s.gamma)},
                       {"n", s.n},
                       {"b_value", s.b_value},
                       {"rho", finite_or_null(s.rho)},
                       {"rho_infinite", std::isinf(s.rho)},
                       {"iou", s.iou}});
  }
  auto buckets = nlohmann::json::array();
  for (const auto& b : report.buckets) {
    buckets.push_back({{"lo", b.lo},
                       {"hi", finite_or_null(b.hi)},
                       {"count", b.count},
                       {"mean_iou", b.mean_iou},
                       {"success_rate", b.success_rate}});
  }
  return {{"v", 1}, {"buckets", std::move(buckets)}, {"samples", std::move(samples)}};
}

std::string boundary_report_to_csv(const BoundaryReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "rho_lo,rho_hi,count,mean_iou,success_rate\n";
  for (const auto& b : report.buckets) {
    out << b.lo << ',';
    if (std::isfinite(b.hi)) out << b.hi;
    else out << "inf";
    out << ',' << b.count << ',' << b.mean_iou << ',' << b.success_rate << '\n';
  }
  return out.str();
}

std::string boundary_report_to_svg(const BoundaryReport& report) {
  constexpr int kWidth = 560;
  constexpr int kHeight = 320;
  constexpr int kLeft = 50;
  constexpr int kBottom = 270;
  constexpr int kPlotH = 230;
  const std::size_t nb = report.buckets.size();
  const double slot = nb ? double(kWidth - kLeft - 20) / double(nb) : 0.0;

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kWidth - 10
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom - kPlotH << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = kBottom - kPlotH * tick / 4.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << tick * 0.25 << "</text>\n";
  }
  std::ostringstream line;
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = report.buckets[i];
    const double x = kLeft + slot * double(i) + slot * 0.15;
    const double bar_h = kPlotH * b.success_rate;
    svg << "<rect class=\"success\" x=\"" << x << "\" y=\"" << kBottom - bar_h << "\" width=\""
        << slot * 0.7 << "\" height=\"" << bar_h << "\" fill=\"#6baed6\"/>\n";
    const double cx = kLeft + slot * (double(i) + 0.5);
    const double cy = kBottom - kPlotH * b.mean_iou;
    line << (i ? " " : "") << cx << ',' << cy;
    svg << "<circle class=\"mean-iou\" cx=\"" << cx << "\" cy=\"" << cy
        << "\" r=\"4\" fill=\"#d62728\"/>\n";
    std::ostringstream label;
    label << '(' << b.lo << ", ";
    if (std::isfinite(b.hi)) label << b.hi << ']';
    else label << "inf)";
    svg << "<text x=\"" << cx << "\" y=\"" << kBottom + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << label.str() << "</text>\n";
    svg << "<text x=\"" << cx << "\" y=\"" << kBottom + 30
        << "\" font-size=\"10\" text-anchor=\"middle\">n=" << b.count << "</text>\n";
  }
  if (nb > 1) {
    svg << "<polyline points=\"" << line.str()
        << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 4
      << "\" font-size=\"12\" text-anchor=\"middle\">rho = SCR / B(n, gamma, R_s)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace irpamg
