// Acceptance runner: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_runner.hpp"
#include "irpamg/boundary.hpp"
#include "irpamg/errors.hpp"
#include "irpamg/experiments.hpp"
#include "irpamg/metrics.hpp"
#include "irpamg/pamg.hpp"
#include "irpamg/service.hpp"
#include "irpamg/synth.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace irpamg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "" : "!") + what);
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

const std::uint64_t kSeed = 3407;

// ---- oracle equivalence --------------------------------------------------

Outcome oracle_equivalence() {
  Outcome out;
  std::mt19937_64 rng(kSeed);
  std::size_t runs = 0, steps = 0, mismatches = 0, kstar_mismatch = 0;
  double worst = 0.0;
  for (; runs < 1000; ++runs) {
    const Raster img = oracle::random_raster(rng, 64, 64);
    PamgConfig cfg;
    cfg.r_s = 2.0 + double(rng() % 7);
    cfg.variant = kAllVariants[rng() % std::size(kAllVariants)];
    cfg.connectivity = rng() % 2 ? Connectivity::Four : Connectivity::Eight;
    const PixelCoord seed{int(rng() % 64), int(rng() % 64)};
    const auto trace = grow(img, seed, cfg);
    const Raster unified = unify_polarity(img, seed, cfg.polarity_window).raster;
    for (std::size_t k = 0; k < trace.path.size(); ++k, ++steps) {
      const auto o = oracle::prefix_stats(unified, trace.path, k, cfg.ring_width);
      const auto& s = trace.stats[k];
      double d = std::max({std::abs(s.mu_in - o.mu_in), std::abs(s.sigma_in - o.sigma_in),
                           std::abs(s.d_max - o.d_max)});
      if (std::isnan(o.mu_out) != std::isnan(trace.mu_out[k])) {
        d = INFINITY;
      } else if (!std::isnan(o.mu_out)) {
        d = std::max(d, std::abs(trace.mu_out[k] - o.mu_out));
      }
      const double e = oracle::energy_formula(k + 1, o.mu_in, o.mu_out, o.sigma_in, o.d_max, cfg);
      if (std::isfinite(e) != std::isfinite(trace.energies[k])) {
        d = INFINITY;
      } else if (std::isfinite(e)) {
        d = std::max(d, std::abs(trace.energies[k] - e));
      }
      worst = std::max(worst, d);
      if (!(d <= 1e-9)) ++mismatches;
    }
    if (trace.k_star != oracle::scan_argmax(trace.energies)) ++kstar_mismatch;
  }
  out.require(runs >= 1000, "runs=" + std::to_string(runs));
  out.notes.push_back("steps=" + std::to_string(steps));
  std::ostringstream w;
  w << std::scientific << worst;
  out.require(mismatches == 0, "max|diff|=" + w.str() + " over tol=" + std::to_string(mismatches));
  out.require(kstar_mismatch == 0, "k* mismatches=" + std::to_string(kstar_mismatch));
  return out;
}

// ---- determinism & polarity ----------------------------------------------

bool same_dir(const fs::path& a, const fs::path& b) {
  std::vector<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename().string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  if (na != nb) return false;
  for (const auto& n : na)
    if (testutil::slurp(a / n) != testutil::slurp(b / n)) return false;
  return true;
}

Outcome determinism_polarity() {
  Outcome out;
  const auto scenes = suite(default_suite_params(), 200, kSeed);

  std::size_t repeat_diff = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto seed = center_seed(scenes[i], 0);
    const auto a = mask_to_png(generate_mask(scenes[i].raster, seed).mask);
    const auto b = mask_to_png(generate_mask(scenes[i].raster, seed).mask);
    if (a != b) ++repeat_diff;
  }
  out.require(repeat_diff == 0, "repeat diffs=" + std::to_string(repeat_diff) + "/50");

  testutil::TempDir dir("accept-batch");
  const std::vector<SceneTruth> subset(scenes.begin(), scenes.begin() + 24);
  export_scenes(subset, dir.path());
  bool batch_same = true;
  std::string reference;
  for (int jobs : {1, 2, 8}) {
    const auto o = dir.path() / ("out" + std::to_string(jobs));
    const auto r = testutil::run_cli("batch " + testutil::q(dir.path() / "manifest.jsonl") +
                                         " --jobs " + std::to_string(jobs) + " --out " +
                                         testutil::q(o),
                                     dir.path());
    if (r.code != 0) {
      batch_same = false;
      break;
    }
    if (jobs != 1) {
      batch_same = batch_same && same_dir(dir.path() / "out1" / "masks", o / "masks") &&
                   same_dir(dir.path() / "out1" / "pred", o / "pred") &&
                   testutil::slurp(o / "summary.json") == reference;
    } else {
      reference = testutil::slurp(o / "summary.json");
    }
  }
  out.require(batch_same, "batch jobs {1,2,8} byte-identical");

  std::size_t mirror_diff = 0, compared = 0;
  for (const auto& s : scenes) {
    const SceneTruth twin = mirrored(s);
    std::vector<PixelCoord> seeds{center_seed(s, 0)};
    const auto contour = contour_pixels(s.gt_masks[0]);
    if (!contour.empty()) seeds.push_back(contour[contour.size() / 2]);
    for (const auto& seed : seeds) {
      ++compared;
      std::optional<Mask> a, b;
      try {
        a = generate_mask(s.raster, seed).mask;
      } catch (const NoEnergyPeak&) {
      }
      try {
        b = generate_mask(twin.raster, seed).mask;
      } catch (const NoEnergyPeak&) {
      }
      if (a != b) ++mirror_diff;
    }
  }
  out.require(mirror_diff == 0, "mirror diffs=" + std::to_string(mirror_diff) + "/" +
                                    std::to_string(compared));
  return out;
}

// ---- synthetic suite analogs ---------------------------------------------

/// First `count` scenes of the frozen suite whose measured SCR is >= 5.
std::vector<SceneTruth> scr5_suite(std::size_t count) {
  std::vector<SceneTruth> picked;
  const auto all = suite(default_suite_params(), count * 2, kSeed);
  for (const auto& s : all) {
    if (s.measures[0] && s.measures[0]->scr >= 5.0) picked.push_back(s);
    if (picked.size() == count) break;
  }
  return picked;
}

Outcome seed_robustness(const std::vector<SceneTruth>& scenes) {
  Outcome out;
  out.require(scenes.size() >= 200, "targets=" + std::to_string(scenes.size()));
  const auto rows = run_seed_sweep(scenes, PamgConfig{}, kSeed);
  for (const auto& r : rows)
    out.notes.push_back(r.label + " mIoU=" + fmt(r.miou) + " AR=" + fmt(r.mean_area_ratio, 3));
  const double gap = std::abs(rows[0].miou - rows[2].miou);
  out.require(gap <= 0.03, "|center-boundary|=" + fmt(100 * gap, 2) + "pt <= 3");
  const double dc = std::abs(rows[0].mean_area_ratio - 1.0);
  out.require(dc <= std::abs(rows[1].mean_area_ratio - 1.0) &&
                  dc <= std::abs(rows[2].mean_area_ratio - 1.0),
              "center AR closest to 1");
  return out;
}

double spread(const std::vector<RunSummary>& rows) {
  double lo = 1.0, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.miou);
    hi = std::max(hi, r.miou);
  }
  return hi - lo;
}

Outcome rs_sensitivity(const std::vector<SceneTruth>& scenes) {
  Outcome out;
  const PamgConfig cfg;
  const auto rs = run_rs_sweep(scenes, {2, 16, 20, 24}, cfg);
  for (const auto& r : rs) out.notes.push_back("Rs=" + fmt(r.param, 0) + ":" + fmt(r.miou));
  out.require(rs[0].miou <= 0.5 * rs[2].miou, "mIoU(2) <= 0.5*mIoU(20)");
  const std::vector<RunSummary> plateau(rs.begin() + 1, rs.end());
  out.require(spread(plateau) <= 0.02, "Rs{16,20,24} spread=" + fmt(100 * spread(plateau), 2) + "pt");
  const auto ks = run_k_sweep(scenes, {4, 5, 6, 7, 8}, cfg);
  out.require(spread(ks) <= 0.02, "k{4..8} spread=" + fmt(100 * spread(ks), 2) + "pt");
  return out;
}

Outcome ablation() {
  Outcome out;
  const auto rows = run_ablation(suite(cluttered_suite_params(), 200, kSeed), PamgConfig{});
  const RunSummary* full = nullptr;
  const RunSummary* no_geo = nullptr;
  const RunSummary* no_size = nullptr;
  for (const auto& r : rows) {
    out.notes.push_back(r.label + "=" + fmt(r.miou) + "/AR" + fmt(r.mean_area_ratio, 2));
    if (r.label == to_string(EnergyVariant::Full)) full = &r;
    if (r.label == to_string(EnergyVariant::NoGeometricPrior)) no_geo = &r;
    if (r.label == to_string(EnergyVariant::NoSizePrior)) no_size = &r;
  }
  bool best = true;
  for (const auto& r : rows) best = best && full->miou >= r.miou;
  out.require(best, "full has highest mIoU");
  out.require(no_geo->mean_area_ratio >= 3.0, "no_geometric_prior AR >= 3");
  out.require(no_size->mean_area_ratio < 1.0, "no_size_prior AR < 1");
  return out;
}

Outcome boundary_validation() {
  Outcome out;
  const auto report = run_boundary(suite(boundary_suite_params(), 600, kSeed), PamgConfig{});
  out.require(report.samples.size() >= 500, "targets=" + std::to_string(report.samples.size()));
  double lo = INFINITY, hi = 0.0;
  for (const auto& s : report.samples) {
    lo = std::min(lo, s.rho);
    hi = std::max(hi, s.rho);
  }
  out.require(lo <= 0.3 && hi >= 5.0, "rho range [" + fmt(lo, 2) + "," + fmt(hi, 2) + "]");
  std::string rates;
  bool monotone = true;
  double prev = -1.0;
  for (const auto& b : report.buckets) {
    rates += (rates.empty() ? "" : "/") + fmt(b.success_rate, 3) + "(n" + std::to_string(b.count) + ")";
    if (b.count == 0) continue;
    monotone = monotone && b.success_rate >= prev;
    prev = b.success_rate;
  }
  out.notes.push_back("success " + rates);
  out.require(monotone, "non-decreasing bucket success");
  out.require(report.buckets.back().success_rate >= 0.9, "rho>2 success >= 0.9");

  // 10 x 10 grid over statistical contrast and support.
  std::size_t violations = 0, grid = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j, ++grid) {
      IncrementModel m;
      m.delta_mu = 0.002 * std::pow(2.0, i);
      m.sigma_t_region = 0.05;
      m.r_s = 2.0 + 4.0 * j;
      const auto s = peak_scan(m, 20000);
      if (!s.holds) ++violations;
    }
  }
  out.require(grid == 100 && violations == 0,
              "peak-scan grid=" + std::to_string(grid) + " violations=" + std::to_string(violations));
  return out;
}

// ---- metrics -------------------------------------------------------------

Mask block(int w, int h, int x0, int y0, int bw, int bh) {
  std::vector<PixelCoord> px;
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) px.push_back({x, y});
  return Mask::from_pixels(w, h, px);
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

Outcome metrics_fixtures() {
  Outcome out;
  bool ok = true;
  const Mask a = block(8, 8, 1, 1, 2, 2);
  ok = ok && iou(a, a) == 1.0 && iou(a, block(8, 8, 5, 5, 2, 2)) == 0.0;
  ok = ok && iou(Mask(4, 4), Mask(4, 4)) == 1.0;
  ok = ok && near(iou(Mask::from_pixels(8, 8, std::vector<PixelCoord>{{0, 0}, {1, 0}}),
                      Mask::from_pixels(8, 8, std::vector<PixelCoord>{{1, 0}, {2, 0}})),
                  1.0 / 3.0);
  const std::vector<std::pair<Mask, Mask>> half{{a, a}, {Mask(8, 8), a}};
  ok = ok && miou(half) == 0.5;
  out.require(ok, "IoU/mIoU");

  const int w = 640, h = 512;
  const Mask gt = mask_union(mask_union(block(w, h, 100, 100, 4, 4), block(w, h, 300, 200, 4, 4)),
                             block(w, h, 500, 400, 4, 2));
  const Mask pred = mask_union(mask_union(block(w, h, 101, 101, 3, 3), block(w, h, 303, 201, 2, 2)),
                               block(w, h, 50, 450, 5, 1));
  const Mask preds[] = {pred};
  const Mask gts[] = {gt};
  const auto t = pd_fa(preds, gts);
  ok = t.n_total == 3 && t.n_tp == 2 && t.n_fp_pixels == 5 && near(t.pd(), 2.0 / 3.0) &&
       near(t.fa(), 5.0 / (640.0 * 512.0 - 40.0));
  const Mask one = block(40, 40, 10, 10, 1, 1);
  ok = ok && match_targets(block(40, 40, 13, 10, 1, 1), one).tally.n_tp == 1 &&
       match_targets(block(40, 40, 14, 10, 1, 1), one).tally.n_tp == 0;
  out.require(ok, "Pd/Fa");

  const Mask sq = block(20, 20, 5, 5, 3, 3);
  auto e = geometry_errors(block(20, 20, 8, 9, 3, 3), sq);
  ok = e.area_ratio == 1.0 && near(e.centroid_error, 5.0) && near(e.radius_error, 0.0);
  e = geometry_errors(block(20, 20, 0, 0, 2, 2), block(20, 20, 0, 0, 1, 1));
  ok = ok && e.area_ratio == 4.0 && near(e.centroid_error, std::sqrt(0.5)) &&
       near(e.radius_error, 1.0 / std::sqrt(std::numbers::pi));
  bool threw = false;
  try {
    geometry_errors(Mask(20, 20), sq);
  } catch (const EmptyMask&) {
    threw = true;
  }
  out.require(ok && threw, "geometry errors");

  std::mt19937_64 rng(kSeed);
  std::size_t failures = 0;
  for (int i = 0; i < 1000; ++i)
    if (!props::monotonicity_trial(rng).empty()) ++failures;
  out.require(failures == 0, "monotonicity failures=" + std::to_string(failures) + "/1000");
  return out;
}

// ---- interface round-trips -----------------------------------------------

Outcome round_trips() {
  Outcome out;
  std::mt19937_64 rng(kSeed);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mask m = testutil::random_mask(rng);
    if (!(decode_rle(encode_rle(m)) == m) || !(png_to_mask(mask_to_png(m)) == m)) ++bad;
  }
  out.require(bad == 0, "RLE/PNG failures=" + std::to_string(bad) + "/1000");

  testutil::TempDir dir("accept-rt");
  const auto scenes = suite(default_suite_params(), 12, kSeed + 1);
  export_scenes(scenes, dir.path());
  SessionStore store(dir.path());
  AnnotateService svc(store);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "image_%04zu", i);
    const auto seed = center_seed(scenes[i], 0);
    const auto json_path = dir.path() / "cli.json";
    const auto png_path = dir.path() / "cli.png";
    const auto r = testutil::run_cli(
        "grow " + testutil::q(dir.path() / (std::string(id) + ".png")) + " --seed " +
            std::to_string(seed.x) + "," + std::to_string(seed.y) + " --out " +
            testutil::q(png_path) + " --json " + testutil::q(json_path),
        dir.path());
    const nlohmann::json req{{"image_id", id}, {"seed", {seed.x, seed.y}}};
    const auto reply = svc.grow(req.dump());
    if (r.code != 0 || reply.status != 200) {
      ++diff;
      continue;
    }
    const Mask svc_mask = rle_from_json(nlohmann::json::parse(reply.body)["mask"]);
    const auto png = mask_to_png(svc_mask);
    if (reply.body != testutil::slurp(json_path) ||
        std::string(png.begin(), png.end()) != testutil::slurp(png_path))
      ++diff;
  }
  out.require(diff == 0, "CLI vs service diffs=" + std::to_string(diff) + "/" +
                             std::to_string(scenes.size()));
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  std::vector<SceneTruth> scr5;
  auto shared = [&]() -> const std::vector<SceneTruth>& {
    if (scr5.empty()) scr5 = scr5_suite(200);
    return scr5;
  };
  const std::vector<Criterion> criteria{
      {"oracle_equivalence", 120, oracle_equivalence},
      {"determinism_polarity", 0, determinism_polarity},
      {"seed_robustness", 180, [&] { return seed_robustness(shared()); }},
      {"rs_sensitivity", 300, [&] { return rs_sensitivity(shared()); }},
      {"ablation_ordering", 300, ablation},
      {"boundary_validation", 300, boundary_validation},
      {"metrics_fixtures", 0, metrics_fixtures},
      {"interface_round_trips", 0, round_trips},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.require(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0) o.require(secs <= c.limit_s, "runtime<=" + fmt(c.limit_s, 0) + "s");
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << fmt(secs, 1) << "s] " << detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - std::size_t(failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
