#include <doctest.h>

#include <cmath>
#include <random>

#include "irpamg/errors.hpp"
#include "irpamg/experiments.hpp"
#include "irpamg/pamg.hpp"
#include "oracles.hpp"

using namespace irpamg;

namespace {

Raster gaussian_scene(int size, double cx, double cy, double sigma, double amp, double base,
                      double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, noise);
  std::vector<double> v(std::size_t(size) * std::size_t(size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      double val = base + amp * std::exp(-r2 / (2 * sigma * sigma)) + (noise > 0 ? nd(rng) : 0.0);
      val = std::round(std::clamp(val, 0.0, 1.0) * 65536.0) / 65536.0;
      v[std::size_t(y) * std::size_t(size) + std::size_t(x)] = val;
    }
  }
  return Raster(size, size, std::move(v));
}

// Checks every step of a trace against from-scratch recomputation.
void check_against_oracle(const Raster& img, PixelCoord seed, const PamgConfig& cfg) {
  const auto trace = grow(img, seed, cfg);
  const Raster unified = unify_polarity(img, seed, cfg.polarity_window).raster;
  CHECK(trace.inverted == (img.at(seed) < oracle::window_median(img, seed, cfg.polarity_window)));
  REQUIRE(trace.path.size() == trace.energies.size());
  REQUIRE(trace.path.size() == trace.stats.size());
  CHECK(trace.path[0] == seed);
  CHECK(trace.path.size() <= cfg.effective_budget(img.size()));
  for (std::size_t k = 0; k < trace.path.size(); ++k) {
    const auto o = oracle::prefix_stats(unified, trace.path, k, cfg.ring_width);
    const auto& s = trace.stats[k];
    REQUIRE(s.n == k + 1);
    CHECK(std::abs(s.mu_in - o.mu_in) <= 1e-9);
    CHECK(std::abs(s.sigma_in - o.sigma_in) <= 1e-9);
    CHECK(std::abs(s.d_max - o.d_max) <= 1e-9);
    if (std::isnan(o.mu_out)) {
      CHECK(std::isnan(trace.mu_out[k]));
    } else {
      CHECK(std::abs(trace.mu_out[k] - o.mu_out) <= 1e-9);
    }
    const double e = oracle::energy_formula(k + 1, o.mu_in, o.mu_out, o.sigma_in, o.d_max, cfg);
    if (std::isfinite(e)) {
      CHECK(std::abs(trace.energies[k] - e) <= 1e-9);
    } else {
      CHECK(trace.energies[k] == kNoEnergy);
    }
    if (k + 1 < trace.path.size()) {
      const auto best = oracle::frontier_max(unified, trace.path, k,
                                             cfg.connectivity == Connectivity::Eight);
      REQUIRE(best.has_value());
      CHECK(unified.at(trace.path[k + 1]) == *best);
    }
  }
  CHECK(trace.k_star == oracle::scan_argmax(trace.energies));
}

}  // namespace

TEST_SUITE("pamg") {
  TEST_CASE("energy fixtures") {
    PamgConfig cfg;
    const RegionStats s{10, 0.8, 0.05, 3.0};
    const auto t = energy(s, 0.2, cfg);
    REQUIRE(t);
    const double expect = std::log(std::log(10.0)) + std::log(0.6 / 0.050001) - 9.0 / 800.0;
    CHECK(t->total == doctest::Approx(expect).epsilon(1e-14));
    cfg.variant = EnergyVariant::NoGeometricPrior;
    CHECK(energy(s, 0.2, cfg)->total == doctest::Approx(expect + 9.0 / 800.0).epsilon(1e-14));
    CHECK_FALSE(energy({10, 0.5, 0.1, 1.0}, 0.5, {}).has_value());
    CHECK_THROWS_AS(energy({1, 0.5, 0.0, 0.0}, 0.1, {}), std::invalid_argument);
  }

  TEST_CASE("variants each drop one factor") {
    const RegionStats s{12, 0.7, 0.04, 2.5};
    for (auto v : kAllVariants) {
      PamgConfig cfg;
      cfg.variant = v;
      CHECK(energy(s, 0.3, cfg)->total ==
            doctest::Approx(oracle::energy_formula(12, 0.7, 0.3, 0.04, 2.5, cfg)).epsilon(1e-14));
    }
  }

  TEST_CASE("config defaults and validation") {
    const PamgConfig cfg;
    CHECK(cfg.r_s == 20.0);
    CHECK(cfg.epsilon == 1e-6);
    CHECK(cfg.warmup == 5);
    CHECK(cfg.effective_budget(64 * 64) == std::size_t(std::ceil(std::numbers::pi * 400)));
    CHECK(cfg.effective_budget(100) == 100);
    PamgConfig tiny;
    tiny.r_s = 0.5;
    CHECK(tiny.effective_budget(4096) == 6);
    PamgConfig bad;
    bad.r_s = 0;
    CHECK_THROWS(bad.validate());
    bad = {};
    bad.growth_budget = 3;
    CHECK_THROWS(bad.validate());
    CHECK(parse_variant("no_saliency") == EnergyVariant::NoSaliency);
    CHECK_THROWS(parse_variant("nope"));
  }

  TEST_CASE("backtracking picks the first maximum") {
    const double s = kNoEnergy;
    CHECK(energy_argmax({s, s, s, s, s, 1.0, 2.0, 1.5}) == 6);
    CHECK(energy_argmax({s, s, s, s, s, 2.0, 2.0}) == 5);
    CHECK_FALSE(energy_argmax({s, s}).has_value());

    GrowthTrace t;
    t.width = 8;
    t.height = 1;
    for (int x = 0; x < 8; ++x) t.path.push_back({x, 0});
    t.energies = {s, s, s, s, s, 1.0, 2.0, 1.5};
    CHECK(backtrack_mask(t).area() == 7);
  }

  TEST_CASE("constant image has no energy peak") {
    const Raster flat = Raster::filled(16, 16, 0.3);
    const auto trace = grow(flat, {8, 8});
    for (double e : trace.energies) CHECK(e == kNoEnergy);
    CHECK_FALSE(trace.k_star.has_value());
    CHECK_THROWS_AS(generate_mask(flat, {8, 8}), NoEnergyPeak);
  }

  TEST_CASE("seed outside the raster") {
    CHECK_THROWS_AS(grow(Raster::filled(4, 4, 0.1), {4, 0}), std::out_of_range);
  }

  TEST_CASE("single Gaussian scene matches prefix recomputation") {
    const Raster img = gaussian_scene(32, 16, 16, 1.5, 0.5, 0.2, 0.05, 1);
    check_against_oracle(img, {16, 16}, {});
  }

  TEST_CASE("random rasters, seeds and variants match prefix recomputation") {
    std::mt19937_64 rng(99);
    for (int run = 0; run < 40; ++run) {
      const Raster img = oracle::random_raster(rng, 24, 20);
      PamgConfig cfg;
      cfg.r_s = 2.0 + double(rng() % 5);
      cfg.variant = kAllVariants[rng() % std::size(kAllVariants)];
      cfg.connectivity = rng() % 2 ? Connectivity::Four : Connectivity::Eight;
      const PixelCoord seed{int(rng() % 24), int(rng() % 20)};
      check_against_oracle(img, seed, cfg);
    }
  }

  TEST_CASE("dark spot and bright twin give identical traces") {
    const Raster bright = gaussian_scene(32, 15.3, 16.1, 1.2, 0.4, 0.3, 0.03, 4);
    const auto a = grow(bright, {15, 16});
    const auto b = grow(bright.complement(), {15, 16});
    CHECK_FALSE(a.inverted);
    CHECK(b.inverted);
    CHECK(a.path == b.path);
    CHECK(a.energies == b.energies);
    CHECK(generate_mask(bright, {15, 16}).mask == generate_mask(bright.complement(), {15, 16}).mask);
  }

  TEST_CASE("repeated runs are identical, ties included") {
    std::vector<double> v(20 * 20, 0.25);
    for (int y = 8; y < 12; ++y)
      for (int x = 8; x < 12; ++x) v[std::size_t(y) * 20 + std::size_t(x)] = 0.75;
    const Raster plateau(20, 20, v);
    const auto a = grow(plateau, {9, 9});
    const auto b = grow(plateau, {9, 9});
    CHECK(a.path == b.path);
    CHECK(a.energies == b.energies);
  }

  TEST_CASE("containment, budget and path uniqueness") {
    const Raster img = gaussian_scene(40, 20, 20, 2.0, 0.5, 0.2, 0.02, 8);
    PamgConfig cfg;
    cfg.r_s = 6;
    const auto t = grow(img, {20, 20}, cfg);
    CHECK(t.path.size() == cfg.effective_budget(img.size()));
    std::vector<std::uint8_t> seen(img.size(), 0);
    for (const auto& p : t.path) {
      CHECK(seen[img.index(p)] == 0);
      seen[img.index(p)] = 1;
    }
  }

  TEST_CASE("guided mode") {
    const Raster img = gaussian_scene(48, 24, 24, 1.5, 0.5, 0.2, 0.02, 3);
    const auto g = guided_mask(img, {24, 24}, 2.0);
    PamgConfig cfg;
    cfg.r_s = 10.0;
    CHECK(g.mask == generate_mask(img, {24, 24}, cfg).mask);
    CHECK_THROWS(guided_mask(img, {24, 24}, 0.0));
    CHECK_THROWS(guided_mask(img, {24, 24}, 2.0, 1.0));
  }

  TEST_CASE("trace JSON encodes sentinels as null") {
    const Raster img = gaussian_scene(24, 12, 12, 1.2, 0.5, 0.2, 0.02, 2);
    const auto t = grow(img, {12, 12});
    const auto j = trace_to_json(t);
    CHECK(j["v"] == 1);
    CHECK(j["energies"][0].is_null());
    CHECK(j["path"].size() == t.path.size());
    CHECK(j["k_star"] == *t.k_star);
  }

  TEST_CASE("core coverage from center and boundary seeds") {
    // Isotropic Gaussian spots, SCR 5..12.
    const auto scenes = suite(SuiteParams{}, 30, 77);
    std::size_t checked = 0;
    for (const auto& s : scenes) {
      if (!s.measures[0] || s.measures[0]->scr < 5.0) continue;
      ++checked;
      const Mask& gt = s.gt_masks[0];
      PixelCoord brightest = gt.pixels()[0];
      for (const auto& p : gt.pixels()) {
        if (s.raster.at(p) > s.raster.at(brightest)) brightest = p;
      }
      CHECK(generate_mask(s.raster, center_seed(s, 0)).mask.contains(brightest));
      for (const auto& c : contour_pixels(gt)) {
        const auto r = generate_mask(s.raster, c);
        CHECK(r.mask.contains(brightest));
      }
    }
    CHECK(checked >= 20);
  }
}
