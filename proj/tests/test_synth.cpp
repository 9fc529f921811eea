#include <doctest.h>

#include <algorithm>
#include <set>

#include <cmath>

#include "irpamg/errors.hpp"
#include "irpamg/synth.hpp"
#include "test_util.hpp"

using namespace irpamg;

namespace {

SyntheticSpec one_target(double amp, double sigma, double noise) {
  SyntheticSpec s;
  s.width = 48;
  s.height = 48;
  s.background.noise_sigma = noise;
  s.targets.push_back({24.2, 23.7, sigma, amp, 0.0});
  return s;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("zero amplitude leaves background only") {
    const auto a = render(one_target(0.0, 1.2, 0.02));
    CHECK(a.gt_masks[0].empty());
    SyntheticSpec bg = one_target(0.0, 1.2, 0.02);
    bg.targets.clear();
    CHECK(render(bg).raster == a.raster);
  }

  TEST_CASE("noise-free GT equals the analytic disc count") {
    for (double sigma : {0.8, 1.3, 2.1}) {
      for (double tau : {0.2, 0.5}) {
        auto spec = one_target(0.4, sigma, 0.0);
        spec.tau = tau;
        const auto scene = render(spec);
        std::size_t count = 0;
        for (int y = 0; y < 48; ++y)
          for (int x = 0; x < 48; ++x) {
            const double r2 = (x - 24.2) * (x - 24.2) + (y - 23.7) * (y - 23.7);
            if (std::exp(-r2 / (2 * sigma * sigma)) >= tau) ++count;
          }
        CHECK(scene.gt_masks[0].area() == count);
      }
    }
  }

  TEST_CASE("rendering is deterministic and quantized to 1/65536") {
    const auto spec = one_target(0.3, 1.5, 0.03);
    const auto a = render(spec);
    CHECK(render(spec).raster == a.raster);
    for (double v : a.raster.data()) CHECK(v * 65536.0 == std::round(v * 65536.0));
    CHECK(mirrored(a).raster == a.raster.complement());
    CHECK(mirrored(a).gt_masks == a.gt_masks);
  }

  TEST_CASE("GT area is non-increasing in tau") {
    std::size_t prev = SIZE_MAX;
    for (double tau : {0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
      auto spec = one_target(0.4, 1.7, 0.0);
      spec.tau = tau;
      const auto area = render(spec).gt_masks[0].area();
      CHECK(area <= prev);
      prev = area;
    }
  }

  TEST_CASE("invalid scenes") {
    auto spec = one_target(0.3, 1.0, 0.0);
    spec.targets[0].cx = 1.0;
    CHECK_THROWS_AS(render(spec), DataError);
    spec = one_target(0.3, 1.5, 0.0);
    spec.targets.push_back({25.0, 24.0, 1.5, 0.3, 0.0});
    CHECK_THROWS_AS(render(spec), DataError);
  }

  TEST_CASE("measured SCR follows the analytic expectation") {
    const auto spec = one_target(0.25, 1.4, 0.02);
    const auto scene = render(spec);
    const auto m = measure_scr_gamma(scene, 0);
    double weight = 0.0;
    for (const auto& p : scene.gt_masks[0].pixels())
      weight += target_profile(std::hypot(p.x - 24.2, p.y - 23.7), spec.targets[0]);
    weight /= double(scene.gt_masks[0].area());
    const double expected = 0.25 * weight / 0.02;
    CHECK(std::abs(m.scr - expected) <= 0.15 * expected);
  }

  TEST_CASE("measurement edge cases") {
    const auto flat = render(one_target(0.0, 1.2, 0.02));
    const Mask patch = dilate(Mask::from_pixels(48, 48, std::vector<PixelCoord>{{24, 24}}), 1);
    const auto m = measure_scr_gamma(flat.raster, patch, Mask(48, 48));
    CHECK(std::abs(m.scr) < 1.5);

    const auto constant = render(one_target(0.0, 1.2, 0.0));
    const auto c = measure_scr_gamma(constant.raster, patch, Mask(48, 48));
    CHECK(std::isinf(c.gamma));

    const Mask corner = Mask::from_pixels(4, 4, std::vector<PixelCoord>{{0, 0}});
    CHECK_THROWS_AS(measure_scr_gamma(Raster::filled(4, 4, 0.2), corner, Mask(4, 4)), DataError);
  }

  TEST_CASE("suite coverage and reproducibility") {
    SuiteParams p;
    CHECK(suite(p, 0, 1).empty());
    CHECK(grid_size(p) == p.scr_grid.size() * p.sigma_t_grid.size() * p.clutter_grid.size());
    const auto a = suite_specs(p, 2 * grid_size(p), 5);
    const auto b = suite_specs(p, 2 * grid_size(p), 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].rng_seed == b[i].rng_seed);
    std::set<std::pair<double, double>> cells;
    for (std::size_t i = 0; i < grid_size(p); ++i)
      cells.insert({a[i].targets[0].sigma_t, a[i].background.structure_gain});
    CHECK(cells.size() == p.sigma_t_grid.size() * p.clutter_grid.size());
    CHECK(suite(p, 3, 9)[2].raster == suite(p, 3, 9)[2].raster);
  }

  TEST_CASE("scene export writes images, masks and manifests") {
    testutil::TempDir dir("synth");
    const auto scenes = suite(SuiteParams{}, 3, 2);
    export_scenes(scenes, dir.path());
    CHECK(std::filesystem::exists(dir.path() / "image_0000.png"));
    CHECK(std::filesystem::exists(dir.path() / "gt_0002_0.png"));
    CHECK(read_mask_png(dir.path() / "gt_0001_0.png") == scenes[1].gt_masks[0]);
    const auto raw = read_image(dir.path() / "image_0000.png");
    CHECK(raw.bit_depth == 16);
    const std::string manifest = testutil::slurp(dir.path() / "manifest.jsonl");
    CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 3);
  }
}
