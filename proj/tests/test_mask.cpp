#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "irpamg/errors.hpp"
#include "irpamg/mask.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace irpamg;

TEST_SUITE("mask") {
  TEST_CASE("geometry fixtures") {
    const std::vector<PixelCoord> one{{5, 7}};
    auto g = mask_geometry(Mask::from_pixels(10, 10, one));
    CHECK(g.centroid_x == 5.0);
    CHECK(g.centroid_y == 7.0);
    CHECK(g.area == 1);
    CHECK(g.equiv_radius == doctest::Approx(std::sqrt(1.0 / std::numbers::pi)));

    const std::vector<PixelCoord> block{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    g = mask_geometry(Mask::from_pixels(10, 10, block));
    CHECK(g.centroid_x == 0.5);
    CHECK(g.centroid_y == 0.5);
    CHECK(g.area == 4);
    CHECK(g.equiv_radius == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)));

    CHECK_THROWS_AS(mask_geometry(Mask(4, 4)), EmptyMask);
  }

  TEST_CASE("geometry matches a naive double loop") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
      const Mask m = testutil::random_mask(rng);
      if (m.empty()) continue;
      const auto bits = m.bitmap();
      const auto n = oracle::naive_geometry(bits, m.width(), m.height());
      const auto g = mask_geometry(m);
      CHECK(g.area == n.area);
      CHECK(g.centroid_x == doctest::Approx(n.cx).epsilon(1e-12));
      CHECK(g.centroid_y == doctest::Approx(n.cy).epsilon(1e-12));
    }
  }

  TEST_CASE("geometry is translation equivariant") {
    const std::vector<PixelCoord> a{{2, 3}, {3, 3}, {3, 4}, {5, 6}};
    std::vector<PixelCoord> b;
    for (auto p : a) b.push_back({p.x + 7, p.y + 4});
    const auto ga = mask_geometry(Mask::from_pixels(20, 20, a));
    const auto gb = mask_geometry(Mask::from_pixels(20, 20, b));
    CHECK(gb.centroid_x - ga.centroid_x == doctest::Approx(7.0));
    CHECK(gb.centroid_y - ga.centroid_y == doctest::Approx(4.0));
    CHECK(ga.area == gb.area);
    CHECK(ga.equiv_radius == gb.equiv_radius);
    for (std::size_t n = 1; n < 100; ++n) CHECK(equivalent_radius(n) < equivalent_radius(n + 1));
  }

  TEST_CASE("RLE fixtures") {
    CHECK(Mask(10, 3).runs().empty());
    std::vector<PixelCoord> row;
    for (int x = 0; x < 10; ++x) row.push_back({x, 1});
    const Mask m = Mask::from_pixels(10, 3, row);
    REQUIRE(m.runs().size() == 1);
    CHECK(m.runs()[0] == Run{10, 10});
  }

  TEST_CASE("from_runs validates and merges") {
    CHECK_THROWS_AS(Mask::from_runs(4, 4, {{0, 0}}), DataError);
    CHECK_THROWS_AS(Mask::from_runs(4, 4, {{14, 3}}), DataError);
    CHECK_THROWS_AS(Mask::from_runs(4, 4, {{0, 3}, {2, 2}}), DataError);
    const Mask m = Mask::from_runs(4, 4, {{4, 2}, {0, 4}});
    REQUIRE(m.runs().size() == 1);
    CHECK(m.runs()[0] == Run{0, 6});
  }

  TEST_CASE("malformed RLE text is a data error") {
    CHECK_THROWS_AS(decode_rle("not json"), DataError);
    CHECK_THROWS_AS(decode_rle(R"({"w":3,"h":3})"), DataError);
    CHECK_THROWS_AS(decode_rle(R"({"w":3,"h":3,"runs":[[8,5]]})"), DataError);
    CHECK_THROWS_AS(decode_rle(R"({"w":0,"h":3,"runs":[]})"), DataError);
  }

  TEST_CASE("1000 random masks round-trip through RLE and PNG") {
    std::mt19937_64 rng(3407);
    for (int i = 0; i < 1000; ++i) {
      const Mask m = testutil::random_mask(rng);
      const std::string text = encode_rle(m);
      const Mask back = decode_rle(text);
      REQUIRE(back == m);
      REQUIRE(encode_rle(back) == text);
      REQUIRE(png_to_mask(mask_to_png(m)) == m);
    }
  }

  TEST_CASE("PNG masks must be binary") {
    RawImage img{2, 1, 8, {0, 128}};
    CHECK_THROWS_AS(png_to_mask(encode_png(img)), DataError);
    RawImage wide{2, 1, 16, {0, 65535}};
    CHECK(png_to_mask(encode_png(wide)).area() == 1);
  }

  TEST_CASE("components, dilation and set operations") {
    const std::vector<PixelCoord> px{{0, 0}, {1, 1}, {5, 5}, {6, 5}, {9, 0}};
    const Mask m = Mask::from_pixels(10, 10, px);
    CHECK(connected_components(m, true).size() == 3);
    CHECK(connected_components(m, false).size() == 4);

    const Mask d = dilate(Mask::from_pixels(10, 10, std::vector<PixelCoord>{{5, 5}}), 2);
    CHECK(d.area() == 25);
    const Mask corner = dilate(Mask::from_pixels(10, 10, std::vector<PixelCoord>{{0, 0}}), 3);
    CHECK(corner.area() == 16);

    const Mask a = Mask::from_pixels(10, 10, std::vector<PixelCoord>{{1, 1}, {2, 2}});
    const Mask b = Mask::from_pixels(10, 10, std::vector<PixelCoord>{{2, 2}, {3, 3}});
    CHECK(mask_union(a, b).area() == 3);
    CHECK(mask_difference(a, b).area() == 1);
    CHECK(intersection_area(a, b) == 1);
  }
}
