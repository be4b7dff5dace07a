#include <catch2/catch_amalgamated.hpp>

#include "ea/raster.hpp"
#include "ea/rng.hpp"

using namespace ea;

namespace {

BinaryMask mask_from(int h, int w, std::initializer_list<PixelPoint> pts) {
  BinaryMask m = BinaryMask::empty(h, w);
  for (const auto& p : pts) m.set(p.y, p.x, true);
  return m;
}

}  // namespace

TEST_CASE("connected_components basic partitions") {
  SECTION("all background") {
    CHECK(connected_components(BinaryMask::empty(3, 3), Connectivity::Four).empty());
  }
  SECTION("two isolated pixels under 4-adjacency") {
    const auto comps =
        connected_components(mask_from(3, 3, {{0, 0}, {2, 2}}), Connectivity::Four);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].area == 1);
    CHECK(comps[1].area == 1);
    CHECK(comps[0].seed == PixelPoint{0, 0});
    CHECK(comps[1].seed == PixelPoint{2, 2});
  }
  SECTION("diagonal pair joins under 8-adjacency") {
    const auto comps =
        connected_components(mask_from(3, 3, {{0, 0}, {1, 1}}), Connectivity::Eight);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].area == 2);
  }
}

TEST_CASE("connected_components partition the foreground") {
  SplitMix64 rng(41);
  BinaryMask m = BinaryMask::empty(12, 17);
  for (auto& b : m.bits) b = rng.next_unit() < 0.4 ? 1 : 0;
  const auto comps = connected_components(m, Connectivity::Eight);
  std::size_t total = 0;
  BinaryMask seen = BinaryMask::empty(12, 17);
  for (const auto& c : comps) {
    total += c.area;
    for (std::size_t i = 0; i < seen.bits.size(); ++i) {
      if (!c.mask.bits[i]) continue;
      CHECK(!seen.bits[i]);  // pairwise disjoint
      seen.bits[i] = 1;
    }
  }
  CHECK(total == m.count());
  CHECK(seen == m);
}

TEST_CASE("largest_component selection") {
  SECTION("single pixel is its own component") {
    const auto m = mask_from(4, 4, {{1, 2}});
    CHECK(largest_component(m, Connectivity::Eight) == m);
  }
  SECTION("larger component wins") {
    BinaryMask m = BinaryMask::empty(5, 8);
    for (int x = 0; x < 3; ++x) m.set(0, x, true);        // size 3
    for (int x = 0; x < 5; ++x) m.set(3, x + 2, true);    // size 5
    const auto big = largest_component(m, Connectivity::Eight);
    CHECK(big.count() == 5);
    CHECK(big.test(3, 2));
    CHECK(!big.test(0, 0));
  }
  SECTION("size tie goes to the earliest pixel in raster order") {
    const auto m = mask_from(4, 6, {{0, 0}, {1, 0}, {4, 2}, {5, 2}});
    const auto win = largest_component(m, Connectivity::Four);
    CHECK(win.test(0, 0));
    CHECK(win.test(0, 1));
    CHECK(!win.test(2, 4));
  }
  SECTION("empty mask refuses") {
    CHECK_THROWS_AS(largest_component(BinaryMask::empty(3, 3), Connectivity::Four), EmptyMask);
  }
}

TEST_CASE("convex_hull degenerate and small inputs") {
  CHECK(convex_hull({{0, 0}}) == std::vector<PixelPoint>{{0, 0}});
  CHECK(convex_hull({{0, 0}, {1, 0}, {2, 0}}) == std::vector<PixelPoint>{{0, 0}, {2, 0}});
  CHECK_THROWS_AS(convex_hull({}), ValidationError);

  // square corners plus the center: the center must vanish
  const auto h = convex_hull({{0, 0}, {2, 0}, {0, 2}, {2, 2}, {1, 1}});
  REQUIRE(h.size() == 4);
  for (const auto& v : h) CHECK((v.x == 0 || v.x == 2));
  for (const auto& v : h) CHECK((v.y == 0 || v.y == 2));
}

TEST_CASE("convex_hull contains every input point and is idempotent") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PixelPoint> pts;
    const int n = rng.next_int(1, 40);
    for (int i = 0; i < n; ++i) pts.push_back({rng.next_int(0, 19), rng.next_int(0, 19)});
    const auto hull = convex_hull(pts);
    CHECK(convex_hull(hull) == hull);
    const auto filled = fill_polygon(hull, 20, 20);
    for (const auto& p : pts) CHECK(filled.test(p.y, p.x));
  }
}

TEST_CASE("fill_polygon") {
  SECTION("closed right triangle") {
    const auto m = fill_polygon({{0, 0}, {2, 0}, {0, 2}}, 3, 3);
    CHECK(m.count() == 6);
    CHECK(m.test(0, 0));
    CHECK(m.test(0, 2));
    CHECK(m.test(2, 0));
    CHECK(m.test(1, 1));
    CHECK(!m.test(2, 2));
  }
  SECTION("single vertex") {
    const auto m = fill_polygon({{1, 1}}, 3, 3);
    CHECK(m.count() == 1);
    CHECK(m.test(1, 1));
  }
  SECTION("full-grid rectangle") {
    const auto m = fill_polygon({{0, 0}, {3, 0}, {3, 2}, {0, 2}}, 3, 4);
    CHECK(m.count() == 12);
  }
  SECTION("vertex outside the raster") {
    CHECK_THROWS_AS(fill_polygon({{0, 0}, {4, 0}}, 3, 3), BoundsError);
  }
}

TEST_CASE("column_extrema") {
  SECTION("solid rectangle") {
    BinaryMask m = BinaryMask::empty(6, 6);
    for (int y = 1; y <= 4; ++y)
      for (int x = 2; x <= 4; ++x) m.set(y, x, true);
    const auto e = column_extrema(m);
    REQUIRE(e.leftmost);
    CHECK(*e.leftmost == 2);
    CHECK(*e.rightmost == 4);
    for (int x = 2; x <= 4; ++x) {
      REQUIRE(e.columns[x]);
      CHECK(e.columns[x]->top == 1);
      CHECK(e.columns[x]->bottom == 4);
    }
    CHECK(!e.columns[0]);
    CHECK(!e.columns[5]);
  }
  SECTION("empty mask") {
    const auto e = column_extrema(BinaryMask::empty(4, 4));
    CHECK(!e.leftmost);
    CHECK(!e.rightmost);
  }
  SECTION("single pixel") {
    const auto e = column_extrema(mask_from(8, 8, {{3, 5}}));
    REQUIRE(e.columns[3]);
    CHECK(e.columns[3]->top == 5);
    CHECK(e.columns[3]->bottom == 5);
    CHECK(*e.leftmost == 3);
    CHECK(*e.rightmost == 3);
  }
}
