#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <vector>

#include "ea/layers.hpp"
#include "ea/rng.hpp"

using namespace ea;

namespace {

LayerCurve curve(std::vector<double> rows) {
  const int w = int(rows.size());
  return LayerCurve{w, std::move(rows)};
}

// Reference envelope: per column, the highest chord over any pair of input
// points spanning it. Shares chord_row with the implementation so agreement
// can be checked bit for bit.
LayerCurve envelope_by_chords(const LayerCurve& bm) {
  LayerCurve out = bm;
  const int w = bm.width;
  for (int x = 0; x < w; ++x) {
    double best = bm.rows[x];
    for (int i = 0; i <= x; ++i)
      for (int j = x; j < w; ++j) {
        if (i == j) continue;
        best = std::max(best, detail::chord_row(bm.rows, i, j, x));
      }
    out.rows[x] = best;
  }
  return out;
}

}  // namespace

TEST_CASE("round_row rounds half away from zero") {
  CHECK(round_row(0.0) == 0);
  CHECK(round_row(0.5) == 1);
  CHECK(round_row(1.49) == 1);
  CHECK(round_row(2.5) == 3);
}

TEST_CASE("validate_layers") {
  CHECK_NOTHROW(validate_layers(curve({1, 1, 1}), curve({4, 4, 4}), 6, 3));
  CHECK_THROWS_AS(validate_layers(curve({1, 5, 1}), curve({4, 4, 4}), 6, 3), CurveCrossing);
  CHECK_THROWS_AS(validate_layers(curve({1, 1, 1}), curve({4, 4}), 6, 3), WidthMismatch);
  CHECK_THROWS_AS(validate_layers(curve({-1, 1, 1}), curve({4, 4, 4}), 6, 3), RowOutOfRange);
  CHECK_THROWS_AS(validate_layers(curve({1, 1, 1}), curve({4, 6, 4}), 6, 3), RowOutOfRange);

  try {
    validate_layers(curve({1, 5, 1}), curve({4, 4, 4}), 6, 3);
    FAIL("expected CurveCrossing");
  } catch (const CurveCrossing& e) {
    CHECK(e.column == 1);
  }
}

TEST_CASE("convex_envelope_bm fixed cases") {
  CHECK(convex_envelope_bm(curve({10, 8, 10, 10, 10})).rows ==
        std::vector<double>{10, 10, 10, 10, 10});
  // a downward bulge lies on the envelope already
  CHECK(convex_envelope_bm(curve({10, 12, 10})).rows == std::vector<double>{10, 12, 10});
  CHECK(convex_envelope_bm(curve({5, 6, 7, 8, 9})).rows == std::vector<double>{5, 6, 7, 8, 9});
  CHECK(convex_envelope_bm(curve({7})).rows == std::vector<double>{7});
  CHECK(convex_envelope_bm(curve({7, 3})).rows == std::vector<double>{7, 3});
}

// Eighth-integer rows keep every turn test and chord evaluation exactly
// representable: distinct chords then differ by at least 1/504^2, far above
// rounding error, and truly collinear configurations evaluate to the same
// real number through the shared chord expression. On that domain the stack
// walk and the brute-force maximum agree bit for bit, ties included.
TEST_CASE("convex_envelope_bm matches the chord oracle bitwise on lattice curves") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = rng.next_int(2, 64);
    LayerCurve bm{w, {}};
    for (int x = 0; x < w; ++x)
      bm.rows.push_back(double(rng.next_int(5, 40)) + double(rng.next_int(0, 7)) / 8.0);

    const LayerCurve env = convex_envelope_bm(bm);
    const LayerCurve oracle = envelope_by_chords(bm);
    CHECK(env.rows == oracle.rows);
    for (int x = 0; x < w; ++x) CHECK(env.rows[x] >= bm.rows[x]);
  }
}

// Arbitrary doubles can land within rounding error of collinear, where the
// breakpoint decision legitimately goes either way; the result is then only
// pinned down to strict tolerance, and one envelope pass may expose ulp-level
// breakpoints to the next.
TEST_CASE("convex_envelope_bm properties on continuous random curves") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = rng.next_int(2, 64);
    LayerCurve bm{w, {}};
    for (int x = 0; x < w; ++x) bm.rows.push_back(rng.next_range(5.0, 40.0));

    const LayerCurve env = convex_envelope_bm(bm);
    const LayerCurve oracle = envelope_by_chords(bm);
    const LayerCurve twice = convex_envelope_bm(env);
    for (int x = 0; x < w; ++x) {
      CHECK(env.rows[x] == Catch::Approx(oracle.rows[x]).margin(1e-9));
      CHECK(env.rows[x] >= bm.rows[x] - 1e-9);
      CHECK(twice.rows[x] == Catch::Approx(env.rows[x]).margin(1e-9));
    }
  }
}

TEST_CASE("rasterize_band") {
  const LayerPair pair = validate_layers(curve({1, 1, 1, 1}), curve({3, 3, 3, 3}), 5, 4);
  SECTION("small band") {
    const auto m = rasterize_band(pair, 1, 2, 5);
    CHECK(m.count() == 6);
    for (int y = 1; y <= 3; ++y)
      for (int x = 1; x <= 2; ++x) CHECK(m.test(y, x));
  }
  SECTION("single column single row") {
    const LayerPair p1 = validate_layers(curve({2}), curve({2}), 5, 1);
    const auto m = rasterize_band(p1, 0, 0, 5);
    CHECK(m.count() == 1);
    CHECK(m.test(2, 0));
  }
  SECTION("inverted columns refuse") {
    CHECK_THROWS_AS(rasterize_band(pair, 2, 1, 5), BoundsError);
  }
  SECTION("rounded rows outside the raster refuse") {
    const LayerPair tall = validate_layers(curve({1, 1}), curve({4.6, 4.6}), 6, 2);
    CHECK_THROWS_AS(rasterize_band(tall, 0, 1, 5), BoundsError);
  }
  SECTION("pixel count matches the per-column sum") {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const int w = rng.next_int(3, 30);
      LayerCurve ilm{w, {}}, bm{w, {}};
      for (int x = 0; x < w; ++x) {
        ilm.rows.push_back(rng.next_range(0.0, 6.0));
        bm.rows.push_back(rng.next_range(7.0, 14.0));
      }
      const auto m = rasterize_band(validate_layers(ilm, bm, 16, w), 0, w - 1, 16);
      std::size_t expect = 0;
      for (int x = 0; x < w; ++x)
        expect += std::size_t(round_row(bm.rows[x]) - round_row(ilm.rows[x]) + 1);
      CHECK(m.count() == expect);
    }
  }
}

TEST_CASE("fill_curve_gaps") {
  using Sparse = std::vector<std::optional<double>>;
  CHECK(fill_curve_gaps(Sparse{1.0, 2.0, 3.0}) == std::vector<double>{1, 2, 3});
  CHECK(fill_curve_gaps(Sparse{1.0, std::nullopt, 3.0}) == std::vector<double>{1, 2, 3});
  CHECK(fill_curve_gaps(Sparse{std::nullopt, 5.0, std::nullopt}) == std::vector<double>{5, 5, 5});
  CHECK(fill_curve_gaps(Sparse{2.0, std::nullopt, std::nullopt, 8.0}) ==
        std::vector<double>{2, 4, 6, 8});
  CHECK_THROWS_AS(fill_curve_gaps(Sparse{std::nullopt, std::nullopt}), ValidationError);
}
