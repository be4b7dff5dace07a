#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "ea/phantom.hpp"
#include "ea/rng.hpp"
#include "ea/tta.hpp"

using namespace ea;

namespace {

Frame phantom_frame(std::uint64_t index, std::uint64_t seed = 11) {
  phantom::PhantomSpec spec;
  spec.seed = seed;
  const auto f = phantom::generate(spec, index);
  return Frame{f.image, f.residual, f.ilm_obs, f.bm_obs};
}

// all vitreous, zero residual: the model sees nothing to segment
Frame blank_frame() {
  Frame f;
  f.image = Grid::zeros(32, 48);
  for (auto& v : f.image.values) v = 45.0;
  f.residual = Grid::zeros(32, 48);
  f.ilm = LayerCurve{48, std::vector<double>(48, 8.0)};
  f.bm = LayerCurve{48, std::vector<double>(48, 20.0)};
  return f;
}

}  // namespace

TEST_CASE("bce_loss closed forms") {
  Grid half = Grid::zeros(1, 1);
  half.at(0, 0) = 0.5;
  BinaryMask one = BinaryMask::empty(1, 1);
  one.set(0, 0, true);
  CHECK(bce_loss(half, one) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(half, BinaryMask::empty(1, 1)) == Catch::Approx(std::log(2.0)).epsilon(1e-12));

  // perfect 0/1 prediction costs only the clamp epsilon
  Grid exact = Grid::zeros(2, 2);
  exact.at(0, 0) = 1.0;
  BinaryMask label = BinaryMask::empty(2, 2);
  label.set(0, 0, true);
  CHECK(bce_loss(exact, label) == Catch::Approx(-std::log(1.0 - kBceEps)).epsilon(1e-3));

  CHECK_THROWS_AS(bce_loss(Grid::zeros(2, 2), BinaryMask::empty(2, 3)), DimensionMismatch);
}

TEST_CASE("logistic model single-pixel step") {
  LogisticPixelModel model({0.0, 0.0, 0.0});
  Grid img = Grid::zeros(1, 1);
  Grid res = Grid::zeros(1, 1);
  BinaryMask label = BinaryMask::empty(1, 1);
  label.set(0, 0, true);

  const double loss = model.step(img, res, label, 5e-4);
  CHECK(loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(model.weights()[0] == Catch::Approx(2.5e-4).epsilon(1e-12));
  CHECK(model.weights()[1] == 0.0);
  CHECK(model.weights()[2] == 0.0);
}

TEST_CASE("step with zero learning rate leaves weights bit-identical") {
  LogisticPixelModel model({0.3, -0.7, 1.1});
  const std::array<double, 3> before = model.weights();
  Grid img = Grid::zeros(4, 4);
  Grid res = Grid::zeros(4, 4);
  for (auto& v : img.values) v = 0.25;
  BinaryMask label = BinaryMask::empty(4, 4);
  label.set(1, 1, true);
  model.step(img, res, label, 0.0);
  CHECK(model.weights() == before);
}

TEST_CASE("analytic gradient matches central finite differences") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Grid img = Grid::zeros(8, 8), res = Grid::zeros(8, 8);
    BinaryMask label = BinaryMask::empty(8, 8);
    for (auto& v : img.values) v = rng.next_unit();
    for (auto& v : res.values) v = rng.next_unit();
    for (auto& b : label.bits) b = rng.next_unit() < 0.4;
    const std::array<double, 3> w{rng.next_range(-2, 2), rng.next_range(-2, 2),
                                  rng.next_range(-2, 2)};

    LogisticPixelModel model(w);
    const auto g = model.gradient(img, res, label);
    const double h = 1e-6;
    double norm = 0.0;
    for (double v : g) norm = std::max(norm, std::abs(v));
    for (int k = 0; k < 3; ++k) {
      std::array<double, 3> lo = w, hi = w;
      lo[k] -= h;
      hi[k] += h;
      const double fd = (bce_loss(LogisticPixelModel(hi).predict(img, res), label) -
                         bce_loss(LogisticPixelModel(lo).predict(img, res), label)) /
                        (2.0 * h);
      CHECK(std::abs(g[k] - fd) < 1e-4 * std::max(norm, 1e-10));
    }
  }
}

TEST_CASE("validate_tta") {
  TtaConfig ok;
  CHECK_NOTHROW(validate_tta(ok));
  TtaConfig bad;
  bad.lr = 1.5;
  CHECK_THROWS_AS(validate_tta(bad), ValidationError);
  TtaConfig frozen;
  frozen.lr = 0.0;
  frozen.update_enabled = false;
  CHECK_NOTHROW(validate_tta(frozen));
}

TEST_CASE("run_online with updates disabled equals independent refinement") {
  std::vector<Frame> frames;
  for (int i = 0; i < 3; ++i) frames.push_back(phantom_frame(std::uint64_t(i)));

  RefineConfig refine_cfg;
  SurrogateConfig surrogate_cfg;
  TtaConfig frozen;
  frozen.lr = 0.0;
  frozen.update_enabled = false;

  LogisticPixelModel model = LogisticPixelModel::pretrained_default();
  const auto results = run_online(model, frames, refine_cfg, surrogate_cfg, frozen);
  REQUIRE(results.size() == 3);

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const LogisticPixelModel fresh = LogisticPixelModel::pretrained_default();
    const auto oriseg = residual_to_oriseg(fresh.predict(frames[i].image, frames[i].residual),
                                           surrogate_cfg);
    const auto solo = refine(oriseg, frames[i].ilm, frames[i].bm, refine_cfg,
                             frames[i].image.height, frames[i].image.width);
    CHECK(results[i].outcome.mask == solo.mask);
    CHECK(!results[i].updated);
    CHECK(!results[i].loss);
  }
  CHECK(model.weights() == LogisticPixelModel::pretrained_default().weights());
}

TEST_CASE("run_online single frame refines then updates once") {
  std::vector<Frame> frames{phantom_frame(0)};
  LogisticPixelModel model = LogisticPixelModel::pretrained_default();
  CountingSegmenter counted(model);

  const auto results = run_online(counted, frames, RefineConfig{}, SurrogateConfig{}, TtaConfig{});
  REQUIRE(results.size() == 1);
  CHECK(results[0].updated);
  CHECK(results[0].loss);
  CHECK(counted.predict_calls() == 1);
  CHECK(counted.step_calls() == 1);
  CHECK(counted.call_sequence() == std::vector<char>{'p', 's'});
  CHECK(model.weights() != LogisticPixelModel::pretrained_default().weights());
}

TEST_CASE("run_online skips the update on degenerate frames") {
  std::vector<Frame> frames{phantom_frame(0), blank_frame(), phantom_frame(1)};
  LogisticPixelModel model = LogisticPixelModel::pretrained_default();
  CountingSegmenter counted(model);

  const auto results = run_online(counted, frames, RefineConfig{}, SurrogateConfig{}, TtaConfig{});
  REQUIRE(results.size() == 3);
  CHECK(results[0].updated);
  CHECK(results[1].outcome.degenerate);
  CHECK(!results[1].updated);
  CHECK(!results[1].loss);
  CHECK(results[2].updated);
  CHECK(counted.predict_calls() == 3);
  CHECK(counted.step_calls() == 2);
  CHECK(counted.call_sequence() == std::vector<char>{'p', 's', 'p', 'p', 's'});
}
