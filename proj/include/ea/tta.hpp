#pragma once

// Online test-time adaptation. A trainable segmenter sees each frame exactly
// once: predict, refine the thresholded prediction against the layer curves,
// then take a single gradient step toward the refined mask as pseudo label.
// Frames whose refinement is degenerate contribute no update.
//
// LogisticPixelModel is the reference segmenter: an independent logistic
// regression per pixel on features (1, image, residual) with three shared
// weights. It is small enough that the analytic gradient can be checked
// against finite differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ea/errors.hpp"
#include "ea/raster.hpp"
#include "ea/refine.hpp"
#include "ea/surrogate.hpp"

namespace ea {

class TrainableSegmenter {
 public:
  virtual ~TrainableSegmenter() = default;

  // probability map over the frame, values in [0,1]
  virtual Grid predict(const Grid& image, const Grid& residual) const = 0;

  // one gradient step toward the pseudo label; returns the loss before the
  // update. lr = 0 must leave the parameters bit-identical.
  virtual double step(const Grid& image, const Grid& residual, const BinaryMask& pseudo_label,
                      double lr) = 0;
};

inline constexpr double kBceEps = 1e-7;

inline double bce_loss(const Grid& pred, const BinaryMask& label) {
  if (pred.height != label.height || pred.width != label.width)
    throw DimensionMismatch(pred.height, pred.width, label.height, label.width);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double p = std::min(1.0 - kBceEps, std::max(kBceEps, pred.values[i]));
    acc += label.bits[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / double(pred.values.size());
}

class LogisticPixelModel final : public TrainableSegmenter {
 public:
  LogisticPixelModel() = default;
  explicit LogisticPixelModel(std::array<double, 3> weights) : w_(weights) {}

  // Weights matched to the phantom intensity scheme: background pixels score
  // well below zero, lesion pixels well above, with the margin carried by the
  // residual channel.
  static LogisticPixelModel pretrained_default() { return LogisticPixelModel({-4.0, -0.05, 16.0}); }

  const std::array<double, 3>& weights() const { return w_; }

  Grid predict(const Grid& image, const Grid& residual) const override {
    check_pair(image, residual);
    Grid out = Grid::zeros(image.height, image.width);
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = sigmoid(w_[0] + w_[1] * image.values[i] + w_[2] * residual.values[i]);
    return out;
  }

  std::array<double, 3> gradient(const Grid& image, const Grid& residual,
                                 const BinaryMask& label) const {
    check_pair(image, residual);
    if (label.height != image.height || label.width != image.width)
      throw DimensionMismatch(label.height, label.width, image.height, image.width);
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < image.values.size(); ++i) {
      const double p = sigmoid(w_[0] + w_[1] * image.values[i] + w_[2] * residual.values[i]);
      const double d = p - (label.bits[i] ? 1.0 : 0.0);
      g[0] += d;
      g[1] += d * image.values[i];
      g[2] += d * residual.values[i];
    }
    const double inv = 1.0 / double(image.values.size());
    for (double& v : g) v *= inv;
    return g;
  }

  double step(const Grid& image, const Grid& residual, const BinaryMask& pseudo_label,
              double lr) override {
    const double loss = bce_loss(predict(image, residual), pseudo_label);
    const std::array<double, 3> g = gradient(image, residual, pseudo_label);
    for (int k = 0; k < 3; ++k) w_[k] -= lr * g[k];
    return loss;
  }

 private:
  static void check_pair(const Grid& image, const Grid& residual) {
    detail::require_shape(image);
    if (residual.height != image.height || residual.width != image.width)
      throw DimensionMismatch(residual.height, residual.width, image.height, image.width);
  }

  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  std::array<double, 3> w_{0.0, 0.0, 0.0};
};

// Forwards to a wrapped segmenter and records the call sequence, so tests can
// verify the one-prediction one-update discipline.
class CountingSegmenter final : public TrainableSegmenter {
 public:
  explicit CountingSegmenter(TrainableSegmenter& inner) : inner_(inner) {}

  Grid predict(const Grid& image, const Grid& residual) const override {
    calls_.push_back('p');
    return inner_.predict(image, residual);
  }

  double step(const Grid& image, const Grid& residual, const BinaryMask& pseudo_label,
              double lr) override {
    calls_.push_back('s');
    return inner_.step(image, residual, pseudo_label, lr);
  }

  std::size_t predict_calls() const { return std::size_t(std::count(calls_.begin(), calls_.end(), 'p')); }
  std::size_t step_calls() const { return std::size_t(std::count(calls_.begin(), calls_.end(), 's')); }
  const std::vector<char>& call_sequence() const { return calls_; }

 private:
  TrainableSegmenter& inner_;
  mutable std::vector<char> calls_;
};

struct TtaConfig {
  double lr = 5e-5;
  bool update_enabled = true;  // false reproduces the frozen-model baseline
};

inline void validate_tta(const TtaConfig& cfg) {
  if (cfg.update_enabled && !(cfg.lr > 0.0 && cfg.lr < 1.0))
    throw ValidationError("TtaConfig: lr must lie in (0,1), got " + std::to_string(cfg.lr));
}

struct Frame {
  Grid image;
  Grid residual;
  LayerCurve ilm;
  LayerCurve bm;
};

struct FrameResult {
  RefineOutcome outcome;
  std::optional<double> loss;  // loss before the update, absent when skipped
  bool updated = false;
};

// Strictly sequential single pass. The refined mask is both the frame's
// output and the pseudo label for the update, so each prediction is consumed
// exactly once.
inline std::vector<FrameResult> run_online(TrainableSegmenter& model,
                                           const std::vector<Frame>& frames,
                                           const RefineConfig& refine_cfg,
                                           const SurrogateConfig& surrogate_cfg,
                                           const TtaConfig& tta_cfg) {
  validate_tta(tta_cfg);
  std::vector<FrameResult> results;
  results.reserve(frames.size());
  for (const Frame& f : frames) {
    const int h = f.image.height, w = f.image.width;
    const Grid probs = model.predict(f.image, f.residual);
    const BinaryMask oriseg = residual_to_oriseg(probs, surrogate_cfg);
    FrameResult r;
    r.outcome = refine(oriseg, f.ilm, f.bm, refine_cfg, h, w);
    if (tta_cfg.update_enabled && !r.outcome.degenerate) {
      r.loss = model.step(f.image, f.residual, r.outcome.mask, tta_cfg.lr);
      r.updated = true;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ea
