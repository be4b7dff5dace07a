#pragma once

// Synthetic B-scan phantoms with known layer curves, a known edema region and
// a residual map that mimics a pretrained generator's output. Frames are a
// pure function of (spec, frame_index): every random quantity comes from one
// SplitMix64 stream keyed by frame_key(seed, index), drawn in a fixed order
// (ILM knots, BM jitter, image noise, residual noise, then per-issue
// magnitudes). That draw order is part of the data contract; changing it
// changes every suite.
//
// Issue injectors reproduce the failure modes refinement is meant to fix:
//   bm_elevation     observed BM curve dented upward over a sub-span, coarse
//                    mask clipped to the dent
//   top_undershoot   coarse mask loses its top rows across the span
//   bottom_deviation coarse mask loses its bottom rows across the span
//   dx_skew          coarse mask grows slanted wedges past both span ends
// The first three injure recall, the last injures precision; all leave the
// ground truth untouched.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ea/errors.hpp"
#include "ea/layers.hpp"
#include "ea/raster.hpp"
#include "ea/rng.hpp"

namespace ea::phantom {

struct IssueFlags {
  bool bm_elevation = false;
  bool top_undershoot = false;
  bool bottom_deviation = false;
  bool dx_skew = false;

  bool any() const { return bm_elevation || top_undershoot || bottom_deviation || dx_skew; }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    if (bm_elevation) n.push_back("bm_elevation");
    if (top_undershoot) n.push_back("top_undershoot");
    if (bottom_deviation) n.push_back("bottom_deviation");
    if (dx_skew) n.push_back("dx_skew");
    return n;
  }
};

inline bool set_issue(IssueFlags& f, const std::string& name) {
  if (name == "bm_elevation") f.bm_elevation = true;
  else if (name == "top_undershoot") f.top_undershoot = true;
  else if (name == "bottom_deviation") f.bottom_deviation = true;
  else if (name == "dx_skew") f.dx_skew = true;
  else return false;
  return true;
}

struct CurveParams {
  double base = 0.0;   // row at the left edge before bowing
  double tilt = 0.0;   // linear term across the width
  double bow = 0.0;    // downward bowing at the center, rows
  double noise_amp = 1.0;
};

struct PhantomSpec {
  int height = 128;
  int width = 192;
  std::uint64_t seed = 0;
  CurveParams ilm{28.0, 0.0, 10.0, 1.0};
  CurveParams bm{80.0, 0.0, 12.0, 1.0};
  int edema_x0 = 48;  // inclusive column span of the lesion
  int edema_x1 = 143;
  IssueFlags issues;
  std::optional<int> shift_at;  // frames at this index and later get the intensity shift
  double noise_level = 1.0;
};

struct PhantomFrame {
  Grid image;
  Grid residual;
  LayerCurve ilm_gt, bm_gt;    // anatomy the image is drawn from
  LayerCurve ilm_obs, bm_obs;  // curves as a segmentation stage would report them
  BinaryMask ea_gt;
  BinaryMask oriseg_seed;  // coarse mask after issue injection
  IssueFlags issues;
  bool shifted = false;
};

// Intensity scheme, image values before shift in [0,255].
inline constexpr double kVitreous = 45.0;
inline constexpr double kRetina = 170.0;
inline constexpr double kSubRetina = 80.0;
inline constexpr double kLesion = 90.0;
inline constexpr double kImageNoise = 10.0;
inline constexpr double kShiftOffset = 120.0;

namespace detail {

// Smoothstep interpolation between noise knots placed every 16 columns.
// Polynomial on purpose: transcendental functions round differently across
// libm builds, polynomials do not.
inline std::vector<double> smooth_noise(SplitMix64& rng, int width, double amp) {
  const int knots = (width + 15) / 16 + 1;
  std::vector<double> k(static_cast<std::size_t>(knots), 0.0);
  for (double& v : k) v = rng.next_range(-amp, amp);
  std::vector<double> out(static_cast<std::size_t>(width), 0.0);
  for (int x = 0; x < width; ++x) {
    const int i = x / 16;
    const double t = double(x - i * 16) / 16.0;
    const double s = t * t * (3.0 - 2.0 * t);
    out[x] = k[std::size_t(i)] * (1.0 - s) + k[std::size_t(i) + 1] * s;
  }
  return out;
}

inline void require_feasible(bool ok, const std::string& what) {
  if (!ok) throw SpecInfeasible(what);
}

}  // namespace detail

inline PhantomFrame generate(const PhantomSpec& spec, std::uint64_t frame_index) {
  const int h = spec.height, w = spec.width;
  detail::require_feasible(h >= 32 && w >= 32, "frame must be at least 32x32");
  detail::require_feasible(0 <= spec.edema_x0 && spec.edema_x0 <= spec.edema_x1 && spec.edema_x1 < w,
                           "edema span outside frame");

  SplitMix64 rng(frame_key(spec.seed, frame_index));
  PhantomFrame f;
  f.issues = spec.issues;
  f.shifted = spec.shift_at && int(frame_index) >= *spec.shift_at;

  // curves
  const std::vector<double> ilm_noise = detail::smooth_noise(rng, w, spec.ilm.noise_amp);
  const double bm_tilt = spec.bm.tilt + spec.bm.noise_amp * rng.next_range(-2.0, 2.0);
  const double bm_bow = std::max(0.5, spec.bm.bow + spec.bm.noise_amp * rng.next_range(-1.5, 1.5));
  f.ilm_gt = LayerCurve{w, std::vector<double>(std::size_t(w))};
  f.bm_gt = LayerCurve{w, std::vector<double>(std::size_t(w))};
  for (int x = 0; x < w; ++x) {
    const double u = 2.0 * double(x) / double(w - 1) - 1.0;
    f.ilm_gt.rows[std::size_t(x)] =
        spec.ilm.base + spec.ilm.tilt * u + spec.ilm.bow * (1.0 - u * u) + ilm_noise[std::size_t(x)];
    // BM keeps an exactly concave profile so the envelope is the identity on
    // clean frames; its noise budget goes into tilt and bow jitter instead
    f.bm_gt.rows[std::size_t(x)] = spec.bm.base + bm_tilt * u + bm_bow * (1.0 - u * u);
  }
  for (int x = 0; x < w; ++x) {
    const double it = f.ilm_gt.rows[std::size_t(x)], bt = f.bm_gt.rows[std::size_t(x)];
    detail::require_feasible(it >= 0.5 && bt <= double(h) - 1.5, "curves leave the frame");
    detail::require_feasible(bt - it >= 4.0, "layer band thinner than 4 rows");
  }
  f.ilm_obs = f.ilm_gt;
  f.bm_obs = f.bm_gt;

  const LayerPair gt_pair = validate_layers(f.ilm_gt, f.bm_gt, h, w);
  f.ea_gt = rasterize_band(gt_pair, spec.edema_x0, spec.edema_x1, h);

  // image
  f.image = Grid::zeros(h, w);
  const double noise_amp = kImageNoise * spec.noise_level;
  const double shift = f.shifted ? kShiftOffset : 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int yt = round_row(f.ilm_gt.rows[std::size_t(x)]);
      const int yb = round_row(f.bm_gt.rows[std::size_t(x)]);
      double v;
      if (f.ea_gt.test(y, x))
        v = kLesion;
      else if (y < yt)
        v = kVitreous;
      else if (y <= yb)
        v = kRetina;
      else
        v = kSubRetina;
      f.image.at(y, x) = v + rng.next_range(-noise_amp, noise_amp) + shift;
    }

  // residual: well above 1/2 inside the lesion, well below outside, with a
  // smooth taper toward the lesion boundary
  f.residual = Grid::zeros(h, w);
  const int span_len = spec.edema_x1 - spec.edema_x0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = rng.next_unit();
      if (!f.ea_gt.test(y, x)) {
        f.residual.at(y, x) = 0.3 * u;
        continue;
      }
      const double sx =
          span_len == 0 ? 0.5 : double(x - spec.edema_x0) / double(span_len);
      const int yt = round_row(f.ilm_gt.rows[std::size_t(x)]);
      const int yb = round_row(f.bm_gt.rows[std::size_t(x)]);
      const double sy = yb == yt ? 0.5 : double(y - yt) / double(yb - yt);
      const double wx = 4.0 * sx * (1.0 - sx);
      const double wy = 4.0 * sy * (1.0 - sy);
      f.residual.at(y, x) = 0.6 + 0.38 * wx * wy + 0.02 * u;
    }

  // clean coarse mask: thresholding the residual at 1/2 recovers the band
  f.oriseg_seed = BinaryMask::empty(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (f.residual.at(y, x) >= 0.5) f.oriseg_seed.set(y, x, true);

  // issue injection, fixed order
  if (spec.issues.bm_elevation) {
    detail::require_feasible(span_len + 1 >= 32, "bm_elevation needs a span of at least 32 columns");
    const int max_len = std::min(44, span_len - 3);
    const int len = rng.next_int(24, std::max(24, max_len));
    const int e0 = rng.next_int(spec.edema_x0 + 2, spec.edema_x1 - len - 1);
    const int e1 = e0 + len - 1;
    const double dent = rng.next_range(10.0, 18.0);
    for (int x = e0; x <= e1; ++x) {
      const double t = double(x - e0) / double(e1 - e0);
      f.bm_obs.rows[std::size_t(x)] -= dent * 4.0 * t * (1.0 - t);
      const int yb_obs = round_row(f.bm_obs.rows[std::size_t(x)]);
      const int yb_gt = round_row(f.bm_gt.rows[std::size_t(x)]);
      for (int y = yb_obs + 1; y <= yb_gt; ++y) f.oriseg_seed.set(y, x, false);
    }
  }
  if (spec.issues.top_undershoot) {
    const int offset = rng.next_int(6, 16);
    for (int x = spec.edema_x0; x <= spec.edema_x1; ++x) {
      const int yt = round_row(f.ilm_obs.rows[std::size_t(x)]);
      for (int y = yt; y < yt + offset && y < h; ++y) f.oriseg_seed.set(y, x, false);
    }
  }
  if (spec.issues.bottom_deviation) {
    const int offset = rng.next_int(6, 16);
    for (int x = spec.edema_x0; x <= spec.edema_x1; ++x) {
      const int yb = round_row(f.bm_obs.rows[std::size_t(x)]);
      for (int y = yb; y > yb - offset && y >= 0; --y) f.oriseg_seed.set(y, x, false);
    }
  }
  if (spec.issues.dx_skew) {
    detail::require_feasible(spec.edema_x0 >= 5 && spec.edema_x1 <= w - 6,
                             "dx_skew needs 5 columns of margin on both sides");
    const int dl = rng.next_int(5, std::min(10, spec.edema_x0));
    const int dr = rng.next_int(5, std::min(10, w - 1 - spec.edema_x1));
    for (int side = 0; side < 2; ++side) {
      const int depth_cols = side == 0 ? dl : dr;
      for (int d = 1; d <= depth_cols; ++d) {
        const int x = side == 0 ? spec.edema_x0 - d : spec.edema_x1 + d;
        const int yt = round_row(f.ilm_obs.rows[std::size_t(x)]);
        const int yb = round_row(f.bm_obs.rows[std::size_t(x)]);
        const double frac = 1.0 - double(d) / double(depth_cols + 1);
        int bottom = yt + std::max(1, int(std::floor(double(yb - yt) * frac)));
        bottom = std::min(bottom, yb - 4);
        if (bottom < yt) bottom = yt;
        for (int y = yt; y <= bottom; ++y) f.oriseg_seed.set(y, x, true);
      }
    }
  }

  try {
    validate_layers(f.ilm_obs, f.bm_obs, h, w);
  } catch (const ValidationError& e) {
    throw SpecInfeasible(std::string("injected curves invalid: ") + e.what());
  }
  return f;
}

}  // namespace ea::phantom
