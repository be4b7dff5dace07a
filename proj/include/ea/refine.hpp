#pragma once

// Layer-guided refinement of a coarse edema mask. The coarse mask is
// intersected with the anatomy in four steps: find where its contour touches
// the ILM and BM curves, complete missing corner points from the same-side
// partner, pick a left and right bound per strategy, and rasterize the layer
// band between the bounds.
//
// Strategies: 1 takes the outermost bounds (lowest miss rate, most
// over-segmentation), 2 the innermost, 3 the per-side average with the span
// widened by its rounding.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ea/errors.hpp"
#include "ea/layers.hpp"
#include "ea/raster.hpp"

namespace ea {

enum class BoundaryStrategy { Outer = 1, Inner = 2, Averaged = 3 };

struct CornerPoints {
  std::optional<PixelPoint> top_left;
  std::optional<PixelPoint> top_right;
  std::optional<PixelPoint> bottom_left;
  std::optional<PixelPoint> bottom_right;

  bool complete() const { return top_left && top_right && bottom_left && bottom_right; }
};

struct RefineConfig {
  BoundaryStrategy strategy = BoundaryStrategy::Outer;
  double tolerance_px = 2.0;  // curve-contact tolerance in rows
};

struct Bounds {
  int w_left = 0;
  int w_right = 0;
  bool degenerate = false;  // bounds crossed and were clamped to the midpoint
};

struct RefineOutcome {
  BinaryMask mask;
  CornerPoints corners;
  int w_left = -1;
  int w_right = -1;
  bool degenerate = false;
  std::vector<std::string> notes;
};

struct MaskExtent {
  int leftmost = 0;
  int rightmost = 0;
};

// A column contributes a top (bottom) intersection when its topmost
// (bottommost) foreground pixel sits within tolerance of the respective
// curve. Corner points are the leftmost and rightmost such columns; the y
// coordinate is the rounded curve row, not the pixel row.
inline CornerPoints find_intersections(const BinaryMask& oriseg, const LayerPair& pair,
                                       double tolerance_px) {
  if (oriseg.width != pair.ilm.width)
    throw DimensionMismatch("mask width " + std::to_string(oriseg.width) + " vs curve width " +
                            std::to_string(pair.ilm.width));
  const ColumnExtrema ext = column_extrema(oriseg);
  if (!ext.leftmost) throw EmptyPrediction();

  CornerPoints c;
  for (int x = 0; x < oriseg.width; ++x) {
    if (!ext.columns[x]) continue;
    const ColumnSpan span = *ext.columns[x];
    if (std::abs(double(span.top) - pair.ilm.rows[x]) <= tolerance_px) {
      const PixelPoint p{x, round_row(pair.ilm.rows[x])};
      if (!c.top_left) c.top_left = p;
      c.top_right = p;
    }
    if (std::abs(double(span.bottom) - pair.bm.rows[x]) <= tolerance_px) {
      const PixelPoint p{x, round_row(pair.bm.rows[x])};
      if (!c.bottom_left) c.bottom_left = p;
      c.bottom_right = p;
    }
  }
  return c;
}

namespace detail {

inline PixelPoint corner_at(const LayerCurve& curve, int x) { return {x, round_row(curve.rows[x])}; }

inline void note(std::vector<std::string>* notes, const char* text) {
  if (notes) notes->push_back(text);
}

}  // namespace detail

// Completes missing corners. A missing corner first borrows the column of its
// same-side partner (top-left from bottom-left and so on) and takes its row
// from its own curve; a side with neither corner falls back to the coarse
// mask's extreme column on that side.
inline CornerPoints complete_missing(const CornerPoints& in, const LayerPair& pair,
                                     MaskExtent extent, std::vector<std::string>* notes = nullptr) {
  CornerPoints c = in;
  if (!c.top_left && c.bottom_left) {
    c.top_left = detail::corner_at(pair.ilm, c.bottom_left->x);
    detail::note(notes, "top_left_from_bottom_left");
  }
  if (!c.bottom_left && c.top_left) {
    c.bottom_left = detail::corner_at(pair.bm, c.top_left->x);
    detail::note(notes, "bottom_left_from_top_left");
  }
  if (!c.top_left && !c.bottom_left) {
    c.top_left = detail::corner_at(pair.ilm, extent.leftmost);
    c.bottom_left = detail::corner_at(pair.bm, extent.leftmost);
    detail::note(notes, "left_from_mask_extent");
  }
  if (!c.top_right && c.bottom_right) {
    c.top_right = detail::corner_at(pair.ilm, c.bottom_right->x);
    detail::note(notes, "top_right_from_bottom_right");
  }
  if (!c.bottom_right && c.top_right) {
    c.bottom_right = detail::corner_at(pair.bm, c.top_right->x);
    detail::note(notes, "bottom_right_from_top_right");
  }
  if (!c.top_right && !c.bottom_right) {
    c.top_right = detail::corner_at(pair.ilm, extent.rightmost);
    c.bottom_right = detail::corner_at(pair.bm, extent.rightmost);
    detail::note(notes, "right_from_mask_extent");
  }
  return c;
}

inline Bounds select_bounds(const CornerPoints& c, BoundaryStrategy strategy) {
  if (!c.complete()) throw IncompleteCorners();
  const int tl = c.top_left->x, tr = c.top_right->x;
  const int bl = c.bottom_left->x, br = c.bottom_right->x;

  Bounds b;
  switch (strategy) {
    case BoundaryStrategy::Outer:
      b.w_left = std::min(tl, bl);
      b.w_right = std::max(tr, br);
      break;
    case BoundaryStrategy::Inner:
      b.w_left = std::max(tl, bl);
      b.w_right = std::min(tr, br);
      break;
    case BoundaryStrategy::Averaged:
      // averages widen outward: floor on the left, ceiling on the right
      b.w_left = (tl + bl) / 2;
      b.w_right = (tr + br + 1) / 2;
      break;
  }
  if (b.w_left > b.w_right) {
    // inner bounds can cross; collapse to the rounded midpoint column
    const int mid = (b.w_left + b.w_right + 1) / 2;
    b.w_left = mid;
    b.w_right = mid;
    b.degenerate = true;
  }
  return b;
}

// The confined mask is exactly the layer band over [w_left, w_right].
inline BinaryMask confined(const LayerPair& pair, int w_left, int w_right, int height) {
  return rasterize_band(pair, w_left, w_right, height);
}

inline RefineOutcome refine(const BinaryMask& oriseg, const LayerCurve& ilm, const LayerCurve& bm,
                            const RefineConfig& cfg, int height, int width) {
  if (oriseg.height != height || oriseg.width != width)
    throw DimensionMismatch(oriseg.height, oriseg.width, height, width);
  validate_layers(ilm, bm, height, width);
  const LayerPair pair = validate_layers(ilm, convex_envelope_bm(bm), height, width);

  RefineOutcome out;
  const ColumnExtrema ext = column_extrema(oriseg);
  if (!ext.leftmost) {
    out.mask = BinaryMask::empty(height, width);
    out.degenerate = true;
    out.notes.push_back("empty_prediction");
    return out;
  }

  CornerPoints found = find_intersections(oriseg, pair, cfg.tolerance_px);
  out.corners = complete_missing(found, pair, MaskExtent{*ext.leftmost, *ext.rightmost}, &out.notes);
  const Bounds b = select_bounds(out.corners, cfg.strategy);
  if (b.degenerate) out.notes.push_back("bounds_clamped");
  out.w_left = b.w_left;
  out.w_right = b.w_right;
  out.degenerate = b.degenerate;
  out.mask = confined(pair, b.w_left, b.w_right, height);
  return out;
}

}  // namespace ea
