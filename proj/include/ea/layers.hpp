#pragma once

// Retinal layer curves. A curve stores one subpixel row value per column;
// the ILM curve must stay above (smaller row) or touch the BM curve. The BM
// envelope replaces the observed curve by its least concave majorant in row
// coordinates, which is the curve a convex hull of the region under BM would
// trace: upward dents are bridged by chords, downward bulges are kept.

#include <cmath>
#include <optional>
#include <vector>

#include "ea/errors.hpp"
#include "ea/raster.hpp"

namespace ea {

struct LayerCurve {
  int width = 0;
  std::vector<double> rows;  // one row value per column
};

struct LayerPair {
  LayerCurve ilm;
  LayerCurve bm;
};

// Shared rounding rule for curve-to-pixel conversion: round half away from
// zero. Row values are non-negative, so this is round-half-up.
inline int round_row(double v) { return int(std::llround(v)); }

inline LayerPair validate_layers(const LayerCurve& ilm, const LayerCurve& bm, int height, int width) {
  detail::require_dims(height, width);
  if (ilm.width != width || int(ilm.rows.size()) != width) throw WidthMismatch(ilm.width, width);
  if (bm.width != width || int(bm.rows.size()) != width) throw WidthMismatch(bm.width, width);
  for (int x = 0; x < width; ++x) {
    for (double v : {ilm.rows[x], bm.rows[x]})
      if (!std::isfinite(v) || v < 0.0 || v > double(height - 1)) throw RowOutOfRange(x, v);
    if (ilm.rows[x] > bm.rows[x]) throw CurveCrossing(x, ilm.rows[x], bm.rows[x]);
  }
  return LayerPair{ilm, bm};
}

namespace detail {

// Chord through (i, rows[i]) and (j, rows[j]) evaluated at column x. The
// envelope and its brute-force counterpart in the tests must share this exact
// expression so they agree bitwise.
inline double chord_row(const std::vector<double>& rows, int i, int j, int x) {
  return rows[i] + (rows[j] - rows[i]) * double(x - i) / double(j - i);
}

}  // namespace detail

// Least concave majorant of the per-column row values, computed with a single
// monotone scan over the breakpoint stack. Input values are reproduced exactly
// at breakpoints; between breakpoints the chord is interpolated.
inline LayerCurve convex_envelope_bm(const LayerCurve& bm) {
  const int w = bm.width;
  if (int(bm.rows.size()) != w) throw WidthMismatch(int(bm.rows.size()), w);
  if (w <= 2) return bm;

  std::vector<int> bp;
  bp.reserve(std::size_t(w));
  for (int x = 0; x < w; ++x) {
    while (bp.size() >= 2) {
      const int i = bp[bp.size() - 2], j = bp.back();
      // keep j only while it lies strictly above the chord from i to x
      const double turn = double(j - i) * (bm.rows[x] - bm.rows[i]) -
                          (bm.rows[j] - bm.rows[i]) * double(x - i);
      if (turn >= 0.0)
        bp.pop_back();
      else
        break;
    }
    bp.push_back(x);
  }

  LayerCurve out{w, std::vector<double>(std::size_t(w))};
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const int i = bp[k], j = bp[k + 1];
    out.rows[i] = bm.rows[i];
    for (int x = i + 1; x < j; ++x) out.rows[x] = detail::chord_row(bm.rows, i, j, x);
  }
  out.rows[bp.back()] = bm.rows[bp.back()];
  return out;
}

// Fills the band between the two curves over columns [x_left, x_right], both
// inclusive, rounding each curve to its pixel row.
inline BinaryMask rasterize_band(const LayerPair& pair, int x_left, int x_right, int height) {
  const int width = pair.ilm.width;
  if (x_left < 0 || x_right >= width || x_left > x_right)
    throw BoundsError("rasterize_band: columns [" + std::to_string(x_left) + "," +
                      std::to_string(x_right) + "] outside width " + std::to_string(width));
  BinaryMask out = BinaryMask::empty(height, width);
  for (int x = x_left; x <= x_right; ++x) {
    const int yt = round_row(pair.ilm.rows[x]);
    const int yb = round_row(pair.bm.rows[x]);
    if (yt < 0 || yb >= height)
      throw BoundsError("rasterize_band: rounded rows [" + std::to_string(yt) + "," +
                        std::to_string(yb) + "] outside height " + std::to_string(height));
    for (int y = yt; y <= yb; ++y) out.set(y, x, true);
  }
  return out;
}

// Linear interpolation across gaps in a sparse curve; missing leading or
// trailing values copy the nearest known one. At least one value must exist.
inline std::vector<double> fill_curve_gaps(const std::vector<std::optional<double>>& sparse) {
  const int w = int(sparse.size());
  int first = -1, last = -1;
  for (int x = 0; x < w; ++x)
    if (sparse[x]) {
      if (first < 0) first = x;
      last = x;
    }
  if (first < 0) throw ValidationError("fill_curve_gaps: no known values");

  std::vector<double> out(static_cast<std::size_t>(w), 0.0);
  for (int x = 0; x < first; ++x) out[x] = *sparse[first];
  for (int x = last + 1; x < w; ++x) out[x] = *sparse[last];
  int prev = first;
  out[first] = *sparse[first];
  for (int x = first + 1; x <= last; ++x) {
    if (!sparse[x]) continue;
    out[x] = *sparse[x];
    for (int g = prev + 1; g < x; ++g)
      out[g] = *sparse[prev] + (*sparse[x] - *sparse[prev]) * double(g - prev) / double(x - prev);
    prev = x;
  }
  return out;
}

}  // namespace ea
