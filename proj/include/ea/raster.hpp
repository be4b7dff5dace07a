#pragma once

// Dense grids, binary masks and the small set of integer-exact geometry
// routines the rest of the library is built on. Pixel coordinates are
// (x = column, y = row), row 0 at the top. All convexity tests use 64-bit
// integer cross products, so results do not depend on floating point.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ea/errors.hpp"

namespace ea {

struct Grid {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, height*width

  static Grid zeros(int h, int w) { return Grid{h, w, std::vector<double>(std::size_t(h) * w, 0.0)}; }

  double& at(int y, int x) { return values[std::size_t(y) * width + x]; }
  double at(int y, int x) const { return values[std::size_t(y) * width + x]; }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  static BinaryMask empty(int h, int w) {
    return BinaryMask{h, w, std::vector<std::uint8_t>(std::size_t(h) * w, 0)};
  }

  bool test(int y, int x) const { return bits[std::size_t(y) * width + x] != 0; }
  void set(int y, int x, bool v) { bits[std::size_t(y) * width + x] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  bool operator==(const BinaryMask&) const = default;
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
};

enum class Connectivity { Four = 4, Eight = 8 };

namespace detail {

inline void require_dims(int height, int width) {
  if (height < 1 || width < 1)
    throw DimensionMismatch("height and width must be at least 1, got " + std::to_string(height) +
                            "x" + std::to_string(width));
}

inline void require_shape(const BinaryMask& m) {
  require_dims(m.height, m.width);
  if (m.bits.size() != std::size_t(m.height) * m.width)
    throw DimensionMismatch("mask storage does not match declared shape");
}

inline void require_shape(const Grid& g) {
  require_dims(g.height, g.width);
  if (g.values.size() != std::size_t(g.height) * g.width)
    throw DimensionMismatch("grid storage does not match declared shape");
}

// Cross product of (a - o) x (b - o) with the y axis flipped so that
// positive means a left turn when y grows downward on screen.
inline long long cross_up(PixelPoint o, PixelPoint a, PixelPoint b) {
  const long long ax = a.x - o.x, ay = o.y - a.y;
  const long long bx = b.x - o.x, by = o.y - b.y;
  return ax * by - ay * bx;
}

}  // namespace detail

struct Component {
  BinaryMask mask;
  std::size_t area = 0;
  PixelPoint seed;  // first pixel in raster order
};

// Components are reported in raster-scan discovery order of their seed pixel.
inline std::vector<Component> connected_components(const BinaryMask& m, Connectivity conn) {
  detail::require_shape(m);
  static constexpr int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dx4[] = {0, -1, 1, 0};
  static constexpr int dy4[] = {-1, 0, 0, 1};
  const int* dx = conn == Connectivity::Eight ? dx8 : dx4;
  const int* dy = conn == Connectivity::Eight ? dy8 : dy4;
  const int nn = conn == Connectivity::Eight ? 8 : 4;

  std::vector<Component> out;
  std::vector<std::uint8_t> seen(m.bits.size(), 0);
  std::vector<PixelPoint> stack;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.test(y, x) || seen[std::size_t(y) * m.width + x]) continue;
      Component c;
      c.mask = BinaryMask::empty(m.height, m.width);
      c.seed = {x, y};
      stack.assign(1, {x, y});
      seen[std::size_t(y) * m.width + x] = 1;
      while (!stack.empty()) {
        const PixelPoint p = stack.back();
        stack.pop_back();
        c.mask.set(p.y, p.x, true);
        ++c.area;
        for (int k = 0; k < nn; ++k) {
          const int qx = p.x + dx[k], qy = p.y + dy[k];
          if (qx < 0 || qx >= m.width || qy < 0 || qy >= m.height) continue;
          const std::size_t idx = std::size_t(qy) * m.width + qx;
          if (!m.bits[idx] || seen[idx]) continue;
          seen[idx] = 1;
          stack.push_back({qx, qy});
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

// Largest component by area; ties go to the component whose seed pixel comes
// first in raster order. Throws EmptyMask when there is no foreground.
inline BinaryMask largest_component(const BinaryMask& m, Connectivity conn) {
  auto comps = connected_components(m, conn);
  if (comps.empty()) throw EmptyMask();
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (comps[i].area > comps[best].area) best = i;
  return std::move(comps[best].mask);
}

inline std::vector<PixelPoint> mask_points(const BinaryMask& m) {
  detail::require_shape(m);
  std::vector<PixelPoint> pts;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.test(y, x)) pts.push_back({x, y});
  return pts;
}

// Monotone chain. Vertices come back in counter-clockwise order with respect
// to the usual mathematical orientation (y up), starting from the smallest-x
// vertex; collinear points are dropped. One distinct input point yields a
// one-vertex hull, collinear inputs a two-vertex hull.
inline std::vector<PixelPoint> convex_hull(std::vector<PixelPoint> pts) {
  if (pts.empty()) throw ValidationError("convex_hull: empty point set");
  std::sort(pts.begin(), pts.end(), [](PixelPoint a, PixelPoint b) {
    return a.x != b.x ? a.x < b.x : a.y > b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;

  std::vector<PixelPoint> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && detail::cross_up(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && detail::cross_up(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);  // last point equals the first
  return h;
}

namespace detail {

inline bool on_polygon_boundary(const std::vector<PixelPoint>& poly, PixelPoint q) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PixelPoint a = poly[i], b = poly[(i + 1) % n];
    if (a == b) {
      if (q == a) return true;
      continue;
    }
    const long long cross =
        (long long)(b.x - a.x) * (q.y - a.y) - (long long)(q.x - a.x) * (b.y - a.y);
    if (cross != 0) continue;
    if (std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) &&
        std::min(a.y, b.y) <= q.y && q.y <= std::max(a.y, b.y))
      return true;
  }
  return false;
}

// Even-odd ray crossing with the division cleared, so the test is exact for
// integer vertices.
inline bool in_polygon_interior(const std::vector<PixelPoint>& poly, PixelPoint q) {
  const std::size_t n = poly.size();
  bool in = false;
  for (std::size_t i = 0; i < n; ++i) {
    const PixelPoint a = poly[i], b = poly[(i + 1) % n];
    if ((a.y > q.y) == (b.y > q.y)) continue;
    const long long d =
        (long long)(b.x - a.x) * (q.y - a.y) - (long long)(q.x - a.x) * (b.y - a.y);
    if (b.y > a.y ? d > 0 : d < 0) in = !in;
  }
  return in;
}

}  // namespace detail

// Rasterizes a polygon under the even-odd rule; boundary pixels count as
// inside. Degenerate polygons (one vertex, collinear chain) rasterize to the
// pixels they touch.
inline BinaryMask fill_polygon(const std::vector<PixelPoint>& poly, int height, int width) {
  detail::require_dims(height, width);
  if (poly.empty()) throw ValidationError("fill_polygon: empty polygon");
  for (const auto& v : poly)
    if (v.x < 0 || v.x >= width || v.y < 0 || v.y >= height)
      throw BoundsError("fill_polygon: vertex (" + std::to_string(v.x) + "," +
                        std::to_string(v.y) + ") outside " + std::to_string(height) + "x" +
                        std::to_string(width));

  int x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
  for (const auto& v : poly) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  BinaryMask out = BinaryMask::empty(height, width);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const PixelPoint q{x, y};
      if (detail::on_polygon_boundary(poly, q) || detail::in_polygon_interior(poly, q))
        out.set(y, x, true);
    }
  return out;
}

struct ColumnSpan {
  int top = 0;     // smallest occupied row
  int bottom = 0;  // largest occupied row
};

struct ColumnExtrema {
  std::vector<std::optional<ColumnSpan>> columns;  // one entry per column
  std::optional<int> leftmost;                     // leftmost occupied column
  std::optional<int> rightmost;
};

inline ColumnExtrema column_extrema(const BinaryMask& m) {
  detail::require_shape(m);
  ColumnExtrema e;
  e.columns.resize(m.width);
  for (int x = 0; x < m.width; ++x) {
    int top = -1, bottom = -1;
    for (int y = 0; y < m.height; ++y) {
      if (!m.test(y, x)) continue;
      if (top < 0) top = y;
      bottom = y;
    }
    if (top >= 0) {
      e.columns[x] = ColumnSpan{top, bottom};
      if (!e.leftmost) e.leftmost = x;
      e.rightmost = x;
    }
  }
  return e;
}

}  // namespace ea
