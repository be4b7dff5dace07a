#pragma once

// Turns a generator residual map into the coarse segmentation the refinement
// stage starts from: threshold, keep the largest connected component, and
// optionally close concavities with a filled convex hull.

#include "ea/errors.hpp"
#include "ea/raster.hpp"

namespace ea {

struct SurrogateConfig {
  double threshold = 0.5;
  Connectivity connectivity = Connectivity::Eight;
  bool apply_hull = true;
};

inline BinaryMask residual_to_oriseg(const Grid& residual, const SurrogateConfig& cfg) {
  detail::require_shape(residual);
  BinaryMask cand = BinaryMask::empty(residual.height, residual.width);
  bool any = false;
  for (int y = 0; y < residual.height; ++y)
    for (int x = 0; x < residual.width; ++x)
      if (residual.at(y, x) >= cfg.threshold) {
        cand.set(y, x, true);
        any = true;
      }
  if (!any) return cand;

  BinaryMask core = largest_component(cand, cfg.connectivity);
  if (!cfg.apply_hull) return core;
  return fill_polygon(convex_hull(mask_points(core)), residual.height, residual.width);
}

}  // namespace ea
