#pragma once

// Overlap metrics with explicit conventions for empty masks. The false
// positive rate is not the classic fp/(fp+tn): clinical reports normalize
// both error rates by the lesion size, so the default denominator is tp+fn,
// with fp-normalization available as an alternative. Ratios are capped at 1
// so every metric stays inside [0,1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ea/errors.hpp"
#include "ea/raster.hpp"

namespace ea {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
};

enum class RateMode { GtNormalized, PredNormalized };

struct MetricSet {
  double dsc = 0.0;
  double iou = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
  RateMode mode = RateMode::GtNormalized;
};

inline ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw DimensionMismatch(pred.height, pred.width, gt.height, gt.width);
  detail::require_shape(pred);
  detail::require_shape(gt);
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0, g = gt.bits[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

namespace detail {

inline double capped_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return num == 0 ? 0.0 : 1.0;
  return std::min(1.0, double(num) / double(den));
}

}  // namespace detail

inline MetricSet metric_set(const ConfusionCounts& c, RateMode mode = RateMode::GtNormalized) {
  MetricSet m;
  m.mode = mode;
  const std::uint64_t overlap_den = c.tp + c.fp + c.fn;
  if (overlap_den == 0) {
    // both masks empty: perfect agreement
    m.dsc = 1.0;
    m.iou = 1.0;
  } else {
    m.dsc = double(2 * c.tp) / double(2 * c.tp + c.fp + c.fn);
    m.iou = double(c.tp) / double(overlap_den);
  }
  m.fnr = detail::capped_ratio(c.fn, c.tp + c.fn);
  m.fpr = detail::capped_ratio(c.fp, mode == RateMode::GtNormalized ? c.tp + c.fn : c.tp + c.fp);
  return m;
}

struct FrameMetrics {
  std::string id;
  ConfusionCounts counts;
  MetricSet metrics;
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single frame
};

struct AggregateReport {
  Stat dsc, iou, fnr, fpr;
  std::size_t frames = 0;
  bool exclude_empty_gt = false;
  RateMode mode = RateMode::GtNormalized;
};

namespace detail {

inline Stat stat_of(const std::vector<double>& v) {
  Stat s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / double(v.size() - 1));
  }
  return s;
}

}  // namespace detail

// Frames whose ground truth is empty (tp + fn == 0) can be excluded, since
// their gt-normalized rates carry no signal. Throws EmptyCohort when the
// exclusion removes everything.
inline AggregateReport aggregate(const std::vector<FrameMetrics>& frames, bool exclude_empty_gt) {
  AggregateReport r;
  r.exclude_empty_gt = exclude_empty_gt;
  std::vector<double> dsc, iou, fnr, fpr;
  for (const auto& f : frames) {
    if (exclude_empty_gt && f.counts.tp + f.counts.fn == 0) continue;
    dsc.push_back(f.metrics.dsc);
    iou.push_back(f.metrics.iou);
    fnr.push_back(f.metrics.fnr);
    fpr.push_back(f.metrics.fpr);
    r.mode = f.metrics.mode;
  }
  if (dsc.empty()) throw EmptyCohort();
  r.frames = dsc.size();
  r.dsc = detail::stat_of(dsc);
  r.iou = detail::stat_of(iou);
  r.fnr = detail::stat_of(fnr);
  r.fpr = detail::stat_of(fpr);
  return r;
}

}  // namespace ea
