#pragma once

// On-disk formats. Everything written here is byte-deterministic: PGM is
// binary P5 with values 0/255 only, grids are raw little-endian float32 with
// a JSON shape sidecar, curves are CSV with shortest round-trip number
// formatting, and JSON documents keep insertion order. Unreadable or
// malformed files raise IoError; cross-file inconsistencies raise
// ValidationError.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ea/errors.hpp"
#include "ea/layers.hpp"
#include "ea/metrics.hpp"
#include "ea/raster.hpp"
#include "ea/refine.hpp"

namespace ea {

using ordered_json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "grid files are little-endian");

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode) {
  std::ofstream f(p, mode);
  if (!f) throw IoError("cannot open for writing: " + p.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& p, std::ios::openmode mode) {
  std::ifstream f(p, mode);
  if (!f) throw IoError("cannot open: " + p.string());
  return f;
}

inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// ---- PGM (binary P5, strictly bilevel) ----

inline void write_pgm(const std::filesystem::path& p, const BinaryMask& m) {
  detail::require_shape(m);
  auto f = detail::open_out(p, std::ios::binary);
  f << "P5\n" << m.width << " " << m.height << "\n255\n";
  std::vector<char> row(std::size_t(m.width));
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) row[std::size_t(x)] = m.test(y, x) ? char(255) : char(0);
    f.write(row.data(), m.width);
  }
  if (!f) throw IoError("short write: " + p.string());
}

inline BinaryMask read_pgm(const std::filesystem::path& p) {
  auto f = detail::open_in(p, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (!f || magic != "P5") throw IoError("not a binary PGM: " + p.string());
  if (w < 1 || h < 1) throw IoError("bad PGM dimensions: " + p.string());
  if (maxval != 255) throw IoError("PGM maxval must be 255: " + p.string());
  f.get();  // single whitespace after the header
  std::vector<char> raw(std::size_t(h) * w);
  f.read(raw.data(), std::streamsize(raw.size()));
  if (f.gcount() != std::streamsize(raw.size())) throw IoError("truncated PGM: " + p.string());
  BinaryMask m = BinaryMask::empty(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned char v = static_cast<unsigned char>(raw[i]);
    if (v == 255)
      m.bits[i] = 1;
    else if (v != 0)
      throw IoError("PGM value " + std::to_string(v) + " is not 0 or 255: " + p.string());
  }
  return m;
}

// ---- raw float32 grid with JSON sidecar ----

inline std::filesystem::path sidecar_path(std::filesystem::path p) {
  p.replace_extension(".json");
  return p;
}

inline void write_grid(const std::filesystem::path& p, const Grid& g) {
  detail::require_shape(g);
  {
    auto f = detail::open_out(p, std::ios::binary);
    std::vector<float> row(std::size_t(g.width));
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) row[std::size_t(x)] = float(g.at(y, x));
      f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
    }
    if (!f) throw IoError("short write: " + p.string());
  }
  ordered_json side;
  side["height"] = g.height;
  side["width"] = g.width;
  auto f = detail::open_out(sidecar_path(p), std::ios::out);
  f << side.dump(2) << "\n";
}

inline Grid read_grid(const std::filesystem::path& p) {
  ordered_json side;
  {
    auto f = detail::open_in(sidecar_path(p), std::ios::in);
    try {
      f >> side;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad grid sidecar " + sidecar_path(p).string() + ": " + e.what());
    }
  }
  if (!side.is_object() || !side.contains("height") || !side.contains("width") ||
      !side["height"].is_number_integer() || !side["width"].is_number_integer())
    throw IoError("grid sidecar must carry integer height and width: " + sidecar_path(p).string());
  const int h = side["height"].get<int>(), w = side["width"].get<int>();
  if (h < 1 || w < 1) throw IoError("bad grid dimensions in sidecar: " + sidecar_path(p).string());

  auto f = detail::open_in(p, std::ios::binary);
  std::vector<float> raw(std::size_t(h) * w);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(float)));
  if (f.gcount() != std::streamsize(raw.size() * sizeof(float)))
    throw IoError("grid file shorter than sidecar shape: " + p.string());
  char extra;
  if (f.read(&extra, 1).gcount() != 0)
    throw IoError("grid file longer than sidecar shape: " + p.string());
  Grid g = Grid::zeros(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]))
      throw IoError("non-finite value in grid: " + p.string());
    g.values[i] = double(raw[i]);
  }
  return g;
}

// ---- layer curves CSV ----

// One line per column: x,ilm_row,bm_row. An empty field is a gap and is
// interpolated from the nearest known values on load; a wholly absent column
// is a gap in both curves.
inline void write_curves_csv(const std::filesystem::path& p, const LayerCurve& ilm,
                             const LayerCurve& bm) {
  if (ilm.width != bm.width) throw WidthMismatch(ilm.width, bm.width);
  auto f = detail::open_out(p, std::ios::out);
  f << "x,ilm_row,bm_row\n";
  for (int x = 0; x < ilm.width; ++x)
    f << x << "," << detail::fmt_double(ilm.rows[std::size_t(x)]) << ","
      << detail::fmt_double(bm.rows[std::size_t(x)]) << "\n";
  if (!f) throw IoError("short write: " + p.string());
}

inline std::pair<LayerCurve, LayerCurve> read_curves_csv(const std::filesystem::path& p) {
  auto f = detail::open_in(p, std::ios::in);
  std::string line;
  if (!std::getline(f, line) || line != "x,ilm_row,bm_row")
    throw IoError("curves CSV must start with the x,ilm_row,bm_row header: " + p.string());

  auto parse_field = [&](const std::string& field, int lineno) -> std::optional<double> {
    if (field.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v))
      throw IoError("bad number '" + field + "' at line " + std::to_string(lineno) + ": " +
                    p.string());
    return v;
  };

  std::vector<std::optional<double>> ilm_sparse, bm_sparse;
  int lineno = 1, prev_x = -1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw IoError("expected three fields at line " + std::to_string(lineno) + ": " + p.string());
    int x = -1;
    const std::string xs = line.substr(0, c1);
    const auto xres = std::from_chars(xs.data(), xs.data() + xs.size(), x);
    if (xres.ec != std::errc{} || xres.ptr != xs.data() + xs.size() || x < 0)
      throw IoError("bad column index '" + xs + "' at line " + std::to_string(lineno) + ": " +
                    p.string());
    if (x <= prev_x)
      throw IoError("column indices must be strictly increasing at line " +
                    std::to_string(lineno) + ": " + p.string());
    prev_x = x;
    ilm_sparse.resize(std::size_t(x) + 1);
    bm_sparse.resize(std::size_t(x) + 1);
    ilm_sparse[std::size_t(x)] = parse_field(line.substr(c1 + 1, c2 - c1 - 1), lineno);
    bm_sparse[std::size_t(x)] = parse_field(line.substr(c2 + 1), lineno);
  }
  if (ilm_sparse.empty()) throw IoError("curves CSV has no data rows: " + p.string());

  const int w = int(ilm_sparse.size());
  LayerCurve ilm{w, {}}, bm{w, {}};
  try {
    ilm.rows = fill_curve_gaps(ilm_sparse);
    bm.rows = fill_curve_gaps(bm_sparse);
  } catch (const ValidationError& e) {
    throw IoError(std::string(e.what()) + ": " + p.string());
  }
  return {ilm, bm};
}

// ---- JSON documents ----

inline void write_json(const std::filesystem::path& p, const ordered_json& j) {
  auto f = detail::open_out(p, std::ios::out);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("short write: " + p.string());
}

inline ordered_json read_json(const std::filesystem::path& p) {
  auto f = detail::open_in(p, std::ios::in);
  ordered_json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad JSON in " + p.string() + ": " + e.what());
  }
  return j;
}

inline ordered_json corner_json(const std::optional<PixelPoint>& c) {
  if (!c) return nullptr;
  return ordered_json::array({c->x, c->y});
}

inline ordered_json provenance_json(const RefineOutcome& out, const RefineConfig& cfg) {
  ordered_json j;
  j["kind"] = "refine_provenance";
  j["strategy"] = int(cfg.strategy);
  j["tolerance_px"] = cfg.tolerance_px;
  j["w_left"] = out.w_left;
  j["w_right"] = out.w_right;
  j["degenerate"] = out.degenerate;
  j["corners"]["top_left"] = corner_json(out.corners.top_left);
  j["corners"]["top_right"] = corner_json(out.corners.top_right);
  j["corners"]["bottom_left"] = corner_json(out.corners.bottom_left);
  j["corners"]["bottom_right"] = corner_json(out.corners.bottom_right);
  j["notes"] = out.notes;
  return j;
}

inline const char* rate_mode_name(RateMode m) {
  return m == RateMode::GtNormalized ? "gt_normalized" : "pred_normalized";
}

inline ordered_json aggregate_json(const AggregateReport& agg) {
  ordered_json j;
  for (auto [name, st] : {std::pair<const char*, Stat>{"dsc", agg.dsc},
                          {"iou", agg.iou},
                          {"fnr", agg.fnr},
                          {"fpr", agg.fpr}}) {
    j[name]["mean"] = st.mean;
    j[name]["std"] = st.stddev;
  }
  return j;
}

inline ordered_json report_json(const AggregateReport& agg, const std::vector<FrameMetrics>& frames) {
  ordered_json j;
  j["mode"] = rate_mode_name(agg.mode);
  j["exclude_empty_gt"] = agg.exclude_empty_gt;
  j["n"] = agg.frames;
  ordered_json per = ordered_json::array();
  for (const auto& f : frames) {
    ordered_json r;
    r["id"] = f.id;
    r["dsc"] = f.metrics.dsc;
    r["iou"] = f.metrics.iou;
    r["fnr"] = f.metrics.fnr;
    r["fpr"] = f.metrics.fpr;
    per.push_back(std::move(r));
  }
  j["frames"] = std::move(per);
  j["aggregate"] = aggregate_json(agg);
  return j;
}

// Percentages appear only in this text rendering; JSON keeps raw fractions.
inline std::string format_report_text(const AggregateReport& agg) {
  char buf[96];
  std::ostringstream out;
  out << "frames " << agg.frames << " (" << rate_mode_name(agg.mode)
      << (agg.exclude_empty_gt ? ", empty gt excluded" : "") << ")\n";
  for (auto [name, st] : {std::pair<const char*, Stat>{"dsc", agg.dsc},
                          {"iou", agg.iou},
                          {"fnr", agg.fnr},
                          {"fpr", agg.fpr}}) {
    std::snprintf(buf, sizeof buf, "%-4s %6.2f %% (+/- %.2f)\n", name, st.mean * 100.0,
                  st.stddev * 100.0);
    out << buf;
  }
  return out.str();
}

}  // namespace ea
