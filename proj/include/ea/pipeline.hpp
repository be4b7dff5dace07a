#pragma once

// File-level orchestration over suite directories. A suite holds one frame
// per index:
//   NNN.f32 / NNN.json            image grid and shape sidecar
//   NNN_residual.f32 / .json      generator residual
//   NNN_layers.csv                observed layer curves
//   NNN_gt.pgm                    ground truth mask (synthetic suites)
//   NNN_oriseg.pgm                injected coarse mask (synthetic suites)
// plus manifest.json describing how the suite was generated. Processing adds
// NNN_pred.pgm and NNN_prov.json, and adaptation runs add summary.json.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ea/errors.hpp"
#include "ea/io.hpp"
#include "ea/metrics.hpp"
#include "ea/phantom.hpp"
#include "ea/refine.hpp"
#include "ea/surrogate.hpp"
#include "ea/tta.hpp"

namespace ea {

inline std::string frame_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return buf;
}

struct FrameFiles {
  int index = 0;
  std::string id;
  std::filesystem::path image;
  std::filesystem::path residual;
  std::filesystem::path layers;
  std::optional<std::filesystem::path> gt;
  std::optional<std::filesystem::path> oriseg;
};

inline std::vector<FrameFiles> discover_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<FrameFiles> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".f32") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || stem.size() > 9 ||
        stem.find_first_not_of("0123456789") != std::string::npos)
      continue;
    FrameFiles ff;
    ff.index = std::stoi(stem);
    ff.id = stem;
    ff.image = entry.path();
    ff.residual = dir / (stem + "_residual.f32");
    ff.layers = dir / (stem + "_layers.csv");
    if (!std::filesystem::exists(ff.residual))
      throw IoError("frame " + stem + " is missing its residual grid: " + ff.residual.string());
    if (!std::filesystem::exists(ff.layers))
      throw IoError("frame " + stem + " is missing its layer curves: " + ff.layers.string());
    if (auto p = dir / (stem + "_gt.pgm"); std::filesystem::exists(p)) ff.gt = p;
    if (auto p = dir / (stem + "_oriseg.pgm"); std::filesystem::exists(p)) ff.oriseg = p;
    out.push_back(std::move(ff));
  }
  if (out.empty()) throw IoError("no frames found in " + dir.string());
  std::sort(out.begin(), out.end(),
            [](const FrameFiles& a, const FrameFiles& b) { return a.index < b.index; });
  return out;
}

inline Frame load_frame(const FrameFiles& ff) {
  Frame f;
  f.image = read_grid(ff.image);
  f.residual = read_grid(ff.residual);
  if (f.residual.height != f.image.height || f.residual.width != f.image.width)
    throw DimensionMismatch(f.residual.height, f.residual.width, f.image.height, f.image.width);
  auto [ilm, bm] = read_curves_csv(ff.layers);
  if (ilm.width != f.image.width) throw WidthMismatch(ilm.width, f.image.width);
  f.ilm = std::move(ilm);
  f.bm = std::move(bm);
  return f;
}

// ---- suite generation ----

// schedule: per-frame issue flags, cycled when shorter than count; empty
// means every frame uses spec.issues.
inline std::filesystem::path generate_suite(const phantom::PhantomSpec& spec, int count,
                                            const std::vector<phantom::IssueFlags>& schedule,
                                            const std::filesystem::path& out_dir) {
  if (count < 1) throw ValidationError("suite needs at least one frame");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ordered_json frames = ordered_json::array();
  for (int i = 0; i < count; ++i) {
    phantom::PhantomSpec fs = spec;
    if (!schedule.empty()) fs.issues = schedule[std::size_t(i) % schedule.size()];
    const phantom::PhantomFrame frame = [&] {
      try {
        return phantom::generate(fs, std::uint64_t(i));
      } catch (const SpecInfeasible& e) {
        throw SpecInfeasible("frame " + std::to_string(i) + ": " + e.what());
      }
    }();
    const std::string id = frame_id(i);
    write_grid(out_dir / (id + ".f32"), frame.image);
    write_grid(out_dir / (id + "_residual.f32"), frame.residual);
    write_curves_csv(out_dir / (id + "_layers.csv"), frame.ilm_obs, frame.bm_obs);
    write_pgm(out_dir / (id + "_gt.pgm"), frame.ea_gt);
    write_pgm(out_dir / (id + "_oriseg.pgm"), frame.oriseg_seed);

    ordered_json fj;
    fj["index"] = i;
    fj["flags"] = frame.issues.names();
    fj["shifted"] = frame.shifted;
    fj["files"]["image"] = id + ".f32";
    fj["files"]["residual"] = id + "_residual.f32";
    fj["files"]["layers"] = id + "_layers.csv";
    fj["files"]["gt"] = id + "_gt.pgm";
    fj["files"]["oriseg"] = id + "_oriseg.pgm";
    frames.push_back(std::move(fj));
  }

  ordered_json m;
  m["spec"]["height"] = spec.height;
  m["spec"]["width"] = spec.width;
  m["spec"]["seed"] = spec.seed;
  m["spec"]["edema_span"] = ordered_json::array({spec.edema_x0, spec.edema_x1});
  m["spec"]["noise_level"] = spec.noise_level;
  m["spec"]["shift_at"] = spec.shift_at ? ordered_json(*spec.shift_at) : ordered_json(nullptr);
  m["count"] = count;
  m["frames"] = std::move(frames);
  const auto manifest = out_dir / "manifest.json";
  write_json(manifest, m);
  return manifest;
}

// ---- directory runs ----

struct DirRunResult {
  std::vector<std::string> ids;
  std::vector<FrameResult> frames;
  std::vector<FrameMetrics> frame_metrics;       // frames with ground truth only
  std::optional<AggregateReport> metrics;        // absent without any ground truth
  std::optional<AggregateReport> post_shift;     // set when the manifest declares a shift
};

namespace detail {

inline void write_frame_outputs(const std::filesystem::path& out_dir, const std::string& id,
                                const RefineOutcome& out, const RefineConfig& cfg) {
  write_pgm(out_dir / (id + "_pred.pgm"), out.mask);
  write_json(out_dir / (id + "_prov.json"), provenance_json(out, cfg));
}

inline std::optional<int> manifest_shift_at(const std::filesystem::path& frames_dir) {
  const auto p = frames_dir / "manifest.json";
  if (!std::filesystem::exists(p)) return std::nullopt;
  const ordered_json m = read_json(p);
  if (!m.is_object() || !m.contains("spec")) return std::nullopt;
  const auto& spec = m["spec"];
  if (!spec.is_object() || !spec.contains("shift_at") || spec["shift_at"].is_null())
    return std::nullopt;
  return spec["shift_at"].get<int>();
}

inline void attach_metrics(DirRunResult& r, const std::vector<FrameFiles>& files,
                           std::optional<int> shift_at) {
  std::vector<FrameMetrics> post;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!files[i].gt) continue;
    FrameMetrics fm;
    fm.id = files[i].id;
    fm.counts = confusion(r.frames[i].outcome.mask, read_pgm(*files[i].gt));
    fm.metrics = metric_set(fm.counts);
    if (shift_at && files[i].index >= *shift_at) post.push_back(fm);
    r.frame_metrics.push_back(std::move(fm));
  }
  if (!r.frame_metrics.empty()) r.metrics = aggregate(r.frame_metrics, false);
  if (!post.empty()) r.post_shift = aggregate(post, false);
}

}  // namespace detail

// Independent per-frame refinement with a frozen model: predict, threshold,
// refine, write. With from_oriseg the stored coarse mask replaces the model
// prediction.
inline DirRunResult refine_dir(const std::filesystem::path& frames_dir,
                               const std::filesystem::path& out_dir,
                               const TrainableSegmenter& model, const RefineConfig& refine_cfg,
                               const SurrogateConfig& surrogate_cfg, bool from_oriseg = false) {
  const auto files = discover_frames(frames_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DirRunResult r;
  for (const auto& ff : files) {
    const Frame f = load_frame(ff);
    BinaryMask oriseg;
    if (from_oriseg) {
      if (!ff.oriseg) throw IoError("frame " + ff.id + " has no stored coarse mask");
      oriseg = read_pgm(*ff.oriseg);
      if (oriseg.height != f.image.height || oriseg.width != f.image.width)
        throw DimensionMismatch(oriseg.height, oriseg.width, f.image.height, f.image.width);
    } else {
      oriseg = residual_to_oriseg(model.predict(f.image, f.residual), surrogate_cfg);
    }
    FrameResult fr;
    fr.outcome = refine(oriseg, f.ilm, f.bm, refine_cfg, f.image.height, f.image.width);
    detail::write_frame_outputs(out_dir, ff.id, fr.outcome, refine_cfg);
    r.ids.push_back(ff.id);
    r.frames.push_back(std::move(fr));
  }
  detail::attach_metrics(r, files, detail::manifest_shift_at(frames_dir));
  return r;
}

// Sequential adaptation pass over the suite in index order.
inline DirRunResult tta_dir(const std::filesystem::path& frames_dir,
                            const std::filesystem::path& out_dir, TrainableSegmenter& model,
                            const RefineConfig& refine_cfg, const SurrogateConfig& surrogate_cfg,
                            const TtaConfig& tta_cfg) {
  const auto files = discover_frames(frames_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& ff : files) frames.push_back(load_frame(ff));

  DirRunResult r;
  r.frames = run_online(model, frames, refine_cfg, surrogate_cfg, tta_cfg);
  for (std::size_t i = 0; i < files.size(); ++i) {
    detail::write_frame_outputs(out_dir, files[i].id, r.frames[i].outcome, refine_cfg);
    r.ids.push_back(files[i].id);
  }
  detail::attach_metrics(r, files, detail::manifest_shift_at(frames_dir));
  return r;
}

inline ordered_json run_metrics_json(const AggregateReport& agg) {
  ordered_json j;
  j["n"] = agg.frames;
  j.update(aggregate_json(agg));
  return j;
}

inline ordered_json tta_summary_json(const DirRunResult& r, const RefineConfig& refine_cfg,
                                     const TtaConfig& tta_cfg,
                                     const std::optional<std::array<double, 3>>& final_weights) {
  ordered_json j;
  j["kind"] = "tta_run";
  j["lr"] = tta_cfg.update_enabled ? tta_cfg.lr : 0.0;
  j["update_enabled"] = tta_cfg.update_enabled;
  j["strategy"] = int(refine_cfg.strategy);
  j["frames"] = r.frames.size();
  std::size_t updates = 0;
  ordered_json skips = ordered_json::array();
  ordered_json losses = ordered_json::array();
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    const FrameResult& fr = r.frames[i];
    if (fr.updated)
      ++updates;
    else
      skips.push_back(r.ids[i]);
    losses.push_back(fr.loss ? ordered_json(*fr.loss) : ordered_json(nullptr));
  }
  j["updates"] = updates;
  j["skips"] = std::move(skips);
  j["losses"] = std::move(losses);
  if (final_weights)
    j["final_weights"] = ordered_json::array(
        {(*final_weights)[0], (*final_weights)[1], (*final_weights)[2]});
  if (r.metrics) j["metrics"] = run_metrics_json(*r.metrics);
  if (r.post_shift) j["post_shift_metrics"] = run_metrics_json(*r.post_shift);
  return j;
}

// ---- evaluation over stored masks ----

struct EvalPair {
  std::string id;
  std::filesystem::path pred;
  std::filesystem::path gt;
};

inline std::vector<EvalPair> discover_eval_pairs(const std::filesystem::path& pred_dir,
                                                 const std::filesystem::path& gt_dir,
                                                 const std::string& pred_suffix = "_pred.pgm",
                                                 const std::string& gt_suffix = "_gt.pgm") {
  if (!std::filesystem::is_directory(pred_dir)) throw IoError("not a directory: " + pred_dir.string());
  std::vector<EvalPair> out;
  for (const auto& entry : std::filesystem::directory_iterator(pred_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= pred_suffix.size() || name.substr(name.size() - pred_suffix.size()) != pred_suffix)
      continue;
    EvalPair pr;
    pr.id = name.substr(0, name.size() - pred_suffix.size());
    pr.pred = entry.path();
    pr.gt = gt_dir / (pr.id + gt_suffix);
    if (!std::filesystem::exists(pr.gt))
      throw IoError("no ground truth for frame " + pr.id + ": " + pr.gt.string());
    out.push_back(std::move(pr));
  }
  if (out.empty()) throw IoError("no predictions matching *" + pred_suffix + " in " + pred_dir.string());
  std::sort(out.begin(), out.end(), [](const EvalPair& a, const EvalPair& b) { return a.id < b.id; });
  return out;
}

inline std::vector<FrameMetrics> evaluate_pairs(const std::vector<EvalPair>& pairs, RateMode mode) {
  std::vector<FrameMetrics> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    FrameMetrics fm;
    fm.id = pr.id;
    fm.counts = confusion(read_pgm(pr.pred), read_pgm(pr.gt));
    fm.metrics = metric_set(fm.counts, mode);
    out.push_back(std::move(fm));
  }
  return out;
}

}  // namespace ea
