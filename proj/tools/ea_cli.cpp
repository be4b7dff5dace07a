// Command line front end. Subcommands mirror the pipeline stages:
//   synth   write a synthetic suite
//   refine  layer-guided refinement with a frozen model, per frame
//   tta     sequential single-pass adaptation over a suite
//   eval    overlap metrics for stored masks
//   report  merge metric documents into one table
// Exit codes: 0 success, 2 invalid arguments or inconsistent inputs, 4
// unreadable or malformed files.

#include <algorithm>
#include <array>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ea/errors.hpp"
#include "ea/io.hpp"
#include "ea/phantom.hpp"
#include "ea/pipeline.hpp"
#include "ea/refine.hpp"
#include "ea/surrogate.hpp"
#include "ea/tta.hpp"

namespace {

ea::RefineConfig refine_config(int strategy, double tol) {
  ea::RefineConfig cfg;
  switch (strategy) {
    case 1: cfg.strategy = ea::BoundaryStrategy::Outer; break;
    case 2: cfg.strategy = ea::BoundaryStrategy::Inner; break;
    case 3: cfg.strategy = ea::BoundaryStrategy::Averaged; break;
    default: throw ea::ValidationError("strategy must be 1, 2 or 3");
  }
  if (!(tol >= 0.0)) throw ea::ValidationError("tolerance must be non-negative");
  cfg.tolerance_px = tol;
  return cfg;
}

ea::LogisticPixelModel make_model(const std::vector<double>& weights) {
  if (weights.empty()) return ea::LogisticPixelModel::pretrained_default();
  if (weights.size() != 3) throw ea::ValidationError("--weights needs exactly three values");
  return ea::LogisticPixelModel({weights[0], weights[1], weights[2]});
}

std::vector<ea::phantom::IssueFlags> issue_schedule(const std::string& issues,
                                                    ea::phantom::PhantomSpec& spec) {
  if (issues == "none" || issues.empty()) return {};
  if (issues == "cycle") {
    std::vector<ea::phantom::IssueFlags> sched(4);
    sched[0].bm_elevation = true;
    sched[1].top_undershoot = true;
    sched[2].bottom_deviation = true;
    sched[3].dx_skew = true;
    return sched;
  }
  ea::phantom::IssueFlags flags;
  std::size_t pos = 0;
  while (pos <= issues.size()) {
    const std::size_t comma = std::min(issues.find(',', pos), issues.size());
    const std::string name = issues.substr(pos, comma - pos);
    if (!ea::phantom::set_issue(flags, name))
      throw ea::ValidationError("unknown issue '" + name +
                                "' (bm_elevation, top_undershoot, bottom_deviation, dx_skew, "
                                "none, cycle)");
    pos = comma + 1;
  }
  spec.issues = flags;
  return {};
}

void emit(const ea::ordered_json& j, const std::string& out_file) {
  if (out_file.empty())
    std::cout << j.dump(2) << "\n";
  else
    ea::write_json(out_file, j);
}

void print_run_metrics(const ea::DirRunResult& r) {
  if (r.metrics) std::cout << ea::format_report_text(*r.metrics);
  if (r.post_shift)
    std::cout << "post-shift dsc " << ea::detail::fmt_double(r.post_shift->dsc.mean * 100.0)
              << " % over " << r.post_shift->frames << " frames\n";
}

int cmd_synth(const std::string& out_dir, int count, std::uint64_t seed, int height, int width,
              const std::string& issues, std::optional<int> shift_at, double noise) {
  ea::phantom::PhantomSpec spec;
  spec.height = height;
  spec.width = width;
  spec.seed = seed;
  spec.noise_level = noise;
  spec.shift_at = shift_at;
  const auto schedule = issue_schedule(issues, spec);
  const auto manifest = ea::generate_suite(spec, count, schedule, out_dir);
  std::cout << "wrote " << count << " frames, manifest " << manifest.string() << "\n";
  return 0;
}

int cmd_refine(const std::string& frames, const std::string& oriseg_file,
               const std::string& residual_file, const std::string& layers, const std::string& out,
               int strategy, double tol, double threshold, const std::vector<double>& weights,
               bool from_oriseg) {
  const ea::RefineConfig cfg = refine_config(strategy, tol);
  ea::SurrogateConfig sur;
  sur.threshold = threshold;

  if (!oriseg_file.empty() || !residual_file.empty()) {
    if (!oriseg_file.empty() && !residual_file.empty())
      throw ea::ValidationError("--oriseg and --residual are mutually exclusive");
    if (layers.empty()) throw ea::ValidationError("single-frame refinement needs --layers");
    ea::BinaryMask oriseg;
    if (!oriseg_file.empty()) {
      oriseg = ea::read_pgm(oriseg_file);
    } else {
      oriseg = ea::residual_to_oriseg(ea::read_grid(residual_file), sur);
    }
    auto [ilm, bm] = ea::read_curves_csv(layers);
    const ea::RefineOutcome outcome = ea::refine(oriseg, ilm, bm, cfg, oriseg.height, oriseg.width);
    const std::string prefix = out.empty() ? "refined" : out;
    ea::write_pgm(prefix + "_pred.pgm", outcome.mask);
    ea::write_json(prefix + "_prov.json", ea::provenance_json(outcome, cfg));
    std::cout << "wrote " << prefix << "_pred.pgm"
              << (outcome.degenerate ? " (degenerate)" : "") << "\n";
    return 0;
  }
  if (frames.empty())
    throw ea::ValidationError("give --frames, or --oriseg/--residual with --layers");

  const ea::LogisticPixelModel model = make_model(weights);
  const std::string out_dir = out.empty() ? frames : out;
  const ea::DirRunResult r = ea::refine_dir(frames, out_dir, model, cfg, sur, from_oriseg);
  std::cout << "refined " << r.frames.size() << " frames into " << out_dir << "\n";
  print_run_metrics(r);
  return 0;
}

int cmd_tta(const std::string& frames, const std::string& out, int strategy, double tol,
            double threshold, double lr, bool sweep, const std::vector<double>& weights) {
  const ea::RefineConfig cfg = refine_config(strategy, tol);
  ea::SurrogateConfig sur;
  sur.threshold = threshold;
  const std::string out_dir = out.empty() ? frames : out;

  if (sweep) {
    const auto files = ea::discover_frames(frames);
    std::vector<ea::Frame> loaded;
    std::vector<std::optional<ea::BinaryMask>> gt;
    for (const auto& ff : files) {
      loaded.push_back(ea::load_frame(ff));
      gt.push_back(ff.gt ? std::optional<ea::BinaryMask>(ea::read_pgm(*ff.gt)) : std::nullopt);
    }
    const auto shift_at = ea::detail::manifest_shift_at(frames);

    ea::ordered_json entries = ea::ordered_json::array();
    std::printf("%10s %8s %8s %8s %8s\n", "lr", "dsc", "fnr", "fpr", "post-dsc");
    for (const double swept_lr : {0.0, 1e-5, 5e-5, 1e-4, 5e-4}) {
      ea::LogisticPixelModel model = make_model(weights);
      ea::TtaConfig tta;
      tta.lr = swept_lr;
      tta.update_enabled = swept_lr != 0.0;
      const auto results = ea::run_online(model, loaded, cfg, sur, tta);

      std::vector<ea::FrameMetrics> fm, post;
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (!gt[i]) continue;
        ea::FrameMetrics m;
        m.id = files[i].id;
        m.counts = ea::confusion(results[i].outcome.mask, *gt[i]);
        m.metrics = ea::metric_set(m.counts);
        if (shift_at && files[i].index >= *shift_at) post.push_back(m);
        fm.push_back(std::move(m));
      }
      if (fm.empty()) throw ea::ValidationError("--lr-sweep needs ground truth masks");
      const ea::AggregateReport agg = ea::aggregate(fm, false);
      ea::ordered_json e;
      e["lr"] = swept_lr;
      e["metrics"] = ea::run_metrics_json(agg);
      if (!post.empty()) e["post_shift_metrics"] = ea::run_metrics_json(ea::aggregate(post, false));
      std::printf("%10s %8.2f %8.2f %8.2f %8s\n", ea::detail::fmt_double(swept_lr).c_str(),
                  agg.dsc.mean * 100.0, agg.fnr.mean * 100.0, agg.fpr.mean * 100.0,
                  post.empty()
                      ? "-"
                      : ea::detail::fmt_double(ea::aggregate(post, false).dsc.mean * 100.0).c_str());
      entries.push_back(std::move(e));
    }
    ea::ordered_json j;
    j["kind"] = "lr_sweep";
    j["strategy"] = strategy;
    j["frames"] = loaded.size();
    j["entries"] = std::move(entries);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    ea::write_json(std::filesystem::path(out_dir) / "sweep.json", j);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "sweep.json").string() << "\n";
    return 0;
  }

  if (lr != 0.0 && !(lr > 0.0 && lr < 1.0))
    throw ea::ValidationError("--lr must be 0 (frozen model) or inside (0,1)");
  ea::TtaConfig tta;
  tta.lr = lr;
  tta.update_enabled = lr != 0.0;

  ea::LogisticPixelModel model = make_model(weights);
  const ea::DirRunResult r = ea::tta_dir(frames, out_dir, model, cfg, sur, tta);
  const ea::ordered_json summary = ea::tta_summary_json(r, cfg, tta, model.weights());
  ea::write_json(std::filesystem::path(out_dir) / "summary.json", summary);
  std::cout << "adapted over " << r.frames.size() << " frames, summary "
            << (std::filesystem::path(out_dir) / "summary.json").string() << "\n";
  print_run_metrics(r);
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& gt, const std::string& pred_suffix,
             const std::string& gt_suffix, const std::string& mode_name, bool exclude_empty_gt,
             const std::string& format, const std::string& out_file) {
  const ea::RateMode mode = [&] {
    if (mode_name == "gt") return ea::RateMode::GtNormalized;
    if (mode_name == "pred") return ea::RateMode::PredNormalized;
    throw ea::ValidationError("--mode must be gt or pred");
  }();
  if (format != "text" && format != "json")
    throw ea::ValidationError("--format must be text or json");

  std::vector<ea::EvalPair> pairs;
  if (std::filesystem::is_regular_file(pred)) {
    if (!std::filesystem::is_regular_file(gt))
      throw ea::ValidationError("--pred is a file, so --gt must be a file too");
    pairs.push_back({std::filesystem::path(pred).stem().string(), pred, gt});
  } else {
    pairs = ea::discover_eval_pairs(pred, gt, pred_suffix, gt_suffix);
  }
  const std::vector<ea::FrameMetrics> fm = ea::evaluate_pairs(pairs, mode);
  const ea::AggregateReport agg = ea::aggregate(fm, exclude_empty_gt);
  if (format == "text") {
    std::cout << ea::format_report_text(agg);
    if (!out_file.empty()) ea::write_json(out_file, ea::report_json(agg, fm));
  } else {
    emit(ea::report_json(agg, fm), out_file);
  }
  return 0;
}

struct ReportRow {
  std::string label;
  std::optional<double> lr;
  int n = 0;
  double mean[4] = {0, 0, 0, 0};  // dsc, iou, fnr, fpr
  double stddev[4] = {0, 0, 0, 0};
};

constexpr const char* kMetricNames[4] = {"dsc", "iou", "fnr", "fpr"};

// stats: {"dsc": {"mean": ..., "std": ...}, ...}
void fill_row_stats(ReportRow& row, const ea::ordered_json& stats, const std::string& source) {
  for (int k = 0; k < 4; ++k) {
    if (!stats.contains(kMetricNames[k]))
      throw ea::ValidationError(source + " lacks a " + kMetricNames[k] + " entry");
    row.mean[k] = stats.at(kMetricNames[k]).at("mean").get<double>();
    row.stddev[k] = stats.at(kMetricNames[k]).at("std").get<double>();
  }
}

// Orders rows the way the learning rate tables read: baselines without a
// learning rate first, then increasing lr.
int cmd_report(const std::vector<std::string>& inputs, const std::string& format,
               const std::string& out_file) {
  if (format != "text" && format != "json")
    throw ea::ValidationError("--format must be text or json");
  std::vector<ReportRow> rows;
  for (const auto& in : inputs) {
    const ea::ordered_json j = ea::read_json(in);
    const std::string label = std::filesystem::path(in).stem().string();
    if (j.is_object() && j.contains("aggregate")) {
      ReportRow row;
      row.label = label;
      row.n = j.at("n").get<int>();
      fill_row_stats(row, j.at("aggregate"), in);
      rows.push_back(std::move(row));
    } else if (j.is_object() && j.value("kind", "") == "tta_run") {
      if (!j.contains("metrics"))
        throw ea::ValidationError(in + " has no metrics section (run on a suite with ground truth)");
      ReportRow row;
      row.label = label;
      row.lr = j.at("lr").get<double>();
      row.n = j.at("metrics").at("n").get<int>();
      fill_row_stats(row, j.at("metrics"), in);
      rows.push_back(std::move(row));
    } else if (j.is_object() && j.value("kind", "") == "lr_sweep") {
      for (const auto& e : j.at("entries")) {
        ReportRow row;
        row.lr = e.at("lr").get<double>();
        row.label = label + " lr=" + ea::detail::fmt_double(*row.lr);
        row.n = e.at("metrics").at("n").get<int>();
        fill_row_stats(row, e.at("metrics"), in);
        rows.push_back(std::move(row));
      }
    } else {
      throw ea::ValidationError(in + " is not a metrics report, adaptation summary or sweep");
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.lr.has_value() != b.lr.has_value()) return !a.lr.has_value();
    if (a.lr && b.lr) return *a.lr < *b.lr;
    return false;
  });

  // FNR/FPR direction across increasing lr, when at least two lr rows exist
  std::optional<std::string> trend[2];
  {
    std::vector<const ReportRow*> lr_rows;
    for (const auto& r : rows)
      if (r.lr) lr_rows.push_back(&r);
    if (lr_rows.size() >= 2) {
      for (int k = 0; k < 2; ++k) {
        const int m = 2 + k;  // fnr, fpr
        bool down = true, up = true;
        for (std::size_t i = 1; i < lr_rows.size(); ++i) {
          const double d = lr_rows[i]->mean[m] - lr_rows[i - 1]->mean[m];
          if (d > 0) down = false;
          if (d < 0) up = false;
        }
        trend[k] = down && up ? "flat" : down ? "decreasing" : up ? "increasing" : "mixed";
      }
    }
  }

  ea::ordered_json j;
  j["kind"] = "comparison";
  j["rows"] = ea::ordered_json::array();
  for (const auto& r : rows) {
    ea::ordered_json row;
    row["label"] = r.label;
    row["lr"] = r.lr ? ea::ordered_json(*r.lr) : ea::ordered_json(nullptr);
    row["n"] = r.n;
    for (int k = 0; k < 4; ++k) {
      row[kMetricNames[k]]["mean"] = r.mean[k];
      row[kMetricNames[k]]["std"] = r.stddev[k];
    }
    j["rows"].push_back(std::move(row));
  }
  if (trend[0]) {
    j["trend_with_increasing_lr"]["fnr"] = *trend[0];
    j["trend_with_increasing_lr"]["fpr"] = *trend[1];
  } else {
    j["trend_with_increasing_lr"] = nullptr;
  }

  if (format == "text") {
    std::printf("%-28s %10s %6s %16s %16s %16s %16s\n", "label", "lr", "n", "dsc", "iou", "fnr",
                "fpr");
    for (const auto& r : rows) {
      char cell[4][24];
      for (int k = 0; k < 4; ++k)
        std::snprintf(cell[k], sizeof cell[k], "%6.2f +/- %5.2f", r.mean[k] * 100.0,
                      r.stddev[k] * 100.0);
      std::printf("%-28s %10s %6d %16s %16s %16s %16s\n", r.label.c_str(),
                  r.lr ? ea::detail::fmt_double(*r.lr).c_str() : "-", r.n, cell[0], cell[1],
                  cell[2], cell[3]);
    }
    if (trend[0])
      std::printf("trend with increasing lr: fnr %s, fpr %s\n", trend[0]->c_str(),
                  trend[1]->c_str());
    if (!out_file.empty()) ea::write_json(out_file, j);
  } else {
    emit(j, out_file);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-guided refinement and online adaptation for edema area masks"};
  app.require_subcommand(1);
  int rc = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic suite");
  std::string sy_out;
  int sy_count = 0, sy_height = 128, sy_width = 192;
  std::uint64_t sy_seed = 0;
  std::string sy_issues = "none";
  double sy_noise = 1.0;
  int sy_shift = -1;
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->add_option("--count", sy_count, "number of frames")->required();
  synth->add_option("--seed", sy_seed, "suite seed");
  synth->add_option("--height", sy_height, "frame height");
  synth->add_option("--width", sy_width, "frame width");
  synth->add_option("--issues", sy_issues,
                    "issue injection: none, cycle, or comma-joined issue names");
  synth->add_option("--shift-at", sy_shift, "intensity shift from this frame index on");
  synth->add_option("--noise", sy_noise, "image noise scale");
  synth->callback([&] {
    rc = cmd_synth(sy_out, sy_count, sy_seed, sy_height, sy_width, sy_issues,
                   sy_shift < 0 ? std::nullopt : std::optional<int>(sy_shift), sy_noise);
  });

  // refine
  auto* refine = app.add_subcommand("refine", "refine coarse masks against layer curves");
  std::string rf_frames, rf_oriseg, rf_residual, rf_layers, rf_out;
  int rf_strategy = 1;
  double rf_tol = 2.0, rf_threshold = 0.5;
  std::vector<double> rf_weights;
  bool rf_from_oriseg = false;
  refine->add_option("--frames", rf_frames, "suite directory");
  refine->add_option("--oriseg", rf_oriseg, "single coarse mask PGM");
  refine->add_option("--residual", rf_residual, "single residual grid, thresholded directly");
  refine->add_option("--layers", rf_layers, "layer curves CSV for --oriseg/--residual");
  refine->add_option("--out", rf_out, "output directory, or prefix in single-frame mode");
  refine->add_option("--strategy", rf_strategy, "boundary strategy 1, 2 or 3");
  refine->add_option("--tol", rf_tol, "curve contact tolerance in rows");
  refine->add_option("--threshold", rf_threshold, "probability threshold");
  refine->add_option("--weights", rf_weights, "model weights w0 w1 w2")->expected(3);
  refine->add_flag("--from-oriseg", rf_from_oriseg, "refine the suite's stored coarse masks");
  refine->callback([&] {
    rc = cmd_refine(rf_frames, rf_oriseg, rf_residual, rf_layers, rf_out, rf_strategy, rf_tol,
                    rf_threshold, rf_weights, rf_from_oriseg);
  });

  // tta
  auto* tta = app.add_subcommand("tta", "single-pass online adaptation over a suite");
  std::string tt_frames, tt_out;
  int tt_strategy = 1;
  double tt_tol = 2.0, tt_threshold = 0.5, tt_lr = 5e-5;
  bool tt_sweep = false;
  std::vector<double> tt_weights;
  tta->add_option("--frames", tt_frames, "suite directory")->required();
  tta->add_option("--out", tt_out, "output directory");
  tta->add_option("--strategy", tt_strategy, "boundary strategy 1, 2 or 3");
  tta->add_option("--tol", tt_tol, "curve contact tolerance in rows");
  tta->add_option("--threshold", tt_threshold, "probability threshold");
  tta->add_option("--lr", tt_lr, "learning rate, 0 freezes the model");
  tta->add_flag("--lr-sweep", tt_sweep, "compare the reference learning rates and 0");
  tta->add_option("--weights", tt_weights, "model weights w0 w1 w2")->expected(3);
  tta->callback([&] {
    rc = cmd_tta(tt_frames, tt_out, tt_strategy, tt_tol, tt_threshold, tt_lr, tt_sweep, tt_weights);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score stored masks against ground truth");
  std::string ev_pred, ev_gt, ev_pred_suffix = "_pred.pgm", ev_gt_suffix = "_gt.pgm";
  std::string ev_mode = "gt", ev_format = "text", ev_out;
  bool ev_exclude = false;
  eval->add_option("--pred", ev_pred, "prediction mask file or directory")->required();
  eval->add_option("--gt", ev_gt, "ground truth mask file or directory")->required();
  eval->add_option("--pred-suffix", ev_pred_suffix, "prediction filename suffix");
  eval->add_option("--gt-suffix", ev_gt_suffix, "ground truth filename suffix");
  eval->add_option("--mode", ev_mode, "false positive normalization: gt or pred");
  eval->add_flag("--exclude-empty-gt", ev_exclude, "drop frames with empty ground truth");
  eval->add_option("--format", ev_format, "text or json");
  eval->add_option("--out", ev_out, "write the JSON report here");
  eval->callback([&] {
    rc = cmd_eval(ev_pred, ev_gt, ev_pred_suffix, ev_gt_suffix, ev_mode, ev_exclude, ev_format,
                  ev_out);
  });

  // report
  auto* report = app.add_subcommand("report", "merge metric documents into a table");
  std::vector<std::string> rp_inputs;
  std::string rp_format = "text", rp_out;
  report->add_option("inputs", rp_inputs, "metric reports or adaptation summaries")->required();
  report->add_option("--format", rp_format, "text or json");
  report->add_option("--out", rp_out, "write the combined JSON here");
  report->callback([&] { rc = cmd_report(rp_inputs, rp_format, rp_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ea::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ea::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ea::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
