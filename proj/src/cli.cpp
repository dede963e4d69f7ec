#include "stcrf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stcrf/config.hpp"
#include "stcrf/data.hpp"
#include "stcrf/errors.hpp"
#include "stcrf/evaluation.hpp"
#include "stcrf/intention.hpp"
#include "stcrf/model.hpp"
#include "stcrf/training.hpp"

namespace stcrf {

namespace {

struct GlobalOpts {
  int seed = 1;
  bool verbose = false;
  std::string out_dir = ".";
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  if (name.find('/') != std::string::npos || g.out_dir == ".") return name;
  return g.out_dir + "/" + name;
}

std::vector<SceneWindow> windows_from_tracks(const std::vector<std::string>& paths,
                                             double frame_interval, double scale, int l_obs,
                                             int l_pred, int stride) {
  std::vector<SceneWindow> all;
  for (const std::string& p : paths) {
    RawTrackTable table = load_track_file(p, frame_interval, scale);
    std::vector<SceneWindow> w = make_windows(table, l_obs, l_pred, stride);
    all.insert(all.end(), w.begin(), w.end());
  }
  return all;
}

// Dataset config: frame_interval, scale, stride, and split keys
// (`train`, `val`, `test`, or a flat `tracks` list of raw track files).
std::vector<SceneWindow> windows_from_dataset_cfg(const KeyValueConfig& cfg,
                                                  const std::string& split, int l_obs,
                                                  int l_pred) {
  const double frame_interval = cfg.get_double("frame_interval", 0.4);
  const double scale = cfg.get_double("scale", 1.0);
  const int stride = cfg.get_int("stride", 1);
  std::vector<std::string> paths = cfg.get_list(split);
  if (paths.empty() && split != "tracks") paths = cfg.get_list("tracks");
  if (paths.empty()) {
    throw Error("dataset config has no `" + split + "` or `tracks` entries");
  }
  return windows_from_tracks(paths, frame_interval, scale, l_obs, l_pred, stride);
}

std::vector<SceneWindow> load_eval_windows(const std::string& manifest,
                                           const std::string& dataset_cfg,
                                           const std::string& split, int l_obs, int l_pred) {
  if (!manifest.empty()) return read_window_manifest(manifest);
  KeyValueConfig cfg = KeyValueConfig::load(dataset_cfg);
  return windows_from_dataset_cfg(cfg, split, l_obs, l_pred);
}

LabelerConfig labeler_from_cli(double d_lat, double d_lon, double delta_t, double v_ref,
                               double frame_interval) {
  LabelerConfig lc;
  lc.d_lat = d_lat;
  lc.d_lon = d_lon;
  lc.delta_t = delta_t;
  lc.v_ref = v_ref;
  lc.frame_interval = frame_interval;
  return lc;
}

int run_prepare(const GlobalOpts& g, const std::vector<std::string>& tracks,
                const std::string& dataset_cfg, double frame_interval, double scale,
                int l_obs, int l_pred, int stride, const std::string& out) {
  std::vector<SceneWindow> windows;
  if (!tracks.empty()) {
    windows = windows_from_tracks(tracks, frame_interval, scale, l_obs, l_pred, stride);
  } else if (!dataset_cfg.empty()) {
    windows = windows_from_dataset_cfg(KeyValueConfig::load(dataset_cfg), "tracks", l_obs, l_pred);
  } else {
    throw IoError("prepare: need --tracks or --dataset");
  }
  write_window_manifest(windows, out_path(g, out));
  std::cout << "wrote " << windows.size() << " windows to " << out_path(g, out) << '\n';
  return 0;
}

int run_label(const GlobalOpts& g, const std::string& manifest, const LabelerConfig& lc,
              const std::string& out) {
  std::vector<SceneWindow> windows = read_window_manifest(manifest);
  std::ofstream os(out_path(g, out));
  if (!os) throw IoError("cannot write labels: " + out_path(g, out));
  os << "# stcrf label manifest v1\n";
  for (std::size_t w = 0; w < windows.size(); ++w) {
    IntentionLabels labels = label_window(windows[w], lc);
    const int l = static_cast<int>(labels.alpha.size());
    const int n = windows[w].num_pedestrians();
    os << "labels " << w << ' ' << n << ' ' << l << '\n';
    for (int t = 0; t < l; ++t) {
      for (int i = 0; i < n; ++i) {
        os << labels.alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] << ' '
           << labels.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
           << (i + 1 == n ? '\n' : ' ');
      }
    }
  }
  std::cout << "labeled " << windows.size() << " windows\n";
  return 0;
}

int run_stats(const std::string& manifest, const std::string& dataset_cfg,
              const LabelerConfig& lc, const std::string& out) {
  std::vector<SceneWindow> windows = load_eval_windows(manifest, dataset_cfg, "tracks", 8, 12);
  IntentionStats stats = intention_stats(windows, lc);
  if (out.empty()) {
    write_stats_csv(stats, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write stats: " + out);
    write_stats_csv(stats, os);
  }
  return 0;
}

int run_train(const GlobalOpts& g, const std::string& config_path, const std::string& ablate,
              const std::string& out) {
  KeyValueConfig cfg = KeyValueConfig::load(config_path);
  TrainConfig tc = TrainConfig::from_config(cfg);
  if (g.seed != 1) tc.seed = static_cast<unsigned>(g.seed);
  tc.verbose = g.verbose;
  if (ablate == "no-space-crf") {
    tc.loss_weights.use_space_crf = false;
  } else if (ablate == "no-time-crf") {
    tc.loss_weights.use_time_crf = false;
  } else if (ablate != "none") {
    throw Error("--ablate must be one of none|no-space-crf|no-time-crf");
  }

  std::vector<SceneWindow> train_set, val_set;
  if (cfg.has("train_manifest")) {
    train_set = read_window_manifest(cfg.get("train_manifest"));
  } else {
    train_set = windows_from_dataset_cfg(cfg, "train", tc.model.l_obs, tc.model.l_pred);
  }
  if (cfg.has("val_manifest")) {
    val_set = read_window_manifest(cfg.get("val_manifest"));
  } else if (!cfg.get_list("val").empty()) {
    val_set = windows_from_dataset_cfg(cfg, "val", tc.model.l_obs, tc.model.l_pred);
  }

  Model model(tc.model, tc.seed);
  TrainResult res = train(model, train_set, val_set, tc, g.verbose ? &std::cerr : nullptr);
  save_checkpoint(model, tc, tc.epochs, res.history, out_path(g, out));
  std::cout << "trained " << tc.epochs << " epochs on " << train_set.size()
            << " windows; checkpoint: " << out_path(g, out) << '\n';
  return 0;
}

int run_evaluate(const std::string& checkpoint, const std::string& manifest,
                 const std::string& dataset_cfg, bool paper_literal, const std::string& out) {
  TrainConfig tc = peek_checkpoint_config(checkpoint);
  Model model(tc.model, tc.seed);
  load_checkpoint(model, checkpoint);
  std::vector<SceneWindow> windows =
      load_eval_windows(manifest, dataset_cfg, "test", tc.model.l_obs, tc.model.l_pred);
  MetricReport report = evaluate(model, windows, paper_literal);
  if (out.empty()) {
    write_metric_report_csv(report, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write report: " + out);
    write_metric_report_csv(report, os);
  }
  std::cerr << "ade " << report.ade << " fde " << report.fde << " over " << report.window_count
            << " windows\n";
  return 0;
}

int run_ablate(const GlobalOpts& g, const std::string& config_path, const std::string& out) {
  KeyValueConfig cfg = KeyValueConfig::load(config_path);
  TrainConfig base = TrainConfig::from_config(cfg);
  if (g.seed != 1) base.seed = static_cast<unsigned>(g.seed);

  std::vector<SceneWindow> train_set;
  if (cfg.has("train_manifest")) {
    train_set = read_window_manifest(cfg.get("train_manifest"));
  } else {
    train_set = windows_from_dataset_cfg(cfg, "train", base.model.l_obs, base.model.l_pred);
  }
  std::vector<SceneWindow> test_set = train_set;
  if (cfg.has("test_manifest")) {
    test_set = read_window_manifest(cfg.get("test_manifest"));
  } else if (!cfg.get_list("test").empty()) {
    test_set = windows_from_dataset_cfg(cfg, "test", base.model.l_obs, base.model.l_pred);
  }

  struct Row {
    const char* name;
    bool use_space;
    bool use_time;
  };
  const Row rows[] = {{"L_S only", true, false}, {"L_T only", false, true}, {"both", true, true}};

  std::ofstream os(out_path(g, out));
  if (!os) throw IoError("cannot write ablation csv: " + out_path(g, out));
  os << "configuration,ade,fde\n";
  for (const Row& row : rows) {
    TrainConfig tc = base;
    tc.loss_weights.use_space_crf = row.use_space;
    tc.loss_weights.use_time_crf = row.use_time;
    Model model(tc.model, tc.seed);
    train(model, train_set, {}, tc, g.verbose ? &std::cerr : nullptr);
    MetricReport report = evaluate(model, test_set);
    os << row.name << ',' << report.ade << ',' << report.fde << '\n';
    std::cerr << row.name << ": ade " << report.ade << " fde " << report.fde << '\n';
  }
  std::cout << "ablation grid written to " << out_path(g, out) << '\n';
  return 0;
}

int run_plot(const GlobalOpts& g, const std::string& checkpoint, const std::string& manifest,
             int window_index, const std::string& out) {
  std::vector<SceneWindow> windows = read_window_manifest(manifest);
  if (window_index < 0 || window_index >= static_cast<int>(windows.size())) {
    throw Error("plot: window index out of range (have " + std::to_string(windows.size()) +
                " windows)");
  }
  const SceneWindow& window = windows[static_cast<std::size_t>(window_index)];
  Tensor predicted;
  if (!checkpoint.empty()) {
    TrainConfig tc = peek_checkpoint_config(checkpoint);
    Model model(tc.model, tc.seed);
    load_checkpoint(model, checkpoint);
    predicted = model.predict(window).trajectory;
  } else {
    // no checkpoint: constant-velocity extrapolation as the drawn prediction
    const int lo = window.obs_len();
    const int lp = window.pred_len();
    const int n = window.num_pedestrians();
    predicted = Tensor({2, lp, n});
    for (int ax = 0; ax < 2; ++ax)
      for (int i = 0; i < n; ++i) {
        const double v = window.observed(ax, lo - 1, i) - window.observed(ax, lo - 2, i);
        for (int t = 0; t < lp; ++t) {
          predicted(ax, t, i) = window.observed(ax, lo - 1, i) + v * (t + 1);
        }
      }
  }
  plot_trajectories(window, predicted, out_path(g, out));
  std::cout << "wrote " << out_path(g, out) << '\n';
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"ST-CRF pedestrian trajectory predictor"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Global random seed");
  app.add_flag("--verbose", g.verbose, "Log per-epoch progress to stderr");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Build a window manifest from raw tracks");
  std::vector<std::string> tracks;
  std::string dataset_cfg, prep_out = "windows.manifest";
  double frame_interval = 0.4, scale = 1.0;
  int l_obs = 8, l_pred = 12, stride = 1;
  prepare->add_option("--tracks", tracks, "Raw track files (frame id x y per line)");
  prepare->add_option("--dataset", dataset_cfg, "Dataset config file");
  prepare->add_option("--frame-interval", frame_interval, "Seconds per frame");
  prepare->add_option("--scale", scale, "Coordinate scale factor");
  prepare->add_option("--l-obs", l_obs, "Observed frames");
  prepare->add_option("--l-pred", l_pred, "Predicted frames");
  prepare->add_option("--stride", stride, "Window stride in frames");
  prepare->add_option("--out", prep_out, "Output manifest path");

  // labeler flags shared by label/stats
  double d_lat = 0.1, d_lon = 0.2, delta_t = 0.8, v_ref = 1.0, lab_interval = 0.4;
  auto add_labeler_flags = [&](CLI::App* cmd) {
    cmd->add_option("--d-lat", d_lat, "Lateral threshold");
    cmd->add_option("--d-lon", d_lon, "Longitudinal speed margin");
    cmd->add_option("--delta-t", delta_t, "Lookahead in seconds");
    cmd->add_option("--v-ref", v_ref, "Reference speed");
    cmd->add_option("--frame-interval", lab_interval, "Seconds per frame");
  };

  auto* label = app.add_subcommand("label", "Compute intention labels for a window manifest");
  std::string label_manifest, label_out = "labels.manifest";
  label->add_option("--manifest", label_manifest, "Window manifest")->required();
  add_labeler_flags(label);
  label->add_option("--out", label_out, "Output label manifest");

  auto* stats = app.add_subcommand("stats", "Intention label statistics CSV");
  std::string stats_manifest, stats_dataset, stats_out;
  stats->add_option("--manifest", stats_manifest, "Window manifest");
  stats->add_option("--dataset", stats_dataset, "Dataset config file");
  add_labeler_flags(stats);
  stats->add_option("--out", stats_out, "Output CSV (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string train_config, ablate_flag = "none", train_out = "model.ckpt";
  train_cmd->add_option("--config", train_config, "Training config file")->required();
  train_cmd->add_option("--ablate", ablate_flag, "none|no-space-crf|no-time-crf");
  train_cmd->add_option("--out", train_out, "Checkpoint output path");

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  std::string eval_ckpt, eval_manifest, eval_dataset, eval_out;
  bool paper_literal = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Window manifest");
  eval_cmd->add_option("--dataset", eval_dataset, "Dataset config file");
  eval_cmd->add_flag("--paper-literal", paper_literal, "Normalize ADE by N only");
  eval_cmd->add_option("--out", eval_out, "Report CSV (default stdout)");

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the 3-configuration CRF-loss grid");
  std::string ablate_config, ablate_out = "ablation.csv";
  ablate_cmd->add_option("--config", ablate_config, "Training config file")->required();
  ablate_cmd->add_option("--out", ablate_out, "Combined CSV path");

  auto* plot_cmd = app.add_subcommand("plot", "Render one window as an SVG");
  std::string plot_ckpt, plot_manifest, plot_out = "window.svg";
  int plot_index = 0;
  plot_cmd->add_option("--checkpoint", plot_ckpt, "Checkpoint (optional)");
  plot_cmd->add_option("--manifest", plot_manifest, "Window manifest")->required();
  plot_cmd->add_option("--window", plot_index, "Window index");
  plot_cmd->add_option("--out", plot_out, "SVG output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) {
      return run_prepare(g, tracks, dataset_cfg, frame_interval, scale, l_obs, l_pred, stride,
                         prep_out);
    }
    const LabelerConfig lc = labeler_from_cli(d_lat, d_lon, delta_t, v_ref, lab_interval);
    if (label->parsed()) return run_label(g, label_manifest, lc, label_out);
    if (stats->parsed()) {
      if (stats_manifest.empty() && stats_dataset.empty()) {
        std::cerr << "stats: need --manifest or --dataset\n";
        return 1;
      }
      return run_stats(stats_manifest, stats_dataset, lc, stats_out);
    }
    if (train_cmd->parsed()) return run_train(g, train_config, ablate_flag, train_out);
    if (eval_cmd->parsed()) {
      if (eval_manifest.empty() && eval_dataset.empty()) {
        std::cerr << "evaluate: need --manifest or --dataset\n";
        return 1;
      }
      return run_evaluate(eval_ckpt, eval_manifest, eval_dataset, paper_literal, eval_out);
    }
    if (ablate_cmd->parsed()) return run_ablate(g, ablate_config, ablate_out);
    if (plot_cmd->parsed()) return run_plot(g, plot_ckpt, plot_manifest, plot_index, plot_out);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const MalformedLine& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace stcrf
