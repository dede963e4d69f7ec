#include "stcrf/intention.hpp"

#include <cmath>
#include <ostream>

#include "stcrf/errors.hpp"

namespace stcrf {

int LabelerConfig::delta_frames() const {
  double ratio = delta_t / frame_interval;
  int frames = static_cast<int>(std::llround(ratio));
  if (frames < 1 || std::abs(ratio - frames) > 1e-9) {
    throw Error("delta_t must be a positive integer multiple of frame_interval");
  }
  return frames;
}

LocalTrajectory rotate_to_local(const Tensor& trajectory) {
  const int l = trajectory.dim(1);
  if (trajectory.dim(0) != 2 || l < 2) {
    throw ShapeMismatch("rotate_to_local: expected [2, L] with L >= 2");
  }

  // Initial tangent from the first to the second point; fall back to the
  // first nonzero displacement when the track starts stationary.
  double hx = 0.0, hy = 0.0;
  bool found = false;
  for (int t = 1; t < l && !found; ++t) {
    hx = trajectory(0, t) - trajectory(0, 0);
    hy = trajectory(1, t) - trajectory(1, 0);
    found = std::hypot(hx, hy) > 0.0;
  }

  LocalTrajectory local;
  if (!found) {
    hx = 1.0;
    hy = 0.0;
    local.degenerate_heading = true;
  }
  const double norm = std::hypot(hx, hy);
  const double c = hx / norm;
  const double s = hy / norm;

  local.values = Tensor({2, l});
  const double x0 = trajectory(0, 0);
  const double y0 = trajectory(1, 0);
  for (int t = 0; t < l; ++t) {
    const double dx = trajectory(0, t) - x0;
    const double dy = trajectory(1, t) - y0;
    local.values(0, t) = c * dx + s * dy;   // x': along initial heading
    local.values(1, t) = -s * dx + c * dy;  // y': lateral, left positive
  }
  return local;
}

LabelSequence label_intentions(const LocalTrajectory& local, const LabelerConfig& config) {
  const int l = local.values.dim(1);
  const int dt = config.delta_frames();
  if (l < 2) throw ShapeMismatch("label_intentions: L >= 2 required");

  LabelSequence out;
  out.alpha.assign(static_cast<std::size_t>(l), 0);
  out.beta.assign(static_cast<std::size_t>(l), 0);
  if (local.degenerate_heading) return out;

  int last_alpha = 0, last_beta = 0;
  for (int t = 0; t < l; ++t) {
    if (t + dt < l) {
      const double dy = local.values(1, t + dt) - local.values(1, t);
      const double speed = (local.values(0, t + dt) - local.values(0, t)) / config.delta_t;
      if (dy < -config.d_lat) {
        last_alpha = 2;  // turn right
      } else if (dy > config.d_lat) {
        last_alpha = 1;  // turn left
      } else {
        last_alpha = 0;
      }
      if (speed > config.v_ref * (1.0 + config.d_lon)) {
        last_beta = 2;  // acceleration
      } else if (speed < config.v_ref * (1.0 - config.d_lon)) {
        last_beta = 1;  // deceleration
      } else {
        last_beta = 0;
      }
    }
    out.alpha[static_cast<std::size_t>(t)] = last_alpha;
    out.beta[static_cast<std::size_t>(t)] = last_beta;
  }
  return out;
}

IntentionLabels label_window(const SceneWindow& window, const LabelerConfig& config) {
  const int l_obs = window.obs_len();
  const int l_pred = window.pred_len();
  const int l = l_obs + l_pred;
  const int n = window.num_pedestrians();

  IntentionLabels labels;
  labels.alpha.assign(static_cast<std::size_t>(l), std::vector<int>(static_cast<std::size_t>(n), 0));
  labels.beta = labels.alpha;

  for (int i = 0; i < n; ++i) {
    Tensor track({2, l});
    for (int t = 0; t < l_obs; ++t) {
      track(0, t) = window.observed(0, t, i);
      track(1, t) = window.observed(1, t, i);
    }
    for (int t = 0; t < l_pred; ++t) {
      track(0, l_obs + t) = window.future(0, t, i);
      track(1, l_obs + t) = window.future(1, t, i);
    }
    LabelSequence seq = label_intentions(rotate_to_local(track), config);
    for (int t = 0; t < l; ++t) {
      labels.alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
          seq.alpha[static_cast<std::size_t>(t)];
      labels.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
          seq.beta[static_cast<std::size_t>(t)];
    }
  }
  return labels;
}

IntentionStats intention_stats(const std::vector<SceneWindow>& dataset,
                               const LabelerConfig& config) {
  if (dataset.empty()) throw EmptyDataset("intention_stats: no windows");

  long lat_counts[3] = {0, 0, 0};
  long lon_counts[3] = {0, 0, 0};
  long total = 0;
  for (const SceneWindow& w : dataset) {
    IntentionLabels labels = label_window(w, config);
    for (std::size_t t = 0; t < labels.alpha.size(); ++t) {
      for (std::size_t i = 0; i < labels.alpha[t].size(); ++i) {
        ++lat_counts[labels.alpha[t][i]];
        ++lon_counts[labels.beta[t][i]];
        ++total;
      }
    }
  }

  IntentionStats stats;
  stats.frame_count = total;
  for (int k = 0; k < 3; ++k) {
    stats.lateral_pct[static_cast<std::size_t>(k)] = 100.0 * lat_counts[k] / total;
    stats.longitudinal_pct[static_cast<std::size_t>(k)] = 100.0 * lon_counts[k] / total;
  }
  return stats;
}

void write_stats_csv(const IntentionStats& stats, std::ostream& out) {
  out << "intention,percent\n";
  out << "keep_direction," << stats.lateral_pct[0] << '\n';
  out << "turn_left," << stats.lateral_pct[1] << '\n';
  out << "turn_right," << stats.lateral_pct[2] << '\n';
  out << "keep_speed," << stats.longitudinal_pct[0] << '\n';
  out << "deceleration," << stats.longitudinal_pct[1] << '\n';
  out << "acceleration," << stats.longitudinal_pct[2] << '\n';
}

}  // namespace stcrf
