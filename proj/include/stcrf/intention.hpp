#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "stcrf/data.hpp"
#include "stcrf/tensor.hpp"

namespace stcrf {

// Lateral codes: 0 keep direction, 1 turn left, 2 turn right.
// Longitudinal codes: 0 keep speed, 1 deceleration, 2 acceleration.
inline constexpr int kNumIntentionLabels = 3;

struct LabelerConfig {
  double d_lat = 0.1;          // lateral displacement threshold
  double d_lon = 0.2;          // speed margin around v_ref
  double delta_t = 0.8;        // lookahead, seconds
  double frame_interval = 0.4; // seconds per frame
  double v_ref = 1.0;          // nominal speed baseline

  int delta_frames() const;
};

struct LocalTrajectory {
  Tensor values;  // [2, L], x' forward, y' lateral
  bool degenerate_heading = false;
};

struct IntentionLabels {
  std::vector<std::vector<int>> alpha;  // [L][N]
  std::vector<std::vector<int>> beta;   // [L][N]
};

struct IntentionStats {
  // Percentages over all pedestrians and frames; each triple sums to 100.
  std::array<double, 3> lateral_pct{};       // keep, left, right
  std::array<double, 3> longitudinal_pct{};  // keep, decel, accel
  long frame_count = 0;
};

// Rotates (and translates) one pedestrian's track so the initial heading,
// estimated from the first to the second point, maps to +x'. A stationary
// prefix falls back to the first nonzero displacement; a fully stationary
// track keeps +x and sets degenerate_heading.
LocalTrajectory rotate_to_local(const Tensor& trajectory);

struct LabelSequence {
  std::vector<int> alpha;
  std::vector<int> beta;
};

// Per-frame labels for one local track; frames within delta_t of the end
// copy the last computable label.
LabelSequence label_intentions(const LocalTrajectory& local, const LabelerConfig& config);

// Labels for every pedestrian over the full window span (observed + future).
// Rotation uses the observed segment's initial tangent.
IntentionLabels label_window(const SceneWindow& window, const LabelerConfig& config);

IntentionStats intention_stats(const std::vector<SceneWindow>& dataset,
                               const LabelerConfig& config);

void write_stats_csv(const IntentionStats& stats, std::ostream& out);

}  // namespace stcrf
