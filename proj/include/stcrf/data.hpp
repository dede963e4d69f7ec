#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stcrf/tensor.hpp"

namespace stcrf {

struct TrackRow {
  int frame_id = 0;
  int pedestrian_id = 0;
  double x = 0.0;
  double y = 0.0;
};

// Raw observations sorted by (pedestrian_id, frame_id).
struct RawTrackTable {
  std::vector<TrackRow> rows;
  double frame_interval = 0.4;
};

// One sample: N pedestrians fully present over L_o observed + L_p future
// consecutive frames.
struct SceneWindow {
  Tensor observed;  // [2, L_o, N]
  Tensor future;    // [2, L_p, N]
  std::vector<int> pedestrian_ids;
  int start_frame = 0;

  int num_pedestrians() const { return static_cast<int>(pedestrian_ids.size()); }
  int obs_len() const { return observed.dim(1); }
  int pred_len() const { return future.dim(1); }
};

enum class RelativeMode {
  kInterPedestrianDiff,  // x̄^t = [0,0, x2-x1, y2-y1, ...] per frame
  kPerStepDisplacement,  // x_i^t - x_i^{t-1}, first frame zero
};

struct RelativeInput {
  Tensor values;  // [2, L_o, N]
  RelativeMode mode = RelativeMode::kInterPedestrianDiff;
};

RelativeMode parse_relative_mode(const std::string& name);
std::string relative_mode_name(RelativeMode mode);

// Parses a whitespace-delimited track file, one `frame_id ped_id x y` per
// line. Lines starting with `#` are skipped. Coordinates are multiplied by
// `scale` before storage.
RawTrackTable load_track_file(const std::string& path, double frame_interval,
                              double scale = 1.0);
RawTrackTable parse_track_stream(std::istream& in, double frame_interval,
                                 double scale, const std::string& origin);

std::vector<SceneWindow> make_windows(const RawTrackTable& table, int l_obs,
                                      int l_pred, int stride);

RelativeInput to_relative(const SceneWindow& window, RelativeMode mode);

// Text window manifest: `window N L_o L_p start_frame`, an `ids` line, then
// L_o + L_p frame lines of N `x y` pairs.
void write_window_manifest(const std::vector<SceneWindow>& windows,
                           std::ostream& out);
void write_window_manifest(const std::vector<SceneWindow>& windows,
                           const std::string& path);
std::vector<SceneWindow> read_window_manifest(std::istream& in);
std::vector<SceneWindow> read_window_manifest(const std::string& path);

}  // namespace stcrf
