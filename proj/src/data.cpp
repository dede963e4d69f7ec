#include "stcrf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "stcrf/errors.hpp"

namespace stcrf {

RelativeMode parse_relative_mode(const std::string& name) {
  if (name == "inter-pedestrian-diff") return RelativeMode::kInterPedestrianDiff;
  if (name == "per-step-displacement") return RelativeMode::kPerStepDisplacement;
  throw Error("unknown relative mode: " + name);
}

std::string relative_mode_name(RelativeMode mode) {
  return mode == RelativeMode::kInterPedestrianDiff ? "inter-pedestrian-diff"
                                                    : "per-step-displacement";
}

RawTrackTable parse_track_stream(std::istream& in, double frame_interval,
                                 double scale, const std::string& origin) {
  RawTrackTable table;
  table.frame_interval = frame_interval;

  std::string line;
  int line_no = 0;
  std::set<std::pair<int, int>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;

    std::istringstream fields(line);
    double frame_raw, id_raw, x, y, extra;
    if (!(fields >> frame_raw >> id_raw >> x >> y)) {
      throw MalformedLine(origin + ":" + std::to_string(line_no) +
                          ": expected `frame_id ped_id x y`");
    }
    if (fields >> extra) {
      throw MalformedLine(origin + ":" + std::to_string(line_no) +
                          ": expected exactly 4 fields");
    }
    TrackRow row;
    row.frame_id = static_cast<int>(std::llround(frame_raw));
    row.pedestrian_id = static_cast<int>(std::llround(id_raw));
    row.x = x * scale;
    row.y = y * scale;
    if (!seen.insert({row.frame_id, row.pedestrian_id}).second) {
      throw DuplicateObservation(origin + ":" + std::to_string(line_no) +
                                 ": duplicate (frame " + std::to_string(row.frame_id) +
                                 ", ped " + std::to_string(row.pedestrian_id) + ")");
    }
    table.rows.push_back(row);
  }

  std::sort(table.rows.begin(), table.rows.end(), [](const TrackRow& a, const TrackRow& b) {
    if (a.pedestrian_id != b.pedestrian_id) return a.pedestrian_id < b.pedestrian_id;
    return a.frame_id < b.frame_id;
  });
  return table;
}

RawTrackTable load_track_file(const std::string& path, double frame_interval,
                              double scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open track file: " + path);
  return parse_track_stream(in, frame_interval, scale, path);
}

std::vector<SceneWindow> make_windows(const RawTrackTable& table, int l_obs,
                                      int l_pred, int stride) {
  if (l_obs < 2 || l_pred < 1 || stride < 1) {
    throw Error("make_windows: need l_obs >= 2, l_pred >= 1, stride >= 1");
  }

  // Frames may be sampled on any regular grid (ETH/UCY uses multiples of 10),
  // so windows are formed over the sorted list of distinct frame ids.
  std::set<int> frame_set;
  for (const TrackRow& r : table.rows) frame_set.insert(r.frame_id);
  std::vector<int> frames(frame_set.begin(), frame_set.end());

  // (ped, frame) -> position
  std::map<std::pair<int, int>, std::pair<double, double>> pos;
  std::set<int> ped_set;
  for (const TrackRow& r : table.rows) {
    pos[{r.pedestrian_id, r.frame_id}] = {r.x, r.y};
    ped_set.insert(r.pedestrian_id);
  }
  std::vector<int> peds(ped_set.begin(), ped_set.end());

  const int span = l_obs + l_pred;
  std::vector<SceneWindow> windows;
  for (std::size_t s = 0; s + span <= frames.size(); s += static_cast<std::size_t>(stride)) {
    std::vector<int> present;
    for (int p : peds) {
      bool full = true;
      for (int k = 0; k < span; ++k) {
        if (!pos.count({p, frames[s + k]})) {
          full = false;
          break;
        }
      }
      if (full) present.push_back(p);
    }
    if (present.empty()) continue;

    const int n = static_cast<int>(present.size());
    SceneWindow w;
    w.observed = Tensor({2, l_obs, n});
    w.future = Tensor({2, l_pred, n});
    w.pedestrian_ids = present;
    w.start_frame = frames[s];
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < span; ++k) {
        auto [x, y] = pos.at({present[i], frames[s + k]});
        if (k < l_obs) {
          w.observed(0, k, i) = x;
          w.observed(1, k, i) = y;
        } else {
          w.future(0, k - l_obs, i) = x;
          w.future(1, k - l_obs, i) = y;
        }
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

RelativeInput to_relative(const SceneWindow& window, RelativeMode mode) {
  const int l = window.obs_len();
  const int n = window.num_pedestrians();
  RelativeInput rel;
  rel.mode = mode;
  rel.values = Tensor({2, l, n});

  if (mode == RelativeMode::kInterPedestrianDiff) {
    for (int t = 0; t < l; ++t) {
      for (int i = 1; i < n; ++i) {
        rel.values(0, t, i) = window.observed(0, t, i) - window.observed(0, t, i - 1);
        rel.values(1, t, i) = window.observed(1, t, i) - window.observed(1, t, i - 1);
      }
    }
  } else {
    for (int t = 1; t < l; ++t) {
      for (int i = 0; i < n; ++i) {
        rel.values(0, t, i) = window.observed(0, t, i) - window.observed(0, t - 1, i);
        rel.values(1, t, i) = window.observed(1, t, i) - window.observed(1, t - 1, i);
      }
    }
  }
  return rel;
}

void write_window_manifest(const std::vector<SceneWindow>& windows,
                           std::ostream& out) {
  out << "# stcrf window manifest v1\n";
  out.precision(17);
  for (const SceneWindow& w : windows) {
    const int n = w.num_pedestrians();
    out << "window " << n << ' ' << w.obs_len() << ' ' << w.pred_len() << ' '
        << w.start_frame << '\n';
    out << "ids";
    for (int id : w.pedestrian_ids) out << ' ' << id;
    out << '\n';
    for (int t = 0; t < w.obs_len(); ++t) {
      for (int i = 0; i < n; ++i) {
        out << w.observed(0, t, i) << ' ' << w.observed(1, t, i)
            << (i + 1 == n ? '\n' : ' ');
      }
    }
    for (int t = 0; t < w.pred_len(); ++t) {
      for (int i = 0; i < n; ++i) {
        out << w.future(0, t, i) << ' ' << w.future(1, t, i)
            << (i + 1 == n ? '\n' : ' ');
      }
    }
  }
}

void write_window_manifest(const std::vector<SceneWindow>& windows,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  write_window_manifest(windows, out);
}

std::vector<SceneWindow> read_window_manifest(std::istream& in) {
  std::vector<SceneWindow> windows;
  std::string tok;
  while (in >> tok) {
    if (tok == "#") {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (tok != "window") throw MalformedLine("manifest: expected `window`, got " + tok);
    int n, l_obs, l_pred, start;
    if (!(in >> n >> l_obs >> l_pred >> start)) {
      throw MalformedLine("manifest: bad window header");
    }
    SceneWindow w;
    w.start_frame = start;
    w.observed = Tensor({2, l_obs, n});
    w.future = Tensor({2, l_pred, n});
    in >> tok;
    if (tok != "ids") throw MalformedLine("manifest: expected `ids`");
    w.pedestrian_ids.resize(static_cast<std::size_t>(n));
    for (int& id : w.pedestrian_ids) in >> id;
    for (int t = 0; t < l_obs; ++t) {
      for (int i = 0; i < n; ++i) in >> w.observed(0, t, i) >> w.observed(1, t, i);
    }
    for (int t = 0; t < l_pred; ++t) {
      for (int i = 0; i < n; ++i) in >> w.future(0, t, i) >> w.future(1, t, i);
    }
    if (!in) throw MalformedLine("manifest: truncated window block");
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<SceneWindow> read_window_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  return read_window_manifest(in);
}

}  // namespace stcrf
