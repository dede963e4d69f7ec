#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "stcrf/data.hpp"
#include "stcrf/errors.hpp"
#include "test_util.hpp"

using namespace stcrf;

namespace {

RawTrackTable table_from(const std::string& text) {
  std::istringstream in(text);
  return parse_track_stream(in, 0.4, 1.0, "<test>");
}

// Independent sliding-window counter: scans distinct frames with stride 1
// and keeps only pedestrians observed at every frame of the span. Written
// against the raw rows, not the production windowing code.
int oracle_window_count(const RawTrackTable& table, int l_obs, int l_pred) {
  std::set<int> frames;
  std::map<int, std::set<int>> peds_at_frame;
  for (const TrackRow& r : table.rows) {
    frames.insert(r.frame_id);
    peds_at_frame[r.frame_id].insert(r.pedestrian_id);
  }
  std::vector<int> fs(frames.begin(), frames.end());
  const int span = l_obs + l_pred;
  int count = 0;
  for (std::size_t s = 0; s + static_cast<std::size_t>(span) <= fs.size(); ++s) {
    std::set<int> covered = peds_at_frame[fs[s]];
    for (int k = 1; k < span; ++k) {
      std::set<int> next;
      for (int p : peds_at_frame[fs[s + static_cast<std::size_t>(k)]]) {
        if (covered.count(p)) next.insert(p);
      }
      covered.swap(next);
    }
    if (!covered.empty()) ++count;
  }
  return count;
}

std::string straight_track(int ped, int frames, double x0 = 0.0, double y0 = 0.0,
                           int frame0 = 0) {
  std::ostringstream out;
  for (int t = 0; t < frames; ++t) {
    out << (frame0 + 10 * t) << ' ' << ped << ' ' << (x0 + 0.5 * t) << ' ' << y0 << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("load: two rows for one pedestrian") {
  RawTrackTable t = table_from("0 1 0.0 0.0\n10 1 1.0 0.0\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].frame_id == 0);
  CHECK(t.rows[1].x == doctest::Approx(1.0));
}

TEST_CASE("load: rows come back sorted by (ped, frame)") {
  RawTrackTable t = table_from("10 2 1 1\n0 1 0 0\n0 2 9 9\n10 1 2 2\n");
  CHECK(t.rows[0].pedestrian_id == 1);
  CHECK(t.rows[0].frame_id == 0);
  CHECK(t.rows[1].pedestrian_id == 1);
  CHECK(t.rows[1].frame_id == 10);
  CHECK(t.rows[2].pedestrian_id == 2);
}

TEST_CASE("load: malformed lines rejected") {
  CHECK_THROWS_AS(table_from("0 1 0.0\n"), MalformedLine);          // 3 fields
  CHECK_THROWS_AS(table_from("0 1 0.0 0.0 9.0\n"), MalformedLine);  // 5 fields
  CHECK_THROWS_AS(table_from("0 one 0.0 0.0\n"), MalformedLine);    // non-numeric
}

TEST_CASE("load: duplicate (frame, id) rejected") {
  CHECK_THROWS_AS(table_from("0 1 0 0\n0 1 1 1\n"), DuplicateObservation);
}

TEST_CASE("load: comments and blank lines skipped, scale applied") {
  std::istringstream in("# header\n\n0 1 2.0 4.0\n");
  RawTrackTable t = parse_track_stream(in, 0.4, 0.5, "<test>");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].x == doctest::Approx(1.0));
  CHECK(t.rows[0].y == doctest::Approx(2.0));
}

TEST_CASE("load: missing file reports IoError") {
  CHECK_THROWS_AS(load_track_file("/nonexistent/tracks.txt", 0.4), IoError);
}

TEST_CASE("make_windows: 20 frames yields exactly one 8+12 window") {
  RawTrackTable t = table_from(straight_track(1, 20));
  auto w = make_windows(t, 8, 12, 1);
  REQUIRE(w.size() == 1);
  CHECK(w[0].num_pedestrians() == 1);
  CHECK(w[0].start_frame == 0);
  CHECK(w[0].observed(0, 0, 0) == doctest::Approx(0.0));
  CHECK(w[0].future(0, 11, 0) == doctest::Approx(0.5 * 19));
}

TEST_CASE("make_windows: 21 frames, stride 1 yields two windows") {
  RawTrackTable t = table_from(straight_track(1, 21));
  CHECK(make_windows(t, 8, 12, 1).size() == 2);
}

TEST_CASE("make_windows: partially covered pedestrians are excluded") {
  // ped 1 covers frames 0..190, ped 2 only 0..140 (15 frames), ped 3 nothing useful
  std::string text = straight_track(1, 20) + straight_track(2, 15, 5.0, 5.0) +
                     straight_track(3, 5, -5.0, -5.0, 100);
  RawTrackTable t = table_from(text);
  auto w = make_windows(t, 8, 12, 1);
  REQUIRE(w.size() == 1);
  CHECK(w[0].pedestrian_ids == std::vector<int>{1});
}

TEST_CASE("make_windows: window count matches the independent scan oracle") {
  std::string text = straight_track(1, 40) + straight_track(2, 25, 3.0, 1.0, 50) +
                     straight_track(3, 33, -2.0, 6.0, 70);
  RawTrackTable t = table_from(text);
  for (int l_obs : {4, 8}) {
    for (int l_pred : {6, 12}) {
      CHECK(static_cast<int>(make_windows(t, l_obs, l_pred, 1).size()) ==
            oracle_window_count(t, l_obs, l_pred));
    }
  }
}

TEST_CASE("make_windows: translation of all coordinates changes no membership") {
  std::string text = straight_track(1, 25) + straight_track(2, 22, 1.0, 2.0, 30);
  RawTrackTable t = table_from(text);
  RawTrackTable shifted = t;
  for (TrackRow& r : shifted.rows) {
    r.x += 123.0;
    r.y -= 45.0;
  }
  auto a = make_windows(t, 8, 12, 1);
  auto b = make_windows(shifted, 8, 12, 1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pedestrian_ids == b[i].pedestrian_ids);
    CHECK(a[i].start_frame == b[i].start_frame);
  }
}

TEST_CASE("to_relative: N=1 inter-pedestrian-diff is all zeros") {
  SceneWindow w = test_util::toy_window(1, 5);
  RelativeInput rel = to_relative(w, RelativeMode::kInterPedestrianDiff);
  for (double v : rel.values.raw()) CHECK(v == 0.0);
}

TEST_CASE("to_relative: inter-pedestrian-diff subtracts the previous pedestrian") {
  SceneWindow w;
  w.observed = Tensor({2, 1, 2});
  w.future = Tensor({2, 1, 2});
  w.pedestrian_ids = {1, 2};
  w.observed(0, 0, 1) = 3.0;
  w.observed(1, 0, 1) = 4.0;
  RelativeInput rel = to_relative(w, RelativeMode::kInterPedestrianDiff);
  CHECK(rel.values(0, 0, 0) == 0.0);
  CHECK(rel.values(1, 0, 0) == 0.0);
  CHECK(rel.values(0, 0, 1) == doctest::Approx(3.0));
  CHECK(rel.values(1, 0, 1) == doctest::Approx(4.0));
}

TEST_CASE("to_relative: inter-pedestrian-diff is translation invariant") {
  SceneWindow w = test_util::toy_window(3, 9);
  RelativeInput base = to_relative(w, RelativeMode::kInterPedestrianDiff);
  SceneWindow shifted = w;
  for (double& v : shifted.observed.raw()) v += 77.0;
  RelativeInput moved = to_relative(shifted, RelativeMode::kInterPedestrianDiff);
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    CHECK(moved.values.raw()[i] == doctest::Approx(base.values.raw()[i]).epsilon(1e-12));
  }
}

TEST_CASE("to_relative: stationary pedestrian has zero per-step displacement") {
  SceneWindow w;
  w.observed = Tensor({2, 5, 1});
  w.future = Tensor({2, 1, 1});
  w.pedestrian_ids = {1};
  for (int t = 0; t < 5; ++t) {
    w.observed(0, t, 0) = 2.0;
    w.observed(1, t, 0) = -1.0;
  }
  RelativeInput rel = to_relative(w, RelativeMode::kPerStepDisplacement);
  for (double v : rel.values.raw()) CHECK(v == 0.0);
}

TEST_CASE("per-step displacements plus the first frame reconstruct the track") {
  SceneWindow w = test_util::toy_window(4, 13);
  RelativeInput rel = to_relative(w, RelativeMode::kPerStepDisplacement);
  for (int i = 0; i < 4; ++i) {
    for (int ax = 0; ax < 2; ++ax) {
      double acc = w.observed(ax, 0, i);
      for (int t = 1; t < w.obs_len(); ++t) {
        acc += rel.values(ax, t, i);
        CHECK(acc == doctest::Approx(w.observed(ax, t, i)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("window manifest round-trips") {
  auto windows = test_util::toy_dataset(4, 3, 99);
  std::ostringstream out;
  write_window_manifest(windows, out);
  std::istringstream in(out.str());
  auto back = read_window_manifest(in);
  REQUIRE(back.size() == windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    CHECK(back[i].pedestrian_ids == windows[i].pedestrian_ids);
    CHECK(back[i].start_frame == windows[i].start_frame);
    for (std::size_t j = 0; j < windows[i].observed.size(); ++j) {
      CHECK(back[i].observed.raw()[j] == doctest::Approx(windows[i].observed.raw()[j]));
      CHECK(back[i].future.raw()[j] < 1e300);  // parsed, finite
    }
  }
}
