// Acceptance gate: one printed [PASS]/[FAIL] line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stcrf/cli.hpp"
#include "stcrf/crf.hpp"
#include "stcrf/encoder.hpp"
#include "stcrf/evaluation.hpp"
#include "stcrf/intention.hpp"
#include "stcrf/model.hpp"
#include "stcrf/training.hpp"
#include "test_util.hpp"

using namespace stcrf;
namespace fs = std::filesystem;

namespace {

void report(int criterion, const char* name, bool ok, const std::string& detail = "") {
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, name,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
}

Tensor random_emissions(std::mt19937& rng, int b, int l, int k) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Tensor e({b, l, k});
  for (double& v : e.raw()) v = dist(rng);
  return e;
}

Tensor random_transitions(std::mt19937& rng, int k) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t({k, k});
  for (double& v : t.raw()) v = dist(rng);
  return t;
}

LabelChain random_labels(std::mt19937& rng, int b, int l, int k) {
  LabelChain labels(static_cast<std::size_t>(b), std::vector<int>(static_cast<std::size_t>(l)));
  for (auto& chain : labels)
    for (int& v : chain) v = static_cast<int>(rng() % static_cast<unsigned>(k));
  return labels;
}

}  // namespace

TEST_CASE("criterion 1: CRF correctness against exhaustive enumeration") {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(1001);
  bool ok = true;
  for (int rep = 0; rep < 500 && ok; ++rep) {
    const int l = 1 + static_cast<int>(rng() % 6);
    const int b = 1 + static_cast<int>(rng() % 4);
    Tensor e = random_emissions(rng, b, l, 3);
    Tensor t = random_transitions(rng, 3);
    LabelChain labels = random_labels(rng, b, l, 3);

    OracleResult oracle = enumerate_oracle(e, t);
    std::vector<double> lp = log_partition(e, t);
    std::vector<double> gold = gold_score(e, t, labels);
    std::vector<double> n = nll(e, t, labels);
    LabelChain best = viterbi(e, t);
    std::vector<double> best_score = gold_score(e, t, best);
    std::vector<double> oracle_best_score = gold_score(e, t, oracle.best_path);

    for (int c = 0; c < b; ++c) {
      const std::size_t cc = static_cast<std::size_t>(c);
      if (std::abs(lp[cc] - oracle.log_partition[cc]) > 1e-8) ok = false;
      if (std::abs(n[cc] - (oracle.log_partition[cc] - gold[cc])) > 1e-8) ok = false;
      if (best_score[cc] != oracle_best_score[cc]) ok = false;  // exact
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok = ok && secs < 10.0;
  std::ostringstream detail;
  detail << "500 instances in " << secs << " s";
  report(1, "CRF log-partition/NLL within 1e-8, Viterbi score exact", ok, detail.str());
  CHECK(ok);
}

TEST_CASE("criterion 2: CRF analytic gradients vs central finite differences") {
  std::mt19937 rng(2002);
  bool ok = true;
  double worst = 0.0;
  const double step = 1e-4;
  for (int rep = 0; rep < 50 && ok; ++rep) {
    const int l = 2 + static_cast<int>(rng() % 5);
    const int b = 1 + static_cast<int>(rng() % 3);
    Tensor e = random_emissions(rng, b, l, 3);
    Tensor t = random_transitions(rng, 3);
    LabelChain labels = random_labels(rng, b, l, 3);

    Tensor de({b, l, 3}), dt({3, 3});
    nll_mean_with_grad(e, t, labels, &de, &dt);

    auto mean_nll = [&]() {
      std::vector<double> n = nll(e, t, labels);
      double s = 0.0;
      for (double v : n) s += v;
      return s / static_cast<double>(n.size());
    };
    auto check_entry = [&](double& slot, double analytic) {
      const double orig = slot;
      slot = orig + step;
      const double up = mean_nll();
      slot = orig - step;
      const double down = mean_nll();
      slot = orig;
      const double fd = (up - down) / (2.0 * step);
      const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, rel);
      if (rel > 1e-4) ok = false;
    };
    for (std::size_t i = 0; i < e.size(); ++i) check_entry(e.raw()[i], de.raw()[i]);
    for (std::size_t i = 0; i < t.size(); ++i) check_entry(t.raw()[i], dt.raw()[i]);
  }
  std::ostringstream detail;
  detail << "worst relative error " << worst;
  report(2, "CRF gradient check (50 instances, step 1e-4, tol 1e-4)", ok, detail.str());
  CHECK(ok);
}

TEST_CASE("criterion 3: encoder oracles and permutation equivariance") {
  std::mt19937 rng(3003);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  bool ok = true;
  for (int rep = 0; rep < 100 && ok; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 4);  // N <= 5
    Tensor a({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = dist(rng);

    // normalize_adjacency vs D^{-1/2}(A+I)D^{-1/2} spelled out
    Tensor norm = normalize_adjacency(a);
    for (int i = 0; i < n && ok; ++i)
      for (int j = 0; j < n; ++j) {
        double di = 1.0, dj = 1.0;
        for (int m = 0; m < n; ++m) {
          di += a(i, m);
          dj += a(j, m);
        }
        const double want = (a(i, j) + (i == j ? 1.0 : 0.0)) / std::sqrt(di * dj);
        if (std::abs(norm(i, j) - want) > 1e-6) {
          ok = false;
          break;
        }
      }

    // gcn_layer vs the triple loop
    const int d_in = 3, d_out = 2;
    Tensor f = test_util::random_tensor({d_in, n}, rng);
    Tensor w = test_util::random_tensor({d_in, d_out}, rng);
    Tensor out = gcn_layer(f, norm, w, [](double x) { return std::tanh(x); });
    for (int dp = 0; dp < d_out && ok; ++dp)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int d = 0; d < d_in; ++d)
          for (int m = 0; m < n; ++m) s += w(d, dp) * f(d, m) * norm(m, j);
        if (std::abs(out(dp, j) - std::tanh(s)) > 1e-6) {
          ok = false;
          break;
        }
      }

    // permutation equivariance
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor fp({d_in, n}), ap({n, n});
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < d_in; ++d) fp(d, i) = f(d, perm[static_cast<std::size_t>(i)]);
      for (int j = 0; j < n; ++j)
        ap(i, j) = norm(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Tensor out_p = gcn_layer(fp, ap, w, [](double x) { return std::tanh(x); });
    for (int dp = 0; dp < d_out && ok; ++dp)
      for (int i = 0; i < n; ++i) {
        if (std::abs(out_p(dp, i) - out(dp, perm[static_cast<std::size_t>(i)])) > 1e-6) {
          ok = false;
          break;
        }
      }
  }
  report(3, "normalize_adjacency/gcn_layer dense oracles (1e-6) + equivariance", ok);
  CHECK(ok);
}

TEST_CASE("criterion 4: labeler statistics") {
  // Raw benchmark splits, if present, go under data/eth_ucy/ as
  // `frame_id ped_id x y` text files.
  std::vector<std::string> roots = {"data/eth_ucy", "../data/eth_ucy", "../../data/eth_ucy"};
  std::string found;
  for (const std::string& r : roots) {
    if (fs::is_directory(r) && !fs::is_empty(r)) {
      found = r;
      break;
    }
  }

  if (!found.empty()) {
    std::vector<SceneWindow> windows;
    for (const auto& entry : fs::directory_iterator(found)) {
      if (entry.path().extension() != ".txt") continue;
      RawTrackTable t = load_track_file(entry.path().string(), 0.4);
      auto w = make_windows(t, 8, 12, 1);
      windows.insert(windows.end(), w.begin(), w.end());
    }
    IntentionStats stats = intention_stats(windows, LabelerConfig{});
    const double want_lat[3] = {80.45, 8.99, 10.56};   // keep, left, right
    const double want_lon[3] = {60.09, 16.03, 23.87};  // keep, decel, accel
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(stats.lateral_pct[static_cast<std::size_t>(i)] - want_lat[i]) > 3.0) ok = false;
      if (std::abs(stats.longitudinal_pct[static_cast<std::size_t>(i)] - want_lon[i]) > 3.0)
        ok = false;
    }
    std::ostringstream detail;
    detail << "ETH/UCY from " << found << ": lat " << stats.lateral_pct[0] << '/'
           << stats.lateral_pct[1] << '/' << stats.lateral_pct[2] << ", lon "
           << stats.longitudinal_pct[0] << '/' << stats.longitudinal_pct[1] << '/'
           << stats.longitudinal_pct[2];
    report(4, "labeler reproduces benchmark distribution within 3 pp", ok, detail.str());
    CHECK(ok);
    return;
  }

  // Raw datasets unavailable: downgraded to the synthetic property suite.
  bool ok = true;
  std::mt19937 rng(4004);
  LabelerConfig lc;

  // partition: every frame gets exactly one in-range code per axis,
  // and corpus percentages sum to 100 per axis
  for (int rep = 0; rep < 50 && ok; ++rep) {
    Tensor track = test_util::random_tensor({2, 12}, rng, 3.0);
    LabelSequence seq = label_intentions(rotate_to_local(track), lc);
    if (seq.alpha.size() != 12 || seq.beta.size() != 12) ok = false;
    for (int v : seq.alpha)
      if (v < 0 || v > 2) ok = false;
    for (int v : seq.beta)
      if (v < 0 || v > 2) ok = false;
  }
  IntentionStats stats = intention_stats(test_util::toy_dataset(12, 4, 4040), lc);
  if (std::abs(stats.lateral_pct[0] + stats.lateral_pct[1] + stats.lateral_pct[2] - 100.0) > 1e-6)
    ok = false;
  if (std::abs(stats.longitudinal_pct[0] + stats.longitudinal_pct[1] + stats.longitudinal_pct[2] -
               100.0) > 1e-6)
    ok = false;

  // boundary: drift and speed just beyond the thresholds flip the codes
  auto drift_track = [&](double dy_per_dt, double speed) {
    std::vector<std::pair<double, double>> pts;
    for (int t = 0; t < 6; ++t) {
      pts.push_back({speed * lc.frame_interval * t, dy_per_dt * 0.5 * t});
    }
    LocalTrajectory local;
    local.values = Tensor({2, 6});
    for (int t = 0; t < 6; ++t) {
      local.values(0, t) = pts[static_cast<std::size_t>(t)].first;
      local.values(1, t) = pts[static_cast<std::size_t>(t)].second;
    }
    return label_intentions(local, lc);
  };
  if (drift_track(0.0, 1.0).alpha[0] != 0) ok = false;       // keep
  if (drift_track(0.15, 1.0).alpha[0] != 1) ok = false;      // left above +D_lat
  if (drift_track(-0.15, 1.0).alpha[0] != 2) ok = false;     // right below -D_lat
  if (drift_track(0.05, 1.0).alpha[0] != 0) ok = false;      // inside the band
  if (drift_track(0.0, 1.0).beta[0] != 0) ok = false;        // keep speed
  if (drift_track(0.0, 1.3).beta[0] != 2) ok = false;        // above (1+D_lon) v_ref
  if (drift_track(0.0, 0.7).beta[0] != 1) ok = false;        // below (1-D_lon) v_ref
  if (drift_track(0.0, 1.1).beta[0] != 0) ok = false;        // inside the band

  // invariance: global rigid motion never changes labels; reruns are identical
  for (int rep = 0; rep < 30 && ok; ++rep) {
    Tensor track = test_util::random_tensor({2, 10}, rng, 2.0);
    LabelSequence base = label_intentions(rotate_to_local(track), lc);
    const double th = 2.0 * M_PI * (static_cast<double>(rng() % 1000) / 1000.0);
    Tensor moved({2, 10});
    for (int t = 0; t < 10; ++t) {
      moved(0, t) = std::cos(th) * track(0, t) - std::sin(th) * track(1, t) + 40.0;
      moved(1, t) = std::sin(th) * track(0, t) + std::cos(th) * track(1, t) - 11.0;
    }
    LabelSequence rotated = label_intentions(rotate_to_local(moved), lc);
    LabelSequence again = label_intentions(rotate_to_local(track), lc);
    if (rotated.alpha != base.alpha || rotated.beta != base.beta) ok = false;
    if (again.alpha != base.alpha || again.beta != base.beta) ok = false;
  }

  report(4, "labeler statistics", ok,
         "raw ETH/UCY splits not present; downgraded to the synthetic property suite "
         "(partition, boundary, invariance)");
  CHECK(ok);
}

TEST_CASE("criterion 5: metric correctness") {
  std::mt19937 rng(5005);
  bool ok = true;
  for (int rep = 0; rep < 100 && ok; ++rep) {
    const int l = 1 + static_cast<int>(rng() % 12);
    const int n = 1 + static_cast<int>(rng() % 5);
    Tensor truth = test_util::random_tensor({2, l, n}, rng, 4.0);
    Tensor pred = test_util::random_tensor({2, l, n}, rng, 4.0);
    double sum = 0.0, last = 0.0;
    for (int t = 0; t < l; ++t)
      for (int i = 0; i < n; ++i) {
        const double d = std::hypot(pred(0, t, i) - truth(0, t, i),
                                    pred(1, t, i) - truth(1, t, i));
        sum += d;
        if (t == l - 1) last += d;
      }
    if (std::abs(ade(pred, truth) - sum / (n * l)) > 1e-9) ok = false;
    if (std::abs(fde(pred, truth) - last / n) > 1e-9) ok = false;
  }

  Tensor truth({2, 12, 2});
  Tensor pred = truth;
  for (int t = 0; t < 12; ++t)
    for (int i = 0; i < 2; ++i) {
      pred(0, t, i) += 3.0;
      pred(1, t, i) += 4.0;
    }
  if (ade(pred, truth) != 5.0 || fde(pred, truth) != 5.0) ok = false;

  report(5, "ADE/FDE loop oracles within 1e-9, (3,4) offset exactly 5.0", ok);
  CHECK(ok);
}

TEST_CASE("criterion 6: pipeline shape and overfit") {
  const auto start = std::chrono::steady_clock::now();
  auto dataset = test_util::straight_dataset(10, 4, 404);
  TrainConfig tc = test_util::overfit_config();
  Model model(tc.model, tc.seed);
  TrainResult result = train(model, dataset, {}, tc);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double first_l1 = result.history.front().train_loss.l1;
  const double last_l1 = result.history.back().train_loss.l1;
  MetricReport metrics = evaluate(model, dataset);

  bool shapes_ok = true;
  for (const SceneWindow& w : dataset) {
    const int n = w.num_pedestrians();
    Prediction p = model.predict(w);
    if (p.trajectory.shape() != std::vector<int>{2, 12, n}) shapes_ok = false;
    if (static_cast<int>(p.intention_lat.size()) != n) shapes_ok = false;
    if (static_cast<int>(p.intention_lon.size()) != n) shapes_ok = false;
    for (const auto& chain : p.intention_lat)
      if (static_cast<int>(chain.size()) != 12) shapes_ok = false;
    for (const auto& chain : p.intention_lon)
      if (static_cast<int>(chain.size()) != 12) shapes_ok = false;
  }

  const bool ok =
      shapes_ok && last_l1 < 0.1 * first_l1 && metrics.ade < 0.05 && secs < 300.0;
  std::ostringstream detail;
  detail << "L1 " << first_l1 << " -> " << last_l1 << " ("
         << 100.0 * (1.0 - last_l1 / first_l1) << "% drop), toy ADE " << metrics.ade << ", "
         << secs << " s";
  report(6, "10-window overfit: L1 drop >= 90%, ADE < 0.05, shapes", ok, detail.str());
  CHECK(ok);
}

TEST_CASE("criterion 7: ablation harness grid") {
  const std::string dir = test_util::scratch_dir("accept_ablate");
  const std::string manifest = dir + "/toy.manifest";
  write_window_manifest(test_util::straight_dataset(10, 4, 404), manifest);

  const std::string cfg_path = dir + "/train.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "epochs = 400\nlearning_rate = 0.02\nlr_decay = 0.7\nlr_decay_every = 60\n"
        << "d_f = 4\nrelative_mode = per-step-displacement\n"
        << "train_manifest = " << manifest << "\n";
  }
  const std::string csv_path = dir + "/ablation.csv";
  const char* argv[] = {"stcrf", "ablate", "--config", cfg_path.c_str(), "--out",
                        csv_path.c_str()};
  const int rc = dispatch(6, argv);

  bool ok = rc == 0;
  std::string rows;
  if (ok) {
    std::ifstream in(csv_path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ok = lines.size() == 4 && lines[0] == "configuration,ade,fde" &&
         lines[1].rfind("L_S only,", 0) == 0 && lines[2].rfind("L_T only,", 0) == 0 &&
         lines[3].rfind("both,", 0) == 0;
    if (lines.size() == 4) rows = lines[1] + " | " + lines[2] + " | " + lines[3];
  }
  report(7, "three-configuration ablation CSV (directional claim reported, not asserted)", ok,
         rows);
  CHECK(ok);
  fs::remove_all(dir);
}

TEST_CASE("criterion 8: reproduce.md ships with the repo") {
  bool found = false;
  std::string where;
  for (const char* p : {"reproduce.md", "../reproduce.md", "../../reproduce.md"}) {
    if (fs::is_regular_file(p)) {
      found = true;
      where = p;
      break;
    }
  }
  report(8, "full-benchmark reproduction notes (reproduce.md)", found, where);
  CHECK(found);
}
