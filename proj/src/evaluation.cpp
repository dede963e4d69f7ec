#include "stcrf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "stcrf/errors.hpp"

namespace stcrf {

double ade(const Tensor& predicted, const Tensor& truth, bool paper_literal) {
  if (!predicted.same_shape(truth) || predicted.rank() != 3 || predicted.dim(0) != 2) {
    throw ShapeMismatch("ade: expected matching [2, L, N]");
  }
  const int l = predicted.dim(1);
  const int n = predicted.dim(2);
  double sum = 0.0;
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < n; ++i)
      sum += std::hypot(predicted(0, t, i) - truth(0, t, i),
                        predicted(1, t, i) - truth(1, t, i));
  return paper_literal ? sum / n : sum / (static_cast<double>(n) * l);
}

double fde(const Tensor& predicted, const Tensor& truth) {
  if (!predicted.same_shape(truth) || predicted.rank() != 3 || predicted.dim(0) != 2) {
    throw ShapeMismatch("fde: expected matching [2, L, N]");
  }
  const int l = predicted.dim(1);
  const int n = predicted.dim(2);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += std::hypot(predicted(0, l - 1, i) - truth(0, l - 1, i),
                      predicted(1, l - 1, i) - truth(1, l - 1, i));
  return sum / n;
}

MetricReport evaluate(const Model& model, const std::vector<SceneWindow>& dataset,
                      bool paper_literal) {
  MetricReport report;
  double ade_sum = 0.0, fde_sum = 0.0;
  long ade_points = 0, fde_points = 0;
  for (std::size_t w = 0; w < dataset.size(); ++w) {
    const SceneWindow& window = dataset[w];
    Prediction pred = model.predict(window);
    SceneMetrics m;
    m.window_index = static_cast<int>(w);
    m.num_pedestrians = window.num_pedestrians();
    m.ade = ade(pred.trajectory, window.future, paper_literal);
    m.fde = fde(pred.trajectory, window.future);
    report.per_scene.push_back(m);

    const int l = window.pred_len();
    const int n = window.num_pedestrians();
    for (int t = 0; t < l; ++t)
      for (int i = 0; i < n; ++i)
        ade_sum += std::hypot(pred.trajectory(0, t, i) - window.future(0, t, i),
                              pred.trajectory(1, t, i) - window.future(1, t, i));
    for (int i = 0; i < n; ++i)
      fde_sum += std::hypot(pred.trajectory(0, l - 1, i) - window.future(0, l - 1, i),
                            pred.trajectory(1, l - 1, i) - window.future(1, l - 1, i));
    ade_points += paper_literal ? n : static_cast<long>(n) * l;
    fde_points += n;
  }
  report.window_count = static_cast<int>(dataset.size());
  if (ade_points > 0) {
    report.ade = ade_sum / ade_points;
    report.fde = fde_sum / fde_points;
  }
  return report;
}

void write_metric_report_csv(const MetricReport& report, std::ostream& out) {
  out << "window,pedestrians,ade,fde\n";
  for (const SceneMetrics& m : report.per_scene) {
    out << m.window_index << ',' << m.num_pedestrians << ',' << m.ade << ',' << m.fde << '\n';
  }
  out << "aggregate," << report.window_count << ',' << report.ade << ',' << report.fde << '\n';
}

namespace {

struct Bounds {
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  void include(double x, double y) {
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void plot_trajectories(const SceneWindow& window, const Tensor& predicted,
                       const std::string& path) {
  const int n = window.num_pedestrians();
  const int lo = window.obs_len();
  const int lp = window.pred_len();
  if (predicted.rank() != 3 || predicted.dim(1) != lp || predicted.dim(2) != n) {
    throw ShapeMismatch("plot_trajectories: prediction shape mismatch");
  }

  Bounds b;
  for (int t = 0; t < lo; ++t)
    for (int i = 0; i < n; ++i) b.include(window.observed(0, t, i), window.observed(1, t, i));
  for (int t = 0; t < lp; ++t)
    for (int i = 0; i < n; ++i) {
      b.include(window.future(0, t, i), window.future(1, t, i));
      b.include(predicted(0, t, i), predicted(1, t, i));
    }
  const double span_x = std::max(b.max_x - b.min_x, 1e-6);
  const double span_y = std::max(b.max_y - b.min_y, 1e-6);
  const double w = 600.0, h = 600.0, pad = 50.0;
  auto sx = [&](double x) { return pad + (x - b.min_x) / span_x * (w - 2 * pad); };
  auto sy = [&](double y) { return h - pad - (y - b.min_y) / span_y * (h - 2 * pad); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot write plot: " + path);
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 160 << "\" height=\"" << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\" stroke=\"#ccc\"/>\n";

  auto polyline = [&](auto get_x, auto get_y, int len, const char* color, const char* dash) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\"";
    if (dash[0] != '\0') out << " stroke-dasharray=\"" << dash << "\"";
    out << " points=\"";
    for (int t = 0; t < len; ++t) out << sx(get_x(t)) << ',' << sy(get_y(t)) << ' ';
    out << "\"/>\n";
  };

  for (int i = 0; i < n; ++i) {
    const char* color = kPalette[i % 10];
    polyline([&](int t) { return window.observed(0, t, i); },
             [&](int t) { return window.observed(1, t, i); }, lo, color, "");
    polyline([&](int t) { return window.future(0, t, i); },
             [&](int t) { return window.future(1, t, i); }, lp, color, "8,4");
    polyline([&](int t) { return predicted(0, t, i); },
             [&](int t) { return predicted(1, t, i); }, lp, color, "2,3");
  }

  for (int i = 0; i < n; ++i) {
    const double ly = 30.0 + 20.0 * i;
    out << "<rect x=\"" << w + 10 << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[i % 10] << "\"/>\n";
    out << "<text x=\"" << w + 28 << "\" y=\"" << ly << "\" font-size=\"13\">ped "
        << window.pedestrian_ids[static_cast<std::size_t>(i)] << "</text>\n";
  }
  out << "<text x=\"" << w + 10 << "\" y=\"" << 40.0 + 20.0 * n
      << "\" font-size=\"11\">solid: observed</text>\n";
  out << "<text x=\"" << w + 10 << "\" y=\"" << 56.0 + 20.0 * n
      << "\" font-size=\"11\">dashed: truth</text>\n";
  out << "<text x=\"" << w + 10 << "\" y=\"" << 72.0 + 20.0 * n
      << "\" font-size=\"11\">dotted: predicted</text>\n";
  out << "</svg>\n";
}

}  // namespace stcrf
