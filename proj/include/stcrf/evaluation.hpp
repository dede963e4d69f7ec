#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stcrf/data.hpp"
#include "stcrf/model.hpp"
#include "stcrf/tensor.hpp"

namespace stcrf {

// Mean Euclidean error over all pedestrians and predicted steps. When
// `paper_literal` is set, normalization is by N only (the literal formula)
// instead of N * L_p.
double ade(const Tensor& predicted, const Tensor& truth, bool paper_literal = false);

// Mean Euclidean error at the final predicted step.
double fde(const Tensor& predicted, const Tensor& truth);

struct SceneMetrics {
  int window_index = 0;
  int num_pedestrians = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricReport {
  double ade = 0.0;
  double fde = 0.0;
  std::vector<SceneMetrics> per_scene;
  int window_count = 0;
};

MetricReport evaluate(const Model& model, const std::vector<SceneWindow>& dataset,
                      bool paper_literal = false);

void write_metric_report_csv(const MetricReport& report, std::ostream& out);

// Static SVG: observed solid, ground truth dashed, prediction dotted,
// one legend entry per pedestrian. Output bytes are deterministic.
void plot_trajectories(const SceneWindow& window, const Tensor& predicted,
                       const std::string& path);

}  // namespace stcrf
