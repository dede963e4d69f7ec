#pragma once

#include <map>
#include <string>
#include <vector>

#include "stcrf/crf.hpp"
#include "stcrf/data.hpp"
#include "stcrf/intention.hpp"
#include "stcrf/tensor.hpp"

namespace stcrf {

struct ModelConfig {
  int d_f = 5;
  int l_obs = 8;
  int l_pred = 12;
  RelativeMode relative_mode = RelativeMode::kInterPedestrianDiff;
  std::string edge_kernel = "inverse-distance";  // or "gaussian"
  double edge_cap = 1e4;
  double gaussian_sigma = 1.0;
};

struct Param {
  Tensor value;
  Tensor grad;
  Tensor momentum;
};

// Named parameter registry. std::map keeps serialization order stable.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<int> shape);
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  std::map<std::string, Param>& all() { return params_; }
  const std::map<std::string, Param>& all() const { return params_; }
  void zero_grads();

 private:
  std::map<std::string, Param> params_;
};

struct LossWeights {
  double w_space = 1.0;
  double w_time = 1.0;
  double w_traj = 1.0;
  bool use_space_crf = true;
  bool use_time_crf = true;
};

struct LossComponents {
  double space_nll = 0.0;
  double time_nll = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

struct Prediction {
  Tensor trajectory;          // [2, L_p, N], absolute coordinates
  LabelChain intention_lat;   // [N][L_p]
  LabelChain intention_lon;   // [N][L_p]
};

// The full predictor: relative-input encoder (two STGCN blocks + residual
// temporal CNN), time/space CRF heads, and the intention-gated trajectory
// decoder. Forward and backward are written out explicitly; gradients are
// verified against finite differences in the tests.
class Model {
 public:
  Model(ModelConfig config, unsigned seed);

  Prediction predict(const SceneWindow& window) const;

  // Forward pass plus gradient accumulation into the parameter store.
  // Gradients for disabled CRF heads are not touched.
  LossComponents loss_and_grads(const SceneWindow& window,
                                const IntentionLabels& labels,
                                const LossWeights& weights);

  // Forward-only loss evaluation (no gradient side effects).
  LossComponents loss(const SceneWindow& window, const IntentionLabels& labels,
                      const LossWeights& weights) const;

  // Spatial-temporal representation F_ST, [D_f, L_o, N]. Exposed for tests.
  Tensor encode(const SceneWindow& window) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }

 private:
  struct Cache;
  void forward(const SceneWindow& window, const IntentionLabels* labels,
               const LossWeights& weights, Cache& cache) const;
  void backward(const SceneWindow& window, const IntentionLabels& labels,
                const LossWeights& weights, Cache& cache);

  ModelConfig config_;
  ParamStore params_;
};

}  // namespace stcrf
