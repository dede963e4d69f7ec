#include "stcrf/model.hpp"

#include <cmath>
#include <random>

#include "stcrf/encoder.hpp"
#include "stcrf/errors.hpp"

namespace stcrf {

namespace {

double prelu_scalar(double x, double slope) { return x > 0.0 ? x : slope * x; }

Tensor prelu_fwd(const Tensor& x, double slope) {
  Tensor y = x;
  for (double& v : y.raw()) v = prelu_scalar(v, slope);
  return y;
}

void prelu_bwd(const Tensor& dy, const Tensor& x, double slope, Tensor& dx, double& dslope) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x.raw()[i];
    const double g = dy.raw()[i];
    if (xi > 0.0) {
      dx.raw()[i] += g;
    } else {
      dx.raw()[i] += slope * g;
      dslope += xi * g;
    }
  }
}

// out[d', t, n] = sum_{d, m} W[d, d'] X[d, t, m] A[t, m, n]
Tensor gcn_fwd(const Tensor& x, const Tensor& a_norm, const Tensor& w) {
  const int d_in = x.dim(0), l = x.dim(1), n = x.dim(2);
  const int d_out = w.dim(1);
  Tensor mixed({d_in, l, n});
  for (int d = 0; d < d_in; ++d)
    for (int t = 0; t < l; ++t)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int m = 0; m < n; ++m) s += x(d, t, m) * a_norm(t, m, j);
        mixed(d, t, j) = s;
      }
  Tensor out({d_out, l, n});
  for (int dp = 0; dp < d_out; ++dp)
    for (int t = 0; t < l; ++t)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int d = 0; d < d_in; ++d) s += w(d, dp) * mixed(d, t, j);
        out(dp, t, j) = s;
      }
  return out;
}

void gcn_bwd(const Tensor& dout, const Tensor& x, const Tensor& a_norm, const Tensor& w,
             Tensor* dx, Tensor& dw) {
  const int d_in = x.dim(0), l = x.dim(1), n = x.dim(2);
  const int d_out = w.dim(1);
  // reuse the mixed tensor for dW; d(mixed) for dX
  for (int d = 0; d < d_in; ++d)
    for (int dp = 0; dp < d_out; ++dp) {
      double s = 0.0;
      for (int t = 0; t < l; ++t)
        for (int j = 0; j < n; ++j) {
          double mixed = 0.0;
          for (int m = 0; m < n; ++m) mixed += x(d, t, m) * a_norm(t, m, j);
          s += mixed * dout(dp, t, j);
        }
      dw(d, dp) += s;
    }
  if (dx != nullptr) {
    for (int d = 0; d < d_in; ++d)
      for (int t = 0; t < l; ++t)
        for (int m = 0; m < n; ++m) {
          double s = 0.0;
          for (int dp = 0; dp < d_out; ++dp)
            for (int j = 0; j < n; ++j) s += w(d, dp) * a_norm(t, m, j) * dout(dp, t, j);
          (*dx)(d, t, m) += s;
        }
  }
}

void tconv_bwd(const Tensor& dout, const Tensor& x, const Tensor& kernel,
               Tensor* dx, Tensor& dkernel, Tensor& dbias) {
  const int d_in = x.dim(0), l = x.dim(1), n = x.dim(2);
  const int d_out = kernel.dim(0);
  for (int dp = 0; dp < d_out; ++dp)
    for (int t = 0; t < l; ++t)
      for (int i = 0; i < n; ++i) {
        const double g = dout(dp, t, i);
        dbias(dp) += g;
        for (int d = 0; d < d_in; ++d)
          for (int k = -1; k <= 1; ++k) {
            const int tt = t + k;
            if (tt < 0 || tt >= l) continue;
            dkernel(dp, d, k + 1) += g * x(d, tt, i);
            if (dx != nullptr) (*dx)(d, tt, i) += g * kernel(dp, d, k + 1);
          }
      }
}

// out[do, t, n] = b[do] + sum_d W[do, d] X[d, t, n]
Tensor lin_feat_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int d_in = x.dim(0), l = x.dim(1), n = x.dim(2);
  const int d_out = w.dim(0);
  Tensor out({d_out, l, n});
  for (int dp = 0; dp < d_out; ++dp)
    for (int t = 0; t < l; ++t)
      for (int i = 0; i < n; ++i) {
        double s = b(dp);
        for (int d = 0; d < d_in; ++d) s += w(dp, d) * x(d, t, i);
        out(dp, t, i) = s;
      }
  return out;
}

void lin_feat_bwd(const Tensor& dout, const Tensor& x, const Tensor& w, Tensor* dx,
                  Tensor& dw, Tensor& db) {
  const int d_in = x.dim(0), l = x.dim(1), n = x.dim(2);
  const int d_out = w.dim(0);
  for (int dp = 0; dp < d_out; ++dp)
    for (int t = 0; t < l; ++t)
      for (int i = 0; i < n; ++i) {
        const double g = dout(dp, t, i);
        db(dp) += g;
        for (int d = 0; d < d_in; ++d) {
          dw(dp, d) += g * x(d, t, i);
          if (dx != nullptr) (*dx)(d, t, i) += g * w(dp, d);
        }
      }
}

// out[d, to, n] = b[to] + sum_t W[to, t] X[d, t, n]
Tensor lin_time_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int d = x.dim(0), l_in = x.dim(1), n = x.dim(2);
  const int l_out = w.dim(0);
  Tensor out({d, l_out, n});
  for (int c = 0; c < d; ++c)
    for (int to = 0; to < l_out; ++to)
      for (int i = 0; i < n; ++i) {
        double s = b(to);
        for (int t = 0; t < l_in; ++t) s += w(to, t) * x(c, t, i);
        out(c, to, i) = s;
      }
  return out;
}

void lin_time_bwd(const Tensor& dout, const Tensor& x, const Tensor& w, Tensor* dx,
                  Tensor& dw, Tensor& db) {
  const int d = x.dim(0), l_in = x.dim(1), n = x.dim(2);
  const int l_out = w.dim(0);
  for (int c = 0; c < d; ++c)
    for (int to = 0; to < l_out; ++to)
      for (int i = 0; i < n; ++i) {
        const double g = dout(c, to, i);
        db(to) += g;
        for (int t = 0; t < l_in; ++t) {
          dw(to, t) += g * x(c, t, i);
          if (dx != nullptr) (*dx)(c, t, i) += g * w(to, t);
        }
      }
}

// CRF chain layouts: emissions tensors in the pipeline are [K, L, N]
// (time heads, chain over time per pedestrian) or [K, L_o, N] (space heads,
// chain over pedestrians per frame).
Tensor to_time_chains(const Tensor& e) {  // [3, Lp, N] -> [N, Lp, 3]
  const int k = e.dim(0), l = e.dim(1), n = e.dim(2);
  Tensor out({n, l, k});
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l; ++t)
      for (int j = 0; j < k; ++j) out(i, t, j) = e(j, t, i);
  return out;
}

void from_time_chains(const Tensor& d_chains, Tensor& d_e) {
  const int n = d_chains.dim(0), l = d_chains.dim(1), k = d_chains.dim(2);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l; ++t)
      for (int j = 0; j < k; ++j) d_e(j, t, i) += d_chains(i, t, j);
}

Tensor to_space_chains(const Tensor& e) {  // [3, Lo, N] -> [Lo, N, 3]
  const int k = e.dim(0), l = e.dim(1), n = e.dim(2);
  Tensor out({l, n, k});
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) out(t, i, j) = e(j, t, i);
  return out;
}

void from_space_chains(const Tensor& d_chains, Tensor& d_e) {
  const int l = d_chains.dim(0), n = d_chains.dim(1), k = d_chains.dim(2);
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) d_e(j, t, i) += d_chains(t, i, j);
}

LabelChain time_gold(const std::vector<std::vector<int>>& labels, int l_obs, int l_pred, int n) {
  LabelChain gold(static_cast<std::size_t>(n),
                  std::vector<int>(static_cast<std::size_t>(l_pred), 0));
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l_pred; ++t)
      gold[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
          labels[static_cast<std::size_t>(l_obs + t)][static_cast<std::size_t>(i)];
  return gold;
}

LabelChain space_gold(const std::vector<std::vector<int>>& labels, int l_obs) {
  return LabelChain(labels.begin(), labels.begin() + l_obs);
}

}  // namespace

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape) {
  Param p;
  p.value = Tensor(shape);
  p.grad = Tensor(shape);
  p.momentum = Tensor(std::move(shape));
  auto [it, fresh] = params_.emplace(name, std::move(p));
  if (!fresh) throw Error("duplicate parameter: " + name);
  return it->second.value;
}

Tensor& ParamStore::value(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return it->second.value;
}

const Tensor& ParamStore::value(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return it->second.value;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return it->second.grad;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

Model::Model(ModelConfig config, unsigned seed) : config_(config) {
  const int d = config_.d_f;
  const int lo = config_.l_obs;
  const int lp = config_.l_pred;
  if (lp < lo) throw Error("model requires l_pred >= l_obs (intention conv maps L_p to L_o)");
  const int kt = lp - lo + 1;

  params_.add("enc.gcn1.w", {2, d});
  params_.add("enc.prelu1.a", {1});
  params_.add("enc.tconv1.k", {d, d, 3});
  params_.add("enc.tconv1.b", {d});
  params_.add("enc.prelu2.a", {1});
  params_.add("enc.gcn2.w", {d, d});
  params_.add("enc.prelu3.a", {1});
  params_.add("enc.tconv2.k", {d, d, 3});
  params_.add("enc.tconv2.b", {d});
  params_.add("enc.prelu4.a", {1});
  params_.add("enc.out.k", {d, d, 3});
  params_.add("enc.out.b", {d});
  params_.add("enc.res.w", {d, d});
  params_.add("enc.res.b", {d});
  params_.add("enc.prelu5.a", {1});

  for (const char* axis : {"lat", "lon"}) {
    const std::string ax(axis);
    params_.add("head.time." + ax + ".feat.w", {3, d});
    params_.add("head.time." + ax + ".feat.b", {3});
    params_.add("head.time." + ax + ".time.w", {lp, lo});
    params_.add("head.time." + ax + ".time.b", {lp});
    params_.add("head.space." + ax + ".w", {3, d});
    params_.add("head.space." + ax + ".b", {3});
    params_.add("crf.time." + ax + ".trans", {3, 3});
    params_.add("crf.space." + ax + ".trans", {3, 3});
  }

  params_.add("fi.conv.k", {d, 2 * kNumIntentionLabels, kt});
  params_.add("fi.conv.b", {d});
  params_.add("gate.w", {d});
  params_.add("dec.feat.w", {2, d});
  params_.add("dec.feat.b", {2});
  params_.add("dec.time.w", {lp, lo});
  params_.add("dec.time.b", {lp});

  // fan-in for the scaled init below: weights are [out, in, ...] except the
  // GCN mats, which are [in, out]
  auto fan_in = [](const std::string& name, const Tensor& t) -> int {
    if (name.find("gcn") != std::string::npos) return t.dim(0);
    int f = 1;
    for (int i = 1; i < t.rank(); ++i) f *= t.dim(i);
    return f;
  };

  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& [name, p] : params_.all()) {
    if (name.find(".b") != std::string::npos && name.find(".b") == name.size() - 2) continue;
    if (name.find("prelu") != std::string::npos) {
      p.value.fill(0.25);
      continue;
    }
    if (name == "gate.w") {
      p.value.fill(0.1);
      continue;
    }
    if (name.find("crf.") == 0) {
      for (double& v : p.value.raw()) v = 0.002 * dist(rng);
      continue;
    }
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(fan_in(name, p.value)));
    for (double& v : p.value.raw()) v = std_dev * dist(rng);
  }
}

struct Model::Cache {
  Tensor a_norm;  // [Lo, N, N]
  Tensor xbar;    // [2, Lo, N]
  Tensor g1, p1, c1, b1;
  Tensor g2, p2, c2, b2;
  Tensor t3, res, f_pre, f_st;
  Tensor e_feat_lat, e_feat_lon;    // [3, Lo, N]
  Tensor e_time_lat, e_time_lon;    // [3, Lp, N]
  Tensor e_space_lat, e_space_lon;  // [3, Lo, N]
  LabelChain ip_lat, ip_lon;        // [N][Lp]
  Tensor onehot;                    // [6, Lp, N]
  Tensor f_i, fused, u, rel, yhat;
  LossComponents loss;
};

void Model::forward(const SceneWindow& window, const IntentionLabels* labels,
                    const LossWeights& weights, Cache& c) const {
  const int lo = config_.l_obs;
  const int lp = config_.l_pred;
  const int d = config_.d_f;
  if (window.obs_len() != lo || window.pred_len() != lp) {
    throw ShapeMismatch("window length does not match model config");
  }
  const int n = window.num_pedestrians();
  const auto& ps = params_;

  EdgeKernel kernel = config_.edge_kernel == "gaussian"
                          ? gaussian_kernel(config_.gaussian_sigma)
                          : inverse_distance_kernel(config_.edge_cap);
  c.a_norm = normalize_adjacency_seq(build_graphs(window.observed, kernel));
  c.xbar = to_relative(window, config_.relative_mode).values;

  // STGCN block 1
  c.g1 = gcn_fwd(c.xbar, c.a_norm, ps.value("enc.gcn1.w"));
  c.p1 = prelu_fwd(c.g1, ps.value("enc.prelu1.a")(0));
  c.c1 = temporal_conv3(c.p1, ps.value("enc.tconv1.k"), ps.value("enc.tconv1.b"));
  c.b1 = prelu_fwd(c.c1, ps.value("enc.prelu2.a")(0));
  // STGCN block 2
  c.g2 = gcn_fwd(c.b1, c.a_norm, ps.value("enc.gcn2.w"));
  c.p2 = prelu_fwd(c.g2, ps.value("enc.prelu3.a")(0));
  c.c2 = temporal_conv3(c.p2, ps.value("enc.tconv2.k"), ps.value("enc.tconv2.b"));
  c.b2 = prelu_fwd(c.c2, ps.value("enc.prelu4.a")(0));
  // output stage: temporal conv with a 1x1 residual on the stage input
  c.t3 = temporal_conv3(c.b2, ps.value("enc.out.k"), ps.value("enc.out.b"));
  c.res = lin_feat_fwd(c.b2, ps.value("enc.res.w"), ps.value("enc.res.b"));
  c.f_pre = c.t3;
  for (std::size_t i = 0; i < c.f_pre.size(); ++i) c.f_pre.raw()[i] += c.res.raw()[i];
  c.f_st = prelu_fwd(c.f_pre, ps.value("enc.prelu5.a")(0));

  // heads
  c.e_feat_lat = lin_feat_fwd(c.f_st, ps.value("head.time.lat.feat.w"),
                              ps.value("head.time.lat.feat.b"));
  c.e_time_lat = lin_time_fwd(c.e_feat_lat, ps.value("head.time.lat.time.w"),
                              ps.value("head.time.lat.time.b"));
  c.e_feat_lon = lin_feat_fwd(c.f_st, ps.value("head.time.lon.feat.w"),
                              ps.value("head.time.lon.feat.b"));
  c.e_time_lon = lin_time_fwd(c.e_feat_lon, ps.value("head.time.lon.time.w"),
                              ps.value("head.time.lon.time.b"));
  c.e_space_lat = lin_feat_fwd(c.f_st, ps.value("head.space.lat.w"),
                               ps.value("head.space.lat.b"));
  c.e_space_lon = lin_feat_fwd(c.f_st, ps.value("head.space.lon.w"),
                               ps.value("head.space.lon.b"));

  // future intentions by Viterbi (no gradient through the discrete path)
  c.ip_lat = viterbi(to_time_chains(c.e_time_lat), ps.value("crf.time.lat.trans"));
  c.ip_lon = viterbi(to_time_chains(c.e_time_lon), ps.value("crf.time.lon.trans"));

  c.onehot = Tensor({2 * kNumIntentionLabels, lp, n});
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < lp; ++t) {
      c.onehot(c.ip_lat[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)], t, i) = 1.0;
      c.onehot(kNumIntentionLabels +
                   c.ip_lon[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)],
               t, i) = 1.0;
    }

  // F_I: valid conv over time, length L_p -> L_o, channels 6 -> D_f
  const Tensor& ki = ps.value("fi.conv.k");
  const Tensor& bi = ps.value("fi.conv.b");
  const int kt = ki.dim(2);
  c.f_i = Tensor({d, lo, n});
  for (int dp = 0; dp < d; ++dp)
    for (int t = 0; t < lo; ++t)
      for (int i = 0; i < n; ++i) {
        double s = bi(dp);
        for (int ch = 0; ch < 2 * kNumIntentionLabels; ++ch)
          for (int j = 0; j < kt; ++j) s += ki(dp, ch, j) * c.onehot(ch, t + j, i);
        c.f_i(dp, t, i) = s;
      }

  // gated fusion + decoder
  const Tensor& gate = ps.value("gate.w");
  c.fused = c.f_st;
  for (int dp = 0; dp < d; ++dp)
    for (int t = 0; t < lo; ++t)
      for (int i = 0; i < n; ++i) c.fused(dp, t, i) += gate(dp) * c.f_i(dp, t, i);

  c.u = lin_feat_fwd(c.fused, ps.value("dec.feat.w"), ps.value("dec.feat.b"));
  c.rel = lin_time_fwd(c.u, ps.value("dec.time.w"), ps.value("dec.time.b"));

  c.yhat = Tensor({2, lp, n});
  for (int ax = 0; ax < 2; ++ax)
    for (int i = 0; i < n; ++i) {
      double acc = window.observed(ax, lo - 1, i);
      for (int t = 0; t < lp; ++t) {
        acc += c.rel(ax, t, i);
        c.yhat(ax, t, i) = acc;
      }
    }

  // CRF loss components are filled in by loss()/backward()
  c.loss = LossComponents{};
  if (labels != nullptr) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < c.yhat.size(); ++i) {
      l1 += std::abs(c.yhat.raw()[i] - window.future.raw()[i]);
    }
    c.loss.l1 = l1 / static_cast<double>(c.yhat.size());
  }
  (void)weights;
}

LossComponents Model::loss_and_grads(const SceneWindow& window,
                                     const IntentionLabels& labels,
                                     const LossWeights& weights) {
  Cache c;
  forward(window, &labels, weights, c);
  backward(window, labels, weights, c);
  return c.loss;
}

LossComponents Model::loss(const SceneWindow& window, const IntentionLabels& labels,
                           const LossWeights& weights) const {
  Cache c;
  forward(window, &labels, weights, c);
  // CRF components without gradient side effects
  const int lo = config_.l_obs;
  const int lp = config_.l_pred;
  const int n = window.num_pedestrians();
  LossComponents out = c.loss;
  if (weights.use_time_crf) {
    auto lat = nll(to_time_chains(c.e_time_lat), params_.value("crf.time.lat.trans"),
                   time_gold(labels.alpha, lo, lp, n));
    auto lon = nll(to_time_chains(c.e_time_lon), params_.value("crf.time.lon.trans"),
                   time_gold(labels.beta, lo, lp, n));
    double s = 0.0;
    for (double v : lat) s += v;
    for (double v : lon) s += v;
    out.time_nll = s / static_cast<double>(lat.size());
  }
  if (weights.use_space_crf) {
    auto lat = nll(to_space_chains(c.e_space_lat), params_.value("crf.space.lat.trans"),
                   space_gold(labels.alpha, lo));
    auto lon = nll(to_space_chains(c.e_space_lon), params_.value("crf.space.lon.trans"),
                   space_gold(labels.beta, lo));
    double s = 0.0;
    for (double v : lat) s += v;
    for (double v : lon) s += v;
    out.space_nll = s / static_cast<double>(lat.size());
  }
  out.total = weights.w_space * out.space_nll + weights.w_time * out.time_nll +
              weights.w_traj * out.l1;
  if (!std::isfinite(out.total)) throw NonFiniteLoss("non-finite total loss");
  return out;
}

void Model::backward(const SceneWindow& window, const IntentionLabels& labels,
                     const LossWeights& weights, Cache& c) {
  const int lo = config_.l_obs;
  const int lp = config_.l_pred;
  const int d = config_.d_f;
  const int n = window.num_pedestrians();
  auto& ps = params_;

  Tensor d_f_st({d, lo, n});

  // trajectory L1 through the cumulative-sum decoder
  const double inv = 1.0 / static_cast<double>(c.yhat.size());
  double l1 = 0.0;
  Tensor d_yhat({2, lp, n});
  for (std::size_t i = 0; i < c.yhat.size(); ++i) {
    const double diff = c.yhat.raw()[i] - window.future.raw()[i];
    l1 += std::abs(diff);
    d_yhat.raw()[i] = weights.w_traj * inv * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
  }
  c.loss.l1 = l1 * inv;

  Tensor d_rel({2, lp, n});
  for (int ax = 0; ax < 2; ++ax)
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int t = lp - 1; t >= 0; --t) {
        acc += d_yhat(ax, t, i);
        d_rel(ax, t, i) = acc;
      }
    }

  Tensor d_u({2, lo, n});
  lin_time_bwd(d_rel, c.u, ps.value("dec.time.w"), &d_u, ps.grad("dec.time.w"),
               ps.grad("dec.time.b"));
  Tensor d_fused({d, lo, n});
  lin_feat_bwd(d_u, c.fused, ps.value("dec.feat.w"), &d_fused, ps.grad("dec.feat.w"),
               ps.grad("dec.feat.b"));

  // gate: fused = f_st + gate * f_i (f_i carries no gradient past the conv)
  const Tensor& gate = ps.value("gate.w");
  Tensor& d_gate = ps.grad("gate.w");
  Tensor d_f_i({d, lo, n});
  for (int dp = 0; dp < d; ++dp)
    for (int t = 0; t < lo; ++t)
      for (int i = 0; i < n; ++i) {
        const double g = d_fused(dp, t, i);
        d_f_st(dp, t, i) += g;
        d_gate(dp) += g * c.f_i(dp, t, i);
        d_f_i(dp, t, i) = g * gate(dp);
      }

  // F_I convolution (one-hot input is constant)
  const Tensor& ki = ps.value("fi.conv.k");
  Tensor& d_ki = ps.grad("fi.conv.k");
  Tensor& d_bi = ps.grad("fi.conv.b");
  const int kt = ki.dim(2);
  for (int dp = 0; dp < d; ++dp)
    for (int t = 0; t < lo; ++t)
      for (int i = 0; i < n; ++i) {
        const double g = d_f_i(dp, t, i);
        d_bi(dp) += g;
        for (int ch = 0; ch < 2 * kNumIntentionLabels; ++ch)
          for (int j = 0; j < kt; ++j) d_ki(dp, ch, j) += g * c.onehot(ch, t + j, i);
      }

  // time CRF heads
  if (weights.use_time_crf) {
    double time_nll_sum = 0.0;
    for (const char* axis : {"lat", "lon"}) {
      const std::string ax(axis);
      const bool is_lat = ax == "lat";
      const Tensor& e = is_lat ? c.e_time_lat : c.e_time_lon;
      const Tensor& e_feat = is_lat ? c.e_feat_lat : c.e_feat_lon;
      Tensor chains = to_time_chains(e);
      LabelChain gold = time_gold(is_lat ? labels.alpha : labels.beta, lo, lp, n);
      Tensor d_chains({n, lp, kNumIntentionLabels});
      time_nll_sum += nll_mean_with_grad(chains, ps.value("crf.time." + ax + ".trans"),
                                         gold, &d_chains,
                                         &ps.grad("crf.time." + ax + ".trans"),
                                         weights.w_time);
      // w_time is already folded into d_chains via `weight`
      Tensor d_e({kNumIntentionLabels, lp, n});
      from_time_chains(d_chains, d_e);
      Tensor d_e_feat({kNumIntentionLabels, lo, n});
      lin_time_bwd(d_e, e_feat, ps.value("head.time." + ax + ".time.w"), &d_e_feat,
                   ps.grad("head.time." + ax + ".time.w"),
                   ps.grad("head.time." + ax + ".time.b"));
      lin_feat_bwd(d_e_feat, c.f_st, ps.value("head.time." + ax + ".feat.w"), &d_f_st,
                   ps.grad("head.time." + ax + ".feat.w"),
                   ps.grad("head.time." + ax + ".feat.b"));
    }
    c.loss.time_nll = time_nll_sum;
  }

  // space CRF heads
  if (weights.use_space_crf) {
    double space_nll_sum = 0.0;
    for (const char* axis : {"lat", "lon"}) {
      const std::string ax(axis);
      const bool is_lat = ax == "lat";
      const Tensor& e = is_lat ? c.e_space_lat : c.e_space_lon;
      Tensor chains = to_space_chains(e);
      LabelChain gold = space_gold(is_lat ? labels.alpha : labels.beta, lo);
      Tensor d_chains({lo, n, kNumIntentionLabels});
      space_nll_sum += nll_mean_with_grad(chains, ps.value("crf.space." + ax + ".trans"),
                                          gold, &d_chains,
                                          &ps.grad("crf.space." + ax + ".trans"),
                                          weights.w_space);
      Tensor d_e({kNumIntentionLabels, lo, n});
      from_space_chains(d_chains, d_e);
      lin_feat_bwd(d_e, c.f_st, ps.value("head.space." + ax + ".w"), &d_f_st,
                   ps.grad("head.space." + ax + ".w"),
                   ps.grad("head.space." + ax + ".b"));
    }
    c.loss.space_nll = space_nll_sum;
  }

  // encoder output stage
  Tensor d_f_pre({d, lo, n});
  double d_slope5 = 0.0;
  prelu_bwd(d_f_st, c.f_pre, ps.value("enc.prelu5.a")(0), d_f_pre, d_slope5);
  ps.grad("enc.prelu5.a")(0) += d_slope5;

  Tensor d_b2({d, lo, n});
  tconv_bwd(d_f_pre, c.b2, ps.value("enc.out.k"), &d_b2, ps.grad("enc.out.k"),
            ps.grad("enc.out.b"));
  lin_feat_bwd(d_f_pre, c.b2, ps.value("enc.res.w"), &d_b2, ps.grad("enc.res.w"),
               ps.grad("enc.res.b"));

  // block 2
  Tensor d_c2({d, lo, n});
  double d_slope4 = 0.0;
  prelu_bwd(d_b2, c.c2, ps.value("enc.prelu4.a")(0), d_c2, d_slope4);
  ps.grad("enc.prelu4.a")(0) += d_slope4;
  Tensor d_p2({d, lo, n});
  tconv_bwd(d_c2, c.p2, ps.value("enc.tconv2.k"), &d_p2, ps.grad("enc.tconv2.k"),
            ps.grad("enc.tconv2.b"));
  Tensor d_g2({d, lo, n});
  double d_slope3 = 0.0;
  prelu_bwd(d_p2, c.g2, ps.value("enc.prelu3.a")(0), d_g2, d_slope3);
  ps.grad("enc.prelu3.a")(0) += d_slope3;
  Tensor d_b1({d, lo, n});
  gcn_bwd(d_g2, c.b1, c.a_norm, ps.value("enc.gcn2.w"), &d_b1, ps.grad("enc.gcn2.w"));

  // block 1
  Tensor d_c1({d, lo, n});
  double d_slope2 = 0.0;
  prelu_bwd(d_b1, c.c1, ps.value("enc.prelu2.a")(0), d_c1, d_slope2);
  ps.grad("enc.prelu2.a")(0) += d_slope2;
  Tensor d_p1({d, lo, n});
  tconv_bwd(d_c1, c.p1, ps.value("enc.tconv1.k"), &d_p1, ps.grad("enc.tconv1.k"),
            ps.grad("enc.tconv1.b"));
  Tensor d_g1({d, lo, n});
  double d_slope1 = 0.0;
  prelu_bwd(d_p1, c.g1, ps.value("enc.prelu1.a")(0), d_g1, d_slope1);
  ps.grad("enc.prelu1.a")(0) += d_slope1;
  gcn_bwd(d_g1, c.xbar, c.a_norm, ps.value("enc.gcn1.w"), nullptr, ps.grad("enc.gcn1.w"));

  c.loss.total = weights.w_space * c.loss.space_nll + weights.w_time * c.loss.time_nll +
                 weights.w_traj * c.loss.l1;
  if (!std::isfinite(c.loss.total)) {
    std::string which = !std::isfinite(c.loss.l1)         ? "trajectory L1"
                        : !std::isfinite(c.loss.time_nll) ? "time CRF"
                                                          : "space CRF";
    throw NonFiniteLoss("non-finite loss component: " + which);
  }
}

Tensor Model::encode(const SceneWindow& window) const {
  Cache c;
  forward(window, nullptr, LossWeights{}, c);
  return c.f_st;
}

Prediction Model::predict(const SceneWindow& window) const {
  Cache c;
  forward(window, nullptr, LossWeights{}, c);
  Prediction p;
  p.trajectory = c.yhat;
  p.intention_lat = c.ip_lat;
  p.intention_lon = c.ip_lon;
  return p;
}

}  // namespace stcrf
