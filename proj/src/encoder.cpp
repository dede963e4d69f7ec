#include "stcrf/encoder.hpp"

#include <cassert>
#include <cmath>

#include "stcrf/errors.hpp"

namespace stcrf {

EdgeKernel inverse_distance_kernel(double cap) {
  return [cap](double d) { return d > 0.0 ? std::min(1.0 / d, cap) : cap; };
}

EdgeKernel gaussian_kernel(double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  return [inv](double d) { return std::exp(-d * d * inv); };
}

Tensor build_graphs(const Tensor& positions, const EdgeKernel& kernel) {
  if (positions.rank() != 3 || positions.dim(0) != 2) {
    throw ShapeMismatch("build_graphs: positions must be [2, L, N]");
  }
  const int l = positions.dim(1);
  const int n = positions.dim(2);
  Tensor a({l, n, n});
  for (int t = 0; t < l; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = positions(0, t, i) - positions(0, t, j);
        const double dy = positions(1, t, i) - positions(1, t, j);
        const double w = kernel(std::hypot(dx, dy));
        a(t, i, j) = w;
        a(t, j, i) = w;
      }
    }
  }
  return a;
}

Tensor normalize_adjacency(const Tensor& adjacency) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw ShapeMismatch("normalize_adjacency: expected square [N, N]");
  }
  const int n = adjacency.dim(0);
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double deg = 1.0;  // self loop
    for (int j = 0; j < n; ++j) deg += adjacency(i, j);
    assert(deg > 0.0 && "ZeroDegree impossible after self-loop addition");
    inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  Tensor out({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a_hat = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      out(i, j) = inv_sqrt_deg[static_cast<std::size_t>(i)] * a_hat *
                  inv_sqrt_deg[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

Tensor normalize_adjacency_seq(const Tensor& adjacency_seq) {
  const int l = adjacency_seq.dim(0);
  const int n = adjacency_seq.dim(1);
  Tensor out({l, n, n});
  Tensor frame({n, n});
  for (int t = 0; t < l; ++t) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) frame(i, j) = adjacency_seq(t, i, j);
    Tensor norm = normalize_adjacency(frame);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(t, i, j) = norm(i, j);
  }
  return out;
}

Tensor gcn_layer(const Tensor& features, const Tensor& a_norm, const Tensor& weight,
                 const std::function<double(double)>& sigma) {
  if (features.rank() != 2 || a_norm.rank() != 2 || weight.rank() != 2) {
    throw ShapeMismatch("gcn_layer: rank mismatch");
  }
  const int d_in = features.dim(0);
  const int n = features.dim(1);
  if (a_norm.dim(0) != n || a_norm.dim(1) != n || weight.dim(0) != d_in) {
    throw ShapeMismatch("gcn_layer: dimension mismatch");
  }
  const int d_out = weight.dim(1);

  // mixed[d, n] = sum_m F[d, m] A[m, n]
  Tensor mixed({d_in, n});
  for (int d = 0; d < d_in; ++d) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += features(d, m) * a_norm(m, j);
      mixed(d, j) = s;
    }
  }
  Tensor out({d_out, n});
  for (int dp = 0; dp < d_out; ++dp) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int d = 0; d < d_in; ++d) s += weight(d, dp) * mixed(d, j);
      out(dp, j) = sigma ? sigma(s) : s;
    }
  }
  return out;
}

Tensor temporal_conv3(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  if (input.rank() != 3 || kernel.rank() != 3 || kernel.dim(2) != 3) {
    throw ShapeMismatch("temporal_conv3: expected input [D, L, N], kernel [D', D, 3]");
  }
  const int d_in = input.dim(0);
  const int l = input.dim(1);
  const int n = input.dim(2);
  if (kernel.dim(1) != d_in || bias.dim(0) != kernel.dim(0)) {
    throw ShapeMismatch("temporal_conv3: kernel/bias mismatch");
  }
  const int d_out = kernel.dim(0);

  Tensor out({d_out, l, n});
  for (int dp = 0; dp < d_out; ++dp) {
    for (int t = 0; t < l; ++t) {
      for (int i = 0; i < n; ++i) {
        double s = bias(dp);
        for (int d = 0; d < d_in; ++d) {
          for (int k = -1; k <= 1; ++k) {
            const int tt = t + k;
            if (tt < 0 || tt >= l) continue;
            s += kernel(dp, d, k + 1) * input(d, tt, i);
          }
        }
        out(dp, t, i) = s;
      }
    }
  }
  return out;
}

Tensor stgcn_block(const Tensor& features, const Tensor& a_norm_seq,
                   const StgcnBlockWeights& weights) {
  if (features.rank() != 3 || features.dim(1) < 3) {
    throw ShapeMismatch("stgcn_block: expected [D, L, N] with L >= 3");
  }
  const int d_in = features.dim(0);
  const int l = features.dim(1);
  const int n = features.dim(2);
  const int d_out = weights.gcn_w.dim(1);

  Tensor frame_f({d_in, n});
  Tensor frame_a({n, n});
  Tensor hidden({d_out, l, n});
  for (int t = 0; t < l; ++t) {
    for (int d = 0; d < d_in; ++d)
      for (int i = 0; i < n; ++i) frame_f(d, i) = features(d, t, i);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) frame_a(i, j) = a_norm_seq(t, i, j);
    const double slope = weights.prelu_gcn;
    Tensor out = gcn_layer(frame_f, frame_a, weights.gcn_w,
                           [slope](double x) { return x > 0.0 ? x : slope * x; });
    for (int d = 0; d < d_out; ++d)
      for (int i = 0; i < n; ++i) hidden(d, t, i) = out(d, i);
  }
  Tensor conv = temporal_conv3(hidden, weights.tconv_kernel, weights.tconv_bias);
  for (double& v : conv.raw()) {
    if (v < 0.0) v *= weights.prelu_tconv;
  }
  return conv;
}

}  // namespace stcrf
