#pragma once

#include <functional>
#include <vector>

#include "stcrf/tensor.hpp"

namespace stcrf {

// Per-frame pedestrian interaction graphs and the GCN/temporal-conv
// primitives of the spatial-temporal encoder. Training-time backward passes
// live in model.cpp; these are the forward building blocks and are also used
// directly by tests.

using EdgeKernel = std::function<double(double distance)>;

// 1 / ||p_i - p_j||, clamped at `cap` for coincident pedestrians.
EdgeKernel inverse_distance_kernel(double cap = 1e4);
EdgeKernel gaussian_kernel(double sigma);

// A[t][i][j] = kernel(distance at frame t) for i != j, zero diagonal.
// Returns [L, N, N], symmetric per frame.
Tensor build_graphs(const Tensor& positions, const EdgeKernel& kernel);

// D^{-1/2} (A + I) D^{-1/2} for one frame's adjacency (self-loops added
// here; input has zero diagonal). D is the diagonal of row sums of A + I.
Tensor normalize_adjacency(const Tensor& adjacency);

// All frames at once: [L, N, N] -> [L, N, N] of normalized Â.
Tensor normalize_adjacency_seq(const Tensor& adjacency_seq);

// out[d', n] = sigma( sum_{d, m} W[d, d'] F[d, m] A_norm[m, n] ).
// F is [D, N], A_norm [N, N], W [D, D']. `sigma` applied elementwise;
// pass nullptr for identity.
Tensor gcn_layer(const Tensor& features, const Tensor& a_norm, const Tensor& weight,
                 const std::function<double(double)>& sigma);

// 3x1 temporal convolution with same-length zero padding over the time axis.
// in [D, L, N], kernel [D', D, 3], bias [D'] -> [D', L, N].
Tensor temporal_conv3(const Tensor& input, const Tensor& kernel, const Tensor& bias);

struct StgcnBlockWeights {
  Tensor gcn_w;         // [D_in, D_out]
  double prelu_gcn = 0.25;
  Tensor tconv_kernel;  // [D_out, D_out, 3]
  Tensor tconv_bias;    // [D_out]
  double prelu_tconv = 0.25;
};

// Per-frame GCN, activation, 3x1 temporal convolution, activation.
// features [D_in, L, N], a_norm_seq [L, N, N] -> [D_out, L, N]. L >= 3.
Tensor stgcn_block(const Tensor& features, const Tensor& a_norm_seq,
                   const StgcnBlockWeights& weights);

}  // namespace stcrf
