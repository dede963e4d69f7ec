#include "stcrf/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcrf/errors.hpp"

namespace stcrf {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void check_crf_shapes(const Tensor& emissions, const Tensor& transitions) {
  if (emissions.rank() != 3) throw ShapeMismatch("crf: emissions must be [B, L, K]");
  const int k = emissions.dim(2);
  if (transitions.rank() != 2 || transitions.dim(0) != k || transitions.dim(1) != k) {
    throw ShapeMismatch("crf: transitions must be [K, K] matching emissions");
  }
  if (emissions.dim(0) < 1 || emissions.dim(1) < 1 || k < 1) {
    throw ShapeMismatch("crf: empty emission tensor");
  }
}

std::vector<double> gold_score(const Tensor& emissions, const Tensor& transitions,
                               const LabelChain& labels) {
  check_crf_shapes(emissions, transitions);
  const int b = emissions.dim(0), l = emissions.dim(1), k = emissions.dim(2);
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeMismatch("gold_score: label batch mismatch");
  }
  std::vector<double> scores(static_cast<std::size_t>(b), 0.0);
  for (int c = 0; c < b; ++c) {
    const auto& y = labels[static_cast<std::size_t>(c)];
    if (static_cast<int>(y.size()) != l) throw ShapeMismatch("gold_score: label length mismatch");
    double s = 0.0;
    for (int t = 0; t < l; ++t) {
      const int yt = y[static_cast<std::size_t>(t)];
      if (yt < 0 || yt >= k) throw ShapeMismatch("gold_score: label out of range");
      s += emissions(c, t, yt);
      if (t + 1 < l) s += transitions(yt, y[static_cast<std::size_t>(t) + 1]);
    }
    scores[static_cast<std::size_t>(c)] = s;
  }
  return scores;
}

std::vector<double> log_partition(const Tensor& emissions, const Tensor& transitions) {
  check_crf_shapes(emissions, transitions);
  const int b = emissions.dim(0), l = emissions.dim(1), k = emissions.dim(2);
  std::vector<double> out(static_cast<std::size_t>(b), 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(k)), next(static_cast<std::size_t>(k));
  std::vector<double> terms(static_cast<std::size_t>(k));
  for (int c = 0; c < b; ++c) {
    for (int j = 0; j < k; ++j) alpha[static_cast<std::size_t>(j)] = emissions(c, 0, j);
    for (int t = 1; t < l; ++t) {
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
          terms[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(i)] + transitions(i, j);
        }
        next[static_cast<std::size_t>(j)] = emissions(c, t, j) + log_sum_exp(terms);
      }
      alpha.swap(next);
    }
    out[static_cast<std::size_t>(c)] = log_sum_exp(alpha);
  }
  return out;
}

std::vector<double> nll(const Tensor& emissions, const Tensor& transitions,
                        const LabelChain& labels) {
  std::vector<double> z = log_partition(emissions, transitions);
  std::vector<double> g = gold_score(emissions, transitions, labels);
  for (std::size_t c = 0; c < z.size(); ++c) z[c] -= g[c];
  return z;
}

double nll_mean_with_grad(const Tensor& emissions, const Tensor& transitions,
                          const LabelChain& labels, Tensor* d_emissions,
                          Tensor* d_transitions, double weight) {
  check_crf_shapes(emissions, transitions);
  const int b = emissions.dim(0), l = emissions.dim(1), k = emissions.dim(2);
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeMismatch("nll_mean_with_grad: label batch mismatch");
  }

  const double scale = weight / b;
  double total = 0.0;

  // Forward/backward messages in log space, per chain.
  Tensor fwd({l, k}), bwd({l, k});
  std::vector<double> terms(static_cast<std::size_t>(k));
  for (int c = 0; c < b; ++c) {
    const auto& y = labels[static_cast<std::size_t>(c)];
    if (static_cast<int>(y.size()) != l) throw ShapeMismatch("nll_mean_with_grad: label length");

    for (int j = 0; j < k; ++j) fwd(0, j) = emissions(c, 0, j);
    for (int t = 1; t < l; ++t) {
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
          terms[static_cast<std::size_t>(i)] = fwd(t - 1, i) + transitions(i, j);
        }
        fwd(t, j) = emissions(c, t, j) + log_sum_exp(terms);
      }
    }
    for (int j = 0; j < k; ++j) terms[static_cast<std::size_t>(j)] = fwd(l - 1, j);
    const double log_z = log_sum_exp(terms);

    for (int j = 0; j < k; ++j) bwd(l - 1, j) = 0.0;
    for (int t = l - 2; t >= 0; --t) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          terms[static_cast<std::size_t>(j)] = transitions(i, j) + emissions(c, t + 1, j) + bwd(t + 1, j);
        }
        bwd(t, i) = log_sum_exp(terms);
      }
    }

    double gold = 0.0;
    for (int t = 0; t < l; ++t) {
      const int yt = y[static_cast<std::size_t>(t)];
      gold += emissions(c, t, yt);
      if (t + 1 < l) gold += transitions(yt, y[static_cast<std::size_t>(t) + 1]);
    }
    total += log_z - gold;

    if (d_emissions != nullptr) {
      for (int t = 0; t < l; ++t) {
        for (int j = 0; j < k; ++j) {
          const double marginal = std::exp(fwd(t, j) + bwd(t, j) - log_z);
          double g = marginal;
          if (y[static_cast<std::size_t>(t)] == j) g -= 1.0;
          (*d_emissions)(c, t, j) += scale * g;
        }
      }
    }
    if (d_transitions != nullptr) {
      for (int t = 0; t + 1 < l; ++t) {
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            const double pair = std::exp(fwd(t, i) + transitions(i, j) +
                                         emissions(c, t + 1, j) + bwd(t + 1, j) - log_z);
            double g = pair;
            if (y[static_cast<std::size_t>(t)] == i && y[static_cast<std::size_t>(t) + 1] == j) {
              g -= 1.0;
            }
            (*d_transitions)(i, j) += scale * g;
          }
        }
      }
    }
  }
  return total / b;
}

LabelChain viterbi(const Tensor& emissions, const Tensor& transitions) {
  check_crf_shapes(emissions, transitions);
  const int b = emissions.dim(0), l = emissions.dim(1), k = emissions.dim(2);
  LabelChain paths(static_cast<std::size_t>(b));
  std::vector<double> score(static_cast<std::size_t>(k)), next(static_cast<std::size_t>(k));
  std::vector<std::vector<int>> back;
  for (int c = 0; c < b; ++c) {
    for (int j = 0; j < k; ++j) score[static_cast<std::size_t>(j)] = emissions(c, 0, j);
    back.assign(static_cast<std::size_t>(l), std::vector<int>(static_cast<std::size_t>(k), 0));
    for (int t = 1; t < l; ++t) {
      for (int j = 0; j < k; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int i = 0; i < k; ++i) {
          const double s = score[static_cast<std::size_t>(i)] + transitions(i, j);
          if (s > best) {  // strict: ties keep the smaller label index
            best = s;
            arg = i;
          }
        }
        next[static_cast<std::size_t>(j)] = best + emissions(c, t, j);
        back[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = arg;
      }
      score.swap(next);
    }
    int last = 0;
    double best = score[0];
    for (int j = 1; j < k; ++j) {
      if (score[static_cast<std::size_t>(j)] > best) {
        best = score[static_cast<std::size_t>(j)];
        last = j;
      }
    }
    std::vector<int> path(static_cast<std::size_t>(l));
    path[static_cast<std::size_t>(l) - 1] = last;
    for (int t = l - 1; t > 0; --t) {
      last = back[static_cast<std::size_t>(t)][static_cast<std::size_t>(last)];
      path[static_cast<std::size_t>(t) - 1] = last;
    }
    paths[static_cast<std::size_t>(c)] = std::move(path);
  }
  return paths;
}

OracleResult enumerate_oracle(const Tensor& emissions, const Tensor& transitions) {
  check_crf_shapes(emissions, transitions);
  const int b = emissions.dim(0), l = emissions.dim(1), k = emissions.dim(2);
  if (l > 8) throw ChainTooLong("enumerate_oracle: L > 8");

  OracleResult res;
  res.log_partition.assign(static_cast<std::size_t>(b), 0.0);
  res.best_path.assign(static_cast<std::size_t>(b), {});

  std::vector<int> path(static_cast<std::size_t>(l), 0);
  for (int c = 0; c < b; ++c) {
    std::vector<double> scores;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_path = path;
    std::fill(path.begin(), path.end(), 0);
    while (true) {
      double s = 0.0;
      for (int t = 0; t < l; ++t) {
        s += emissions(c, t, path[static_cast<std::size_t>(t)]);
        if (t + 1 < l) s += transitions(path[static_cast<std::size_t>(t)], path[static_cast<std::size_t>(t) + 1]);
      }
      scores.push_back(s);
      if (s > best) {  // lexicographic enumeration makes strict > the tie rule
        best = s;
        best_path = path;
      }
      // next path in lexicographic order, most-significant digit first
      int pos = l - 1;
      while (pos >= 0 && path[static_cast<std::size_t>(pos)] == k - 1) {
        path[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++path[static_cast<std::size_t>(pos)];
    }
    res.log_partition[static_cast<std::size_t>(c)] = log_sum_exp(scores);
    res.best_path[static_cast<std::size_t>(c)] = best_path;
  }
  return res;
}

}  // namespace stcrf
