#pragma once

#include <cassert>
#include <cstddef>
#include <utility>
#include <vector>

namespace stcrf {

// Dense row-major array of doubles. Everything in this project is rank 1-3.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (int d : shape_) n *= static_cast<std::size_t>(d);
    v_.assign(n, 0.0);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(int i) {
    assert(rank() == 1);
    return v_[static_cast<std::size_t>(i)];
  }
  double operator()(int i) const {
    assert(rank() == 1);
    return v_[static_cast<std::size_t>(i)];
  }
  double& operator()(int i, int j) {
    assert(rank() == 2);
    return v_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  double operator()(int i, int j) const {
    assert(rank() == 2);
    return v_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  double& operator()(int i, int j, int k) {
    assert(rank() == 3);
    return v_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(int i, int j, int k) const {
    assert(rank() == 3);
    return v_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  void fill(double x) { v_.assign(v_.size(), x); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int> shape_;
  std::vector<double> v_;
};

}  // namespace stcrf
