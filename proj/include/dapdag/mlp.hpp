#pragma once

// Small fully connected network with ELU hidden layers and a linear output,
// with a hand-written backward pass. Used for the encoder's two set-element
// networks and for the merged-data baseline.

#include <dapdag/numerics.hpp>

#include <random>
#include <vector>

namespace dapdag {

class Mlp {
 public:
  Mlp() = default;

  /// sizes = {in, hidden..., out}
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw NumericError("Mlp: need at least input and output sizes");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l], sizes_[l + 1]));
      biases_.push_back(Matrix::Zero(1, sizes_[l + 1]));
    }
  }

  /// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) on weights and biases.
  template <class Rng>
  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double bound = std::sqrt(1.0 / static_cast<double>(weights_[l].rows()));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index k = 0; k < weights_[l].size(); ++k) weights_[l].data()[k] = u(rng);
      for (Eigen::Index k = 0; k < biases_[l].size(); ++k) biases_[l].data()[k] = u(rng);
    }
  }

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t layer_count() const { return weights_.size(); }

  Matrix& weight(std::size_t l) { return weights_[l]; }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  Matrix& bias(std::size_t l) { return biases_[l]; }
  const Matrix& bias(std::size_t l) const { return biases_[l]; }

  /// Parameters in a fixed order: W0, b0, W1, b1, ...
  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }
  std::vector<const Matrix*> parameters() const {
    std::vector<const Matrix*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }

  struct Cache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> preacts;      // pre-activation of each layer
    Matrix output;
  };

  Matrix forward(const Matrix& x) const {
    Matrix h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix a = h * weights_[l];
      a.rowwise() += biases_[l].row(0);
      h = (l + 1 < weights_.size()) ? elu(a) : a;
    }
    return h;
  }

  Matrix forward(const Matrix& x, Cache& cache) const {
    cache.inputs.clear();
    cache.preacts.clear();
    Matrix h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      cache.inputs.push_back(h);
      Matrix a = h * weights_[l];
      a.rowwise() += biases_[l].row(0);
      cache.preacts.push_back(a);
      h = (l + 1 < weights_.size()) ? elu(a) : a;
    }
    cache.output = h;
    return h;
  }

  /// Gradients in parameters() order. Optionally returns dL/dx.
  std::vector<Matrix> backward(const Cache& cache, const Matrix& d_out,
                               Matrix* d_input = nullptr) const {
    std::vector<Matrix> grads(2 * weights_.size());
    Matrix delta = d_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      if (l + 1 < weights_.size()) delta = delta.cwiseProduct(elu_grad(cache.preacts[l]));
      grads[2 * l] = cache.inputs[l].transpose() * delta;
      grads[2 * l + 1] = delta.colwise().sum();
      if (l > 0 || d_input != nullptr) {
        Matrix next = delta * weights_[l].transpose();
        if (l == 0) {
          *d_input = std::move(next);
        } else {
          delta = std::move(next);
        }
      }
    }
    return grads;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
};

}  // namespace dapdag
