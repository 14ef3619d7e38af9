#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "c2s/rng.hpp"

namespace c2s {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Tanh, Relu };

const char* to_string(Activation a);
Activation parse_activation(const std::string& s);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter Adam moments, shaped like the parameter list it serves.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<Matrix*>& params);
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr,
            const AdamSettings& settings = {});
  long steps() const { return steps_; }

 private:
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long steps_ = 0;
};

// Fully connected feed-forward net: hidden layers use the selected
// activation, the output layer is linear. Trained on mean squared error.
class DenseNet {
 public:
  DenseNet() = default;
  // Glorot-uniform weights, zero biases.
  DenseNet(std::vector<int> layer_sizes, Activation hidden, Rng& rng);
  static DenseNet zeros(std::vector<int> layer_sizes, Activation hidden);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t num_parameters() const;

  Matrix& weights(std::size_t layer) { return weights_.at(layer); }
  const Matrix& weights(std::size_t layer) const { return weights_.at(layer); }
  Matrix& biases(std::size_t layer) { return biases_.at(layer); }
  const Matrix& biases(std::size_t layer) const { return biases_.at(layer); }

  Vector forward(const Vector& input) const;
  // Column-per-sample batch forward pass.
  Matrix forward_batch(const Matrix& inputs) const;
  // Hidden-layer activations for one input (one entry per hidden layer).
  std::vector<Vector> hidden_activations(const Vector& input) const;

  // Mean of squared errors over all samples and outputs.
  double loss(const Matrix& inputs, const Matrix& targets) const;
  // Loss and its gradient w.r.t. every parameter (weights, biases alternating
  // per layer, matching parameters()).
  double loss_and_gradients(const Matrix& inputs, const Matrix& targets,
                            std::vector<Matrix>& grads) const;
  // One Adam step; returns the loss before the step.
  double train_batch(const Matrix& inputs, const Matrix& targets, double lr);

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  long optimizer_steps() const { return adam_.steps(); }

  void save(std::ostream& os) const;
  static DenseNet load(std::istream& is);
  void save_file(const std::string& path) const;
  static DenseNet load_file(const std::string& path);

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<int> sizes_;
  Activation hidden_ = Activation::Tanh;
  std::vector<Matrix> weights_;  // out x in
  std::vector<Matrix> biases_;   // out x 1
  AdamState adam_;
};

// Largest relative error between analytic and central-difference gradients
// of the MSE loss on one (input, target) pair. Relative error is
// |a - n| / max(|a|, |n|, floor).
double gradient_check(const DenseNet& net, const Vector& input, const Vector& target,
                      double step = 1e-5, double floor = 1e-6);

// Versioned text tensor list used for every checkpoint in the project.
struct TensorFile {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<Matrix> tensors;
};

void write_tensors(std::ostream& os, const TensorFile& file);
TensorFile read_tensors(std::istream& is);

// Fixed-capacity FIFO ring of transitions with uniform sampling without
// replacement.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
    ++pushed_;
  }

  // n distinct items in random order; every item when size() <= n.
  std::vector<T> sample(Rng& rng, std::size_t n) const {
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(n, idx.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<T> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(items_[idx[i]]);
    return out;
  }

  // Oldest first.
  const T& at(std::size_t i) const { return items_.at((head_ + i) % items_.size()); }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_pushed() const { return pushed_; }
  bool empty() const { return items_.empty(); }

 private:
  std::size_t capacity_;
  std::vector<T> items_;
  std::size_t head_ = 0;
  std::size_t pushed_ = 0;
};

}  // namespace c2s
