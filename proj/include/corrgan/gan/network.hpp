#pragma once

#include <memory>
#include <string>
#include <vector>

#include "corrgan/gan/layers.hpp"

namespace corrgan::gan {

/// Named slice of a flat parameter or state vector.
struct Slice {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

/// Activations recorded by one forward pass, one cache per layer.
using Tape = std::vector<Cache>;

/// Sequential stack of layers over a flat parameter vector.
class Network {
 public:
  Network() = default;
  explicit Network(std::string prefix) : prefix_(std::move(prefix)) {}

  /// Appends a layer; its input size must match the previous output size.
  void add(std::unique_ptr<Layer> layer);

  Index in_size() const;
  Index out_size() const;
  Index param_count() const { return param_count_; }
  Index state_count() const { return state_count_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  /// "<prefix>.<index>.<kind>" per parameterized layer.
  std::vector<Slice> param_slices() const;
  std::vector<Slice> state_slices() const;

  void init(Eigen::VectorXd& params, Eigen::VectorXd& state, Philox& rng) const;

  Batch forward(const Eigen::VectorXd& params, Eigen::VectorXd& state, const Batch& x, Mode mode, Tape& tape) const;
  /// Accumulates parameter gradients; returns the gradient with respect to the input.
  Batch backward(const Eigen::VectorXd& params, const Tape& tape, const Batch& grad_out,
                 Eigen::VectorXd& grad_params) const;

 private:
  std::string prefix_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Index> param_offsets_;
  std::vector<Index> state_offsets_;
  Index param_count_ = 0;
  Index state_count_ = 0;
};

}  // namespace corrgan::gan
