#pragma once

#include <memory>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "corrgan/rng.hpp"

namespace corrgan::gan {

using Eigen::Index;

/// Activations are stored features x batch: one column per sample. Image
/// features are flattened channel-major, then row-major within a channel.
using Batch = Eigen::MatrixXd;

enum class Mode {
  eval,        // batch-norm uses running statistics
  train,       // batch statistics, running statistics left untouched
  train_update // batch statistics, running statistics updated
};

/// Values a layer keeps from its forward pass for the backward pass.
struct Cache {
  Batch input;
  Batch output;
  Batch aux;              // layer-specific (normalized input, im2col buffers)
  Eigen::VectorXd scale;  // layer-specific (inverse std)
  bool batch_stats = false;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Index in_size() const = 0;
  virtual Index out_size() const = 0;
  virtual Index param_count() const { return 0; }
  /// Non-trainable state such as batch-norm running moments.
  virtual Index state_count() const { return 0; }

  virtual void init_params(std::span<double> params, Philox& rng) const;
  virtual void init_state(std::span<double> state) const;

  virtual Batch forward(std::span<const double> params, std::span<double> state, const Batch& x, Mode mode,
                        Cache& cache) const = 0;
  /// Accumulates into grad_params; returns the gradient with respect to the input.
  virtual Batch backward(std::span<const double> params, const Cache& cache, const Batch& grad_out,
                         std::span<double> grad_params) const = 0;
};

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid };

std::string to_string(Activation a);
/// Throws ConfigError on an unknown name.
Activation parse_activation(const std::string& name);

constexpr double kLeakySlope = 0.2;

std::unique_ptr<Layer> make_dense(Index in, Index out);
std::unique_ptr<Layer> make_activation(Activation a, Index size);
/// Per-feature batch normalization (per-channel when channels > 0 and spatial > 1).
std::unique_ptr<Layer> make_batchnorm(Index channels, Index spatial = 1);
/// 4x4 kernel, stride 2, padding 1: a side-h input becomes side h/2.
std::unique_ptr<Layer> make_conv2d(Index in_channels, Index out_channels, Index side);
/// Adjoint geometry of make_conv2d: a side-h input becomes side 2h.
std::unique_ptr<Layer> make_conv_transpose2d(Index in_channels, Index out_channels, Index side);

constexpr Index kKernel = 4;
constexpr double kBatchNormMomentum = 0.1;
constexpr double kBatchNormEps = 1e-5;

}  // namespace corrgan::gan
