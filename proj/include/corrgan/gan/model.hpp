#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "corrgan/correlation.hpp"
#include "corrgan/gan/network.hpp"
#include "corrgan/matrix_io.hpp"

namespace corrgan::gan {

enum class Variant { dense, conv };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

/// Network plan. Dense: hidden widths of each network. Conv: the generator
/// projects the latent onto widths[0] channels at side n/4 and upsamples
/// twice (widths[0] -> widths[1] -> 1); the discriminator downsamples twice
/// (1 -> widths[0] -> widths[1]) before a dense logit.
struct ArchitectureDescriptor {
  Variant variant = Variant::dense;
  Index n = 3;
  Index latent_dim = 32;
  std::vector<Index> generator_widths{64, 64};
  std::vector<Index> discriminator_widths{64, 64};
  Activation generator_hidden = Activation::relu;
  Activation discriminator_hidden = Activation::leaky_relu;
  /// Batch-norm after each hidden generator layer; always on for conv.
  bool generator_batchnorm = false;

  /// Throws ConfigError. Conv needs n >= 32 with n divisible by 4 and exactly two widths per network.
  void validate() const;

  static ArchitectureDescriptor dense(Index n, Index latent_dim, std::vector<Index> generator_widths,
                                      std::vector<Index> discriminator_widths);
  static ArchitectureDescriptor conv(Index n, Index latent_dim = 32, std::vector<Index> generator_channels = {64, 32},
                                     std::vector<Index> discriminator_channels = {32, 64});

  void write(io::KeyValueFile& kv) const;
  static ArchitectureDescriptor read(const io::KeyValueFile& kv);
  bool operator==(const ArchitectureDescriptor&) const = default;
};

constexpr Index kMinConvSide = 32;

Network build_generator(const ArchitectureDescriptor& arch);
Network build_discriminator(const ArchitectureDescriptor& arch);

struct GanModel {
  ArchitectureDescriptor arch;
  std::shared_ptr<const Network> generator;
  std::shared_ptr<const Network> discriminator;
  Eigen::VectorXd generator_params;
  Eigen::VectorXd discriminator_params;
  Eigen::VectorXd generator_state;      // batch-norm running moments
  Eigen::VectorXd discriminator_state;
  std::int64_t step = 0;
  std::uint64_t seed = 0;

  /// Same architecture, parameters, state and step, compared bitwise.
  bool same_weights(const GanModel& other) const;
};

/// Scaled-normal initialization (std 1 / sqrt(fan_in)), zero biases.
GanModel init_model(const ArchitectureDescriptor& arch, std::uint64_t seed);

/// Matrices as columns of n^2 row-major entries.
Batch flatten(std::span<const CorrelationMatrix> matrices);
Batch flatten(std::span<const RawMatrix> matrices);
RawMatrix unflatten(const Eigen::Ref<const Eigen::VectorXd>& column, Index n);

/// Eval-mode generator pass. Entries are strictly inside (-1, 1).
RawMatrix generator_forward(const GanModel& model, const Eigen::VectorXd& z);
/// Probability in the open interval (0, 1).
double discriminator_forward(const GanModel& model, const RawMatrix& m);

/// Numerically stable binary cross-entropy on a logit.
double bce_with_logits(double logit, double label);

/// Discriminator loss: mean BCE(D(real), real_label) + mean BCE(D(G(z)), 0).
struct DiscriminatorLoss {
  Batch real;
  Batch z;
  double real_label = 1.0;
};
/// Non-saturating generator loss: mean BCE(D(G(z)), 1) = -mean log D(G(z)).
struct GeneratorLoss {
  Batch z;
};
struct ConstantLoss {
  double value = 0.0;
};
using LossSpec = std::variant<DiscriminatorLoss, GeneratorLoss, ConstantLoss>;

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd generator;      // d loss / d generator parameters
  Eigen::VectorXd discriminator;  // d loss / d discriminator parameters
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
};

/// Exact reverse-mode gradient. The generator runs with batch statistics and
/// the model is not modified.
LossGradient backward(const GanModel& model, const LossSpec& loss);

struct TrainConfig {
  Index batch_size = 64;
  double lr_generator = 2e-4;
  double lr_discriminator = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int epochs = 10;
  std::uint64_t seed = 0;
  bool label_smoothing = false;  // real label 0.9
  int checkpoint_every = 0;      // epochs; 0 disables
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct TrainingLog {
  std::vector<double> d_loss;
  std::vector<double> g_loss;
  std::vector<double> d_real;
  std::vector<double> d_fake;
  std::vector<double> epoch_seconds;

  std::size_t steps() const { return d_loss.size(); }
  /// Compares the per-step series; wall-clock times are ignored.
  bool same_steps(const TrainingLog& other) const;
  std::string to_csv() const;
};

struct TrainResult {
  GanModel model;
  TrainingLog log;
};

/// Throws ShapeError / ConfigError on a bad dataset, NumericalError on a
/// non-finite loss (after writing diagnostic.ckpt when a checkpoint dir is set).
TrainResult train(std::span<const CorrelationMatrix> dataset, const ArchitectureDescriptor& arch,
                  const TrainConfig& cfg);
/// Continues training an existing model.
TrainResult train(std::span<const CorrelationMatrix> dataset, GanModel model, const TrainConfig& cfg);

/// Sample i uses latent stream (seed, i); results do not depend on count.
std::vector<RawMatrix> generate(const GanModel& model, std::size_t count, std::uint64_t seed);

void save_checkpoint(const GanModel& model, const std::filesystem::path& path);
GanModel load_checkpoint(const std::filesystem::path& path);

}  // namespace corrgan::gan
