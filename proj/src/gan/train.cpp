#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "corrgan/canonicalize.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/gan/model.hpp"
#include "internal.hpp"

namespace corrgan::gan {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
  if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0)) throw ConfigError("train: learning rates must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: moment coefficients must lie in [0, 1)");
  }
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw ConfigError("train: checkpoint cadence needs a directory");
}

bool TrainingLog::same_steps(const TrainingLog& o) const {
  return d_loss == o.d_loss && g_loss == o.g_loss && d_real == o.d_real && d_fake == o.d_fake;
}

std::string TrainingLog::to_csv() const {
  std::ostringstream out;
  out << "step,d_loss,g_loss,d_real,d_fake\n";
  for (std::size_t k = 0; k < steps(); ++k) {
    out << k << ',' << io::format_double(d_loss[k]) << ',' << io::format_double(g_loss[k]) << ','
        << io::format_double(d_real[k]) << ',' << io::format_double(d_fake[k]) << '\n';
  }
  return out.str();
}

namespace {

class Adam {
 public:
  Adam(Index size, double lr, double beta1, double beta2)
      : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)), lr_(lr), b1_(beta1), b2_(beta2) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kEps = 1e-8;
  Eigen::VectorXd m_, v_;
  double lr_, b1_, b2_;
  long t_ = 0;
};

Batch latent_batch(Index latent, Index count, std::uint64_t seed, std::uint64_t stream) {
  Philox rng(seed, stream);
  Batch z(latent, count);
  for (Index k = 0; k < count; ++k) {
    for (Index r = 0; r < latent; ++r) z(r, k) = standard_normal(rng);
  }
  return z;
}

void check_dataset(std::span<const CorrelationMatrix> dataset, Index n) {
  if (dataset.size() < 2) throw ConfigError("train: dataset needs at least two matrices");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].n() != n) {
      throw ShapeError("train: dataset matrix " + std::to_string(i) + " is " + std::to_string(dataset[i].n()) +
                       "x" + std::to_string(dataset[i].n()) + ", model expects n = " + std::to_string(n));
    }
    if (!(canon::canonicalize(dataset[i]) == dataset[i])) {
      throw ConfigError("train: dataset matrix " + std::to_string(i) + " is not in canonical order");
    }
  }
}

}  // namespace

TrainResult train(std::span<const CorrelationMatrix> dataset, const ArchitectureDescriptor& arch,
                  const TrainConfig& cfg) {
  return train(dataset, init_model(arch, cfg.seed), cfg);
}

TrainResult train(std::span<const CorrelationMatrix> dataset, GanModel model, const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(dataset, model.arch.n);

  const Batch all = flatten(dataset);
  const Index count = all.cols();
  const Index batch = std::min(cfg.batch_size, count);
  const Index batches = count / batch;
  const double real_label = cfg.label_smoothing ? 0.9 : 1.0;
  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, "shuffle");
  const std::uint64_t d_latent_seed = derive_seed(cfg.seed, "latent-discriminator");
  const std::uint64_t g_latent_seed = derive_seed(cfg.seed, "latent-generator");

  Adam d_opt(model.discriminator_params.size(), cfg.lr_discriminator, cfg.beta1, cfg.beta2);
  Adam g_opt(model.generator_params.size(), cfg.lr_generator, cfg.beta1, cfg.beta2);
  TrainingLog log;
  std::vector<Index> order(static_cast<std::size_t>(count));

  const auto abort_non_finite = [&](const char* which) {
    if (!cfg.checkpoint_dir.empty()) save_checkpoint(model, cfg.checkpoint_dir / "diagnostic.ckpt");
    throw NumericalError(std::string("train: non-finite ") + which + " loss at step " + std::to_string(model.step));
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), Index{0});
    Philox shuffle_rng(shuffle_seed, static_cast<std::uint64_t>(epoch));
    shuffle(std::span<Index>(order), shuffle_rng);

    for (Index b = 0; b < batches; ++b) {
      const auto stream = static_cast<std::uint64_t>(model.step);
      DiscriminatorLoss d_spec;
      d_spec.real.resize(all.rows(), batch);
      for (Index k = 0; k < batch; ++k) d_spec.real.col(k) = all.col(order[static_cast<std::size_t>(b * batch + k)]);
      d_spec.z = latent_batch(model.arch.latent_dim, batch, d_latent_seed, stream);
      d_spec.real_label = real_label;
      const LossGradient d_step = detail::evaluate(model, d_spec, Mode::train_update, model.generator_state);
      if (!std::isfinite(d_step.loss)) abort_non_finite("discriminator");
      d_opt.step(model.discriminator_params, d_step.discriminator);

      GeneratorLoss g_spec{latent_batch(model.arch.latent_dim, batch, g_latent_seed, stream)};
      const LossGradient g_step = detail::evaluate(model, g_spec, Mode::train_update, model.generator_state);
      if (!std::isfinite(g_step.loss)) abort_non_finite("generator");
      g_opt.step(model.generator_params, g_step.generator);

      ++model.step;
      log.d_loss.push_back(d_step.loss);
      log.g_loss.push_back(g_step.loss);
      log.d_real.push_back(d_step.d_real_mean);
      log.d_fake.push_back(d_step.d_fake_mean);
    }
    log.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "epoch_" << (epoch + 1) << ".ckpt";
      save_checkpoint(model, cfg.checkpoint_dir / name.str());
    }
  }
  return {std::move(model), std::move(log)};
}

}  // namespace corrgan::gan
