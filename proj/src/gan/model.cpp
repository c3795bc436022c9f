#include "corrgan/gan/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "corrgan/errors.hpp"
#include "internal.hpp"

namespace corrgan::gan {

std::string to_string(Variant v) { return v == Variant::dense ? "dense" : "conv"; }

Variant parse_variant(const std::string& name) {
  if (name == "dense") return Variant::dense;
  if (name == "conv") return Variant::conv;
  throw ConfigError("unknown architecture variant '" + name + "'");
}

namespace {

std::string join_widths(const std::vector<Index>& w) {
  std::string out;
  for (const Index v : w) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

std::vector<Index> parse_widths(const std::string& text) {
  std::vector<Index> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed layer width '" + item + "'");
    }
  }
  return out;
}

}  // namespace

void ArchitectureDescriptor::validate() const {
  if (n < 2) throw ConfigError("architecture: n must be >= 2");
  if (latent_dim < 1) throw ConfigError("architecture: latent_dim must be >= 1");
  const auto positive = [](const std::vector<Index>& w) {
    return std::all_of(w.begin(), w.end(), [](Index v) { return v >= 1; });
  };
  if (!positive(generator_widths) || !positive(discriminator_widths)) {
    throw ConfigError("architecture: layer widths must be positive");
  }
  if (variant == Variant::conv) {
    if (n < kMinConvSide || n % 4 != 0) {
      throw ConfigError("architecture: conv variant needs n >= " + std::to_string(kMinConvSide) +
                        " and a multiple of 4, got n = " + std::to_string(n));
    }
    if (generator_widths.size() != 2 || discriminator_widths.size() != 2) {
      throw ConfigError("architecture: conv variant takes exactly two channel counts per network");
    }
  }
}

ArchitectureDescriptor ArchitectureDescriptor::dense(Index n, Index latent_dim, std::vector<Index> generator_widths,
                                                     std::vector<Index> discriminator_widths) {
  ArchitectureDescriptor a;
  a.variant = Variant::dense;
  a.n = n;
  a.latent_dim = latent_dim;
  a.generator_widths = std::move(generator_widths);
  a.discriminator_widths = std::move(discriminator_widths);
  a.validate();
  return a;
}

ArchitectureDescriptor ArchitectureDescriptor::conv(Index n, Index latent_dim, std::vector<Index> generator_channels,
                                                    std::vector<Index> discriminator_channels) {
  ArchitectureDescriptor a;
  a.variant = Variant::conv;
  a.n = n;
  a.latent_dim = latent_dim;
  a.generator_widths = std::move(generator_channels);
  a.discriminator_widths = std::move(discriminator_channels);
  a.generator_batchnorm = true;
  a.validate();
  return a;
}

void ArchitectureDescriptor::write(io::KeyValueFile& kv) const {
  kv.add("variant", to_string(variant));
  kv.add("n", n);
  kv.add("latent_dim", latent_dim);
  kv.add("generator_widths", join_widths(generator_widths));
  kv.add("discriminator_widths", join_widths(discriminator_widths));
  kv.add("generator_hidden", to_string(generator_hidden));
  kv.add("discriminator_hidden", to_string(discriminator_hidden));
  kv.add("generator_batchnorm", generator_batchnorm);
}

ArchitectureDescriptor ArchitectureDescriptor::read(const io::KeyValueFile& kv) {
  ArchitectureDescriptor a;
  try {
    a.variant = parse_variant(kv.get("variant"));
    a.n = std::stoll(kv.get("n"));
    a.latent_dim = std::stoll(kv.get("latent_dim"));
  } catch (const std::logic_error&) {
    throw ConfigError("architecture: malformed integer field");
  }
  a.generator_widths = parse_widths(kv.get("generator_widths"));
  a.discriminator_widths = parse_widths(kv.get("discriminator_widths"));
  a.generator_hidden = parse_activation(kv.get("generator_hidden"));
  a.discriminator_hidden = parse_activation(kv.get("discriminator_hidden"));
  a.generator_batchnorm = kv.get("generator_batchnorm") == "true";
  a.validate();
  return a;
}

Network build_generator(const ArchitectureDescriptor& arch) {
  arch.validate();
  Network g("generator");
  const Index n2 = arch.n * arch.n;
  if (arch.variant == Variant::dense) {
    Index in = arch.latent_dim;
    for (const Index w : arch.generator_widths) {
      g.add(make_dense(in, w));
      if (arch.generator_batchnorm) g.add(make_batchnorm(w));
      g.add(make_activation(arch.generator_hidden, w));
      in = w;
    }
    g.add(make_dense(in, n2));
  } else {
    const Index side = arch.n / 4;
    const Index c0 = arch.generator_widths[0];
    const Index c1 = arch.generator_widths[1];
    g.add(make_dense(arch.latent_dim, c0 * side * side));
    g.add(make_batchnorm(c0, side * side));
    g.add(make_activation(arch.generator_hidden, c0 * side * side));
    g.add(make_conv_transpose2d(c0, c1, side));
    g.add(make_batchnorm(c1, 4 * side * side));
    g.add(make_activation(arch.generator_hidden, c1 * 4 * side * side));
    g.add(make_conv_transpose2d(c1, 1, 2 * side));
  }
  g.add(make_activation(Activation::tanh, n2));
  return g;
}

Network build_discriminator(const ArchitectureDescriptor& arch) {
  arch.validate();
  Network d("discriminator");
  if (arch.variant == Variant::dense) {
    Index in = arch.n * arch.n;
    for (const Index w : arch.discriminator_widths) {
      d.add(make_dense(in, w));
      d.add(make_activation(arch.discriminator_hidden, w));
      in = w;
    }
    d.add(make_dense(in, 1));
  } else {
    const Index c0 = arch.discriminator_widths[0];
    const Index c1 = arch.discriminator_widths[1];
    const Index half = arch.n / 2;
    const Index quarter = arch.n / 4;
    d.add(make_conv2d(1, c0, arch.n));
    d.add(make_activation(arch.discriminator_hidden, c0 * half * half));
    d.add(make_conv2d(c0, c1, half));
    d.add(make_activation(arch.discriminator_hidden, c1 * quarter * quarter));
    d.add(make_dense(c1 * quarter * quarter, 1));
  }
  return d;
}

bool GanModel::same_weights(const GanModel& o) const {
  const auto eq = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
  };
  return arch == o.arch && step == o.step && eq(generator_params, o.generator_params) &&
         eq(discriminator_params, o.discriminator_params) && eq(generator_state, o.generator_state) &&
         eq(discriminator_state, o.discriminator_state);
}

GanModel init_model(const ArchitectureDescriptor& arch, std::uint64_t seed) {
  GanModel m;
  m.arch = arch;
  m.generator = std::make_shared<const Network>(build_generator(arch));
  m.discriminator = std::make_shared<const Network>(build_discriminator(arch));
  Philox g_rng(derive_seed(seed, "generator-init"));
  Philox d_rng(derive_seed(seed, "discriminator-init"));
  m.generator->init(m.generator_params, m.generator_state, g_rng);
  m.discriminator->init(m.discriminator_params, m.discriminator_state, d_rng);
  m.seed = seed;
  return m;
}

namespace {

template <typename M>
Batch flatten_impl(std::span<const M> matrices) {
  if (matrices.empty()) return Batch();
  const Index n = matrices.front().n();
  Batch out(n * n, static_cast<Index>(matrices.size()));
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    if (matrices[k].n() != n) throw ShapeError("flatten: matrices differ in dimension");
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) out(i * n + j, static_cast<Index>(k)) = matrices[k](i, j);
    }
  }
  return out;
}

double clamp_open(double v, double lo, double hi) {
  return std::clamp(v, std::nextafter(lo, hi), std::nextafter(hi, lo));
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Batch flatten(std::span<const CorrelationMatrix> matrices) { return flatten_impl(matrices); }
Batch flatten(std::span<const RawMatrix> matrices) { return flatten_impl(matrices); }

RawMatrix unflatten(const Eigen::Ref<const Eigen::VectorXd>& column, Index n) {
  if (column.size() != n * n) throw ShapeError("unflatten: expected n^2 entries");
  Eigen::MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = clamp_open(column(i * n + j), -1.0, 1.0);
  }
  return RawMatrix(std::move(m));
}

RawMatrix generator_forward(const GanModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.arch.latent_dim) {
    throw ShapeError("generator_forward: latent length " + std::to_string(z.size()) + ", expected " +
                     std::to_string(model.arch.latent_dim));
  }
  Eigen::VectorXd state = model.generator_state;
  Tape tape;
  const Batch out = model.generator->forward(model.generator_params, state, z, Mode::eval, tape);
  return unflatten(out.col(0), model.arch.n);
}

double discriminator_forward(const GanModel& model, const RawMatrix& m) {
  if (m.n() != model.arch.n) throw ShapeError("discriminator_forward: matrix side does not match the model");
  const std::vector<RawMatrix> one{m};
  Eigen::VectorXd state = model.discriminator_state;
  Tape tape;
  const Batch logit = model.discriminator->forward(model.discriminator_params, state, flatten(one), Mode::eval, tape);
  return clamp_open(sigmoid(logit(0, 0)), 0.0, 1.0);
}

double bce_with_logits(double logit, double label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

namespace detail {

/// Shared by backward() and the training loop; g_mode selects whether the
/// generator's running statistics are updated (in generator_state).
LossGradient evaluate(const GanModel& model, const LossSpec& spec, Mode g_mode, Eigen::VectorXd& generator_state) {
  LossGradient out;
  out.generator = Eigen::VectorXd::Zero(model.generator_params.size());
  out.discriminator = Eigen::VectorXd::Zero(model.discriminator_params.size());
  const Network& g = *model.generator;
  const Network& d = *model.discriminator;
  Eigen::VectorXd d_state = model.discriminator_state;

  if (const auto* c = std::get_if<ConstantLoss>(&spec)) {
    out.loss = c->value;
    return out;
  }

  const auto mean_sigmoid = [](const Batch& logits) {
    double s = 0.0;
    for (Index k = 0; k < logits.cols(); ++k) s += sigmoid(logits(0, k));
    return s / static_cast<double>(logits.cols());
  };

  if (const auto* dl = std::get_if<DiscriminatorLoss>(&spec)) {
    if (dl->real.cols() < 1 || dl->z.cols() < 1) throw ShapeError("discriminator loss: empty batch");
    if (dl->real.rows() != d.in_size()) throw ShapeError("discriminator loss: real batch has wrong feature count");
    Tape gt, rt, ft;
    const Batch fake = g.forward(model.generator_params, generator_state, dl->z, g_mode, gt);
    const Batch lr = d.forward(model.discriminator_params, d_state, dl->real, Mode::train, rt);
    const Batch lf = d.forward(model.discriminator_params, d_state, fake, Mode::train, ft);
    const double br = static_cast<double>(lr.cols());
    const double bf = static_cast<double>(lf.cols());
    Batch grad_r(1, lr.cols()), grad_f(1, lf.cols());
    for (Index k = 0; k < lr.cols(); ++k) {
      out.loss += bce_with_logits(lr(0, k), dl->real_label) / br;
      grad_r(0, k) = (sigmoid(lr(0, k)) - dl->real_label) / br;
    }
    for (Index k = 0; k < lf.cols(); ++k) {
      out.loss += bce_with_logits(lf(0, k), 0.0) / bf;
      grad_f(0, k) = sigmoid(lf(0, k)) / bf;
    }
    out.d_real_mean = mean_sigmoid(lr);
    out.d_fake_mean = mean_sigmoid(lf);
    d.backward(model.discriminator_params, rt, grad_r, out.discriminator);
    const Batch grad_fake = d.backward(model.discriminator_params, ft, grad_f, out.discriminator);
    g.backward(model.generator_params, gt, grad_fake, out.generator);
    return out;
  }

  const auto& gl = std::get<GeneratorLoss>(spec);
  if (gl.z.cols() < 1) throw ShapeError("generator loss: empty batch");
  Tape gt, ft;
  const Batch fake = g.forward(model.generator_params, generator_state, gl.z, g_mode, gt);
  const Batch lf = d.forward(model.discriminator_params, d_state, fake, Mode::train, ft);
  const double bf = static_cast<double>(lf.cols());
  Batch grad_f(1, lf.cols());
  for (Index k = 0; k < lf.cols(); ++k) {
    out.loss += bce_with_logits(lf(0, k), 1.0) / bf;
    grad_f(0, k) = (sigmoid(lf(0, k)) - 1.0) / bf;
  }
  out.d_fake_mean = mean_sigmoid(lf);
  const Batch grad_fake = d.backward(model.discriminator_params, ft, grad_f, out.discriminator);
  g.backward(model.generator_params, gt, grad_fake, out.generator);
  return out;
}

}  // namespace detail

LossGradient backward(const GanModel& model, const LossSpec& loss) {
  Eigen::VectorXd state = model.generator_state;
  return detail::evaluate(model, loss, Mode::train, state);
}

namespace {
constexpr Index kGenerateChunk = 256;
}

std::vector<RawMatrix> generate(const GanModel& model, std::size_t count, std::uint64_t seed) {
  std::vector<RawMatrix> out;
  out.reserve(count);
  const Index latent = model.arch.latent_dim;
  Eigen::VectorXd state = model.generator_state;
  // Every chunk has the same width, so a sample's arithmetic does not depend on count.
  for (std::size_t first = 0; first < count; first += kGenerateChunk) {
    Batch z(latent, kGenerateChunk);
    for (Index k = 0; k < kGenerateChunk; ++k) {
      Philox rng(seed, first + static_cast<std::size_t>(k));
      for (Index r = 0; r < latent; ++r) z(r, k) = standard_normal(rng);
    }
    Tape tape;
    const Batch y = model.generator->forward(model.generator_params, state, z, Mode::eval, tape);
    for (Index k = 0; k < kGenerateChunk && first + static_cast<std::size_t>(k) < count; ++k) {
      out.push_back(unflatten(y.col(k), model.arch.n));
    }
  }
  return out;
}

}  // namespace corrgan::gan
