#include "corrgan/gan/layers.hpp"

#include <cmath>

#include "corrgan/errors.hpp"

namespace corrgan::gan {

void Layer::init_params(std::span<double>, Philox&) const {}
void Layer::init_state(std::span<double>) const {}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  for (const Activation a : {Activation::identity, Activation::relu, Activation::leaky_relu, Activation::tanh,
                             Activation::sigmoid}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMap = Eigen::Map<Eigen::MatrixXd>;

void fill_normal(std::span<double> out, double stddev, Philox& rng) {
  for (double& v : out) v = stddev * standard_normal(rng);
}

// --- Dense ------------------------------------------------------------------

class Dense final : public Layer {
 public:
  Dense(Index in, Index out) : in_(in), out_(out) {
    if (in < 1 || out < 1) throw ConfigError("dense layer needs positive sizes");
  }
  std::string kind() const override { return "dense"; }
  Index in_size() const override { return in_; }
  Index out_size() const override { return out_; }
  Index param_count() const override { return out_ * in_ + out_; }

  void init_params(std::span<double> p, Philox& rng) const override {
    fill_normal(p.first(static_cast<std::size_t>(out_ * in_)), 1.0 / std::sqrt(static_cast<double>(in_)), rng);
    std::fill(p.begin() + out_ * in_, p.end(), 0.0);
  }

  Batch forward(std::span<const double> p, std::span<double>, const Batch& x, Mode, Cache& cache) const override {
    const ConstMap w(p.data(), out_, in_);
    const Eigen::Map<const Eigen::VectorXd> b(p.data() + out_ * in_, out_);
    cache.input = x;
    Batch y = w * x;
    y.colwise() += b;
    return y;
  }

  Batch backward(std::span<const double> p, const Cache& cache, const Batch& dy,
                 std::span<double> g) const override {
    const ConstMap w(p.data(), out_, in_);
    MutMap gw(g.data(), out_, in_);
    Eigen::Map<Eigen::VectorXd> gb(g.data() + out_ * in_, out_);
    gw.noalias() += dy * cache.input.transpose();
    gb += dy.rowwise().sum();
    return w.transpose() * dy;
  }

 private:
  Index in_, out_;
};

// --- Activation ---------------------------------------------------------------

class ActivationLayer final : public Layer {
 public:
  ActivationLayer(Activation a, Index size) : a_(a), size_(size) {}
  std::string kind() const override { return to_string(a_); }
  Index in_size() const override { return size_; }
  Index out_size() const override { return size_; }

  Batch forward(std::span<const double>, std::span<double>, const Batch& x, Mode, Cache& cache) const override {
    Batch y;
    switch (a_) {
      case Activation::identity: y = x; break;
      case Activation::relu: y = x.cwiseMax(0.0); break;
      case Activation::leaky_relu: y = x.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; }); break;
      case Activation::tanh: y = x.array().tanh().matrix(); break;
      case Activation::sigmoid:
        y = x.unaryExpr([](double v) {
          if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
          const double e = std::exp(v);
          return e / (1.0 + e);
        });
        break;
    }
    cache.input = x;
    cache.output = y;
    return y;
  }

  Batch backward(std::span<const double>, const Cache& cache, const Batch& dy, std::span<double>) const override {
    const auto& x = cache.input.array();
    const auto& y = cache.output.array();
    switch (a_) {
      case Activation::identity: return dy;
      case Activation::relu: return (dy.array() * (x > 0.0).cast<double>()).matrix();
      case Activation::leaky_relu:
        return (dy.array() * (x > 0.0).select(Eigen::ArrayXXd::Ones(x.rows(), x.cols()), kLeakySlope)).matrix();
      case Activation::tanh: return (dy.array() * (1.0 - y * y)).matrix();
      case Activation::sigmoid: return (dy.array() * y * (1.0 - y)).matrix();
    }
    return dy;
  }

 private:
  Activation a_;
  Index size_;
};

// --- Batch normalization ---------------------------------------------------------
// Parameters: gamma[C], beta[C]. State: running mean[C], running variance[C].

class BatchNorm final : public Layer {
 public:
  BatchNorm(Index channels, Index spatial) : c_(channels), s_(spatial) {
    if (channels < 1 || spatial < 1) throw ConfigError("batch-norm needs positive sizes");
  }
  std::string kind() const override { return "batchnorm"; }
  Index in_size() const override { return c_ * s_; }
  Index out_size() const override { return c_ * s_; }
  Index param_count() const override { return 2 * c_; }
  Index state_count() const override { return 2 * c_; }

  void init_params(std::span<double> p, Philox&) const override {
    std::fill(p.begin(), p.begin() + c_, 1.0);
    std::fill(p.begin() + c_, p.end(), 0.0);
  }
  void init_state(std::span<double> st) const override {
    std::fill(st.begin(), st.begin() + c_, 0.0);
    std::fill(st.begin() + c_, st.end(), 1.0);
  }

  Batch forward(std::span<const double> p, std::span<double> st, const Batch& x, Mode mode,
                Cache& cache) const override {
    const Index b = x.cols();
    const bool batch_stats = mode != Mode::eval;
    if (batch_stats && b * s_ < 2) throw ShapeError("batch-norm in training mode needs at least two values per channel");
    cache.batch_stats = batch_stats;
    cache.aux.resize(x.rows(), b);
    cache.scale.resize(c_);
    Batch y(x.rows(), b);
    for (Index c = 0; c < c_; ++c) {
      const auto block = x.middleRows(c * s_, s_);
      double mean = 0.0;
      double var = 0.0;
      if (batch_stats) {
        const double count = static_cast<double>(s_ * b);
        mean = block.sum() / count;
        var = (block.array() - mean).square().sum() / count;
        if (mode == Mode::train_update) {
          st[c] = (1.0 - kBatchNormMomentum) * st[c] + kBatchNormMomentum * mean;
          st[c_ + c] = (1.0 - kBatchNormMomentum) * st[c_ + c] + kBatchNormMomentum * var * count / (count - 1.0);
        }
      } else {
        mean = st[c];
        var = st[c_ + c];
      }
      const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
      cache.scale(c) = inv_std;
      cache.aux.middleRows(c * s_, s_) = (block.array() - mean) * inv_std;
      y.middleRows(c * s_, s_) = (p[c] * cache.aux.middleRows(c * s_, s_).array() + p[c_ + c]).matrix();
    }
    return y;
  }

  Batch backward(std::span<const double> p, const Cache& cache, const Batch& dy,
                 std::span<double> g) const override {
    Batch dx(dy.rows(), dy.cols());
    const double count = static_cast<double>(s_ * dy.cols());
    for (Index c = 0; c < c_; ++c) {
      const auto d = dy.middleRows(c * s_, s_).array();
      const auto xhat = cache.aux.middleRows(c * s_, s_).array();
      g[c] += (d * xhat).sum();
      g[c_ + c] += d.sum();
      const Eigen::ArrayXXd dxhat = d * p[c];
      if (cache.batch_stats) {
        dx.middleRows(c * s_, s_) =
            (cache.scale(c) / count * (count * dxhat - dxhat.sum() - xhat * (dxhat * xhat).sum())).matrix();
      } else {
        dx.middleRows(c * s_, s_) = (dxhat * cache.scale(c)).matrix();
      }
    }
    return dx;
  }

 private:
  Index c_, s_;
};

// --- Convolution helpers ----------------------------------------------------------
// Geometry shared by both convolution layers: kernel 4, stride 2, padding 1
// maps a side-h image onto a side-h/2 image.

/// (channels * 16) x (side/2)^2 patch matrix of one sample.
Eigen::MatrixXd im2col(const double* x, Index channels, Index side) {
  const Index out = side / 2;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(channels * kKernel * kKernel, out * out);
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < kKernel; ++ky) {
      for (Index kx = 0; kx < kKernel; ++kx) {
        const Index row = (c * kKernel + ky) * kKernel + kx;
        for (Index oy = 0; oy < out; ++oy) {
          const Index iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= side) continue;
          for (Index ox = 0; ox < out; ++ox) {
            const Index ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= side) continue;
            cols(row, oy * out + ox) = x[(c * side + iy) * side + ix];
          }
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatters patches back, summing overlaps.
void col2im(const Eigen::MatrixXd& cols, Index channels, Index side, double* x) {
  const Index out = side / 2;
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < kKernel; ++ky) {
      for (Index kx = 0; kx < kKernel; ++kx) {
        const Index row = (c * kKernel + ky) * kKernel + kx;
        for (Index oy = 0; oy < out; ++oy) {
          const Index iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= side) continue;
          for (Index ox = 0; ox < out; ++ox) {
            const Index ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= side) continue;
            x[(c * side + iy) * side + ix] += cols(row, oy * out + ox);
          }
        }
      }
    }
  }
}

void check_side(Index side) {
  if (side < 2 || side % 2 != 0) throw ConfigError("convolution needs an even image side");
}

// Weight W is cout x (cin * 16), followed by one bias per output channel.
class Conv2d final : public Layer {
 public:
  Conv2d(Index cin, Index cout, Index side) : cin_(cin), cout_(cout), side_(side) { check_side(side); }
  std::string kind() const override { return "conv2d"; }
  Index in_size() const override { return cin_ * side_ * side_; }
  Index out_size() const override { return cout_ * (side_ / 2) * (side_ / 2); }
  Index param_count() const override { return cout_ * cin_ * kKernel * kKernel + cout_; }

  void init_params(std::span<double> p, Philox& rng) const override {
    const Index nw = cout_ * cin_ * kKernel * kKernel;
    fill_normal(p.first(static_cast<std::size_t>(nw)), 1.0 / std::sqrt(static_cast<double>(cin_ * kKernel * kKernel)),
                rng);
    std::fill(p.begin() + nw, p.end(), 0.0);
  }

  Batch forward(std::span<const double> p, std::span<double>, const Batch& x, Mode, Cache& cache) const override {
    const Index positions = (side_ / 2) * (side_ / 2);
    const Index patch = cin_ * kKernel * kKernel;
    const ConstMap w(p.data(), cout_, patch);
    cache.aux.resize(patch, positions * x.cols());
    for (Index b = 0; b < x.cols(); ++b) {
      cache.aux.middleCols(b * positions, positions) = im2col(x.col(b).data(), cin_, side_);
    }
    const Eigen::MatrixXd out = w * cache.aux;
    Batch y(out_size(), x.cols());
    for (Index b = 0; b < x.cols(); ++b) {
      for (Index c = 0; c < cout_; ++c) {
        y.col(b).segment(c * positions, positions) =
            out.row(c).segment(b * positions, positions).transpose().array() + p[patch * cout_ + c];
      }
    }
    return y;
  }

  Batch backward(std::span<const double> p, const Cache& cache, const Batch& dy,
                 std::span<double> g) const override {
    const Index positions = (side_ / 2) * (side_ / 2);
    const Index patch = cin_ * kKernel * kKernel;
    const ConstMap w(p.data(), cout_, patch);
    Eigen::MatrixXd dout(cout_, positions * dy.cols());
    for (Index b = 0; b < dy.cols(); ++b) {
      for (Index c = 0; c < cout_; ++c) {
        dout.row(c).segment(b * positions, positions) = dy.col(b).segment(c * positions, positions).transpose();
      }
    }
    MutMap gw(g.data(), cout_, patch);
    gw.noalias() += dout * cache.aux.transpose();
    for (Index c = 0; c < cout_; ++c) g[static_cast<std::size_t>(patch * cout_ + c)] += dout.row(c).sum();
    const Eigen::MatrixXd dcols = w.transpose() * dout;
    Batch dx = Batch::Zero(in_size(), dy.cols());
    for (Index b = 0; b < dy.cols(); ++b) {
      col2im(dcols.middleCols(b * positions, positions), cin_, side_, dx.col(b).data());
    }
    return dx;
  }

 private:
  Index cin_, cout_, side_;
};

// Weight W is cin x (cout * 16), followed by one bias per output channel. The
// forward pass is the adjoint of a convolution from the side-2h output grid.
class ConvTranspose2d final : public Layer {
 public:
  ConvTranspose2d(Index cin, Index cout, Index side) : cin_(cin), cout_(cout), side_(side) {
    if (side < 1) throw ConfigError("transposed convolution needs a positive image side");
  }
  std::string kind() const override { return "conv_transpose2d"; }
  Index in_size() const override { return cin_ * side_ * side_; }
  Index out_size() const override { return cout_ * 4 * side_ * side_; }
  Index param_count() const override { return cin_ * cout_ * kKernel * kKernel + cout_; }

  void init_params(std::span<double> p, Philox& rng) const override {
    const Index nw = cin_ * cout_ * kKernel * kKernel;
    // Each output pixel receives cin * (kernel / stride)^2 contributions.
    fill_normal(p.first(static_cast<std::size_t>(nw)), 1.0 / std::sqrt(static_cast<double>(cin_ * 4)), rng);
    std::fill(p.begin() + nw, p.end(), 0.0);
  }

  Batch forward(std::span<const double> p, std::span<double>, const Batch& x, Mode, Cache& cache) const override {
    const Index positions = side_ * side_;
    const Index patch = cout_ * kKernel * kKernel;
    const Index big = 2 * side_;
    const ConstMap w(p.data(), cin_, patch);
    cache.input = x;
    Batch y = Batch::Zero(out_size(), x.cols());
    for (Index b = 0; b < x.cols(); ++b) {
      const ConstMap xb(x.col(b).data(), positions, cin_);  // column c holds channel c
      const Eigen::MatrixXd cols = w.transpose() * xb.transpose();
      col2im(cols, cout_, big, y.col(b).data());
      for (Index c = 0; c < cout_; ++c) y.col(b).segment(c * big * big, big * big).array() += p[cin_ * patch + c];
    }
    return y;
  }

  Batch backward(std::span<const double> p, const Cache& cache, const Batch& dy,
                 std::span<double> g) const override {
    const Index positions = side_ * side_;
    const Index patch = cout_ * kKernel * kKernel;
    const Index big = 2 * side_;
    const ConstMap w(p.data(), cin_, patch);
    MutMap gw(g.data(), cin_, patch);
    Batch dx(in_size(), dy.cols());
    for (Index b = 0; b < dy.cols(); ++b) {
      const Eigen::MatrixXd dcols = im2col(dy.col(b).data(), cout_, big);
      const ConstMap xb(cache.input.col(b).data(), positions, cin_);
      gw.noalias() += xb.transpose() * dcols.transpose();
      MutMap dxb(dx.col(b).data(), positions, cin_);
      dxb = (w * dcols).transpose();
      for (Index c = 0; c < cout_; ++c) {
        g[static_cast<std::size_t>(cin_ * patch + c)] += dy.col(b).segment(c * big * big, big * big).sum();
      }
    }
    return dx;
  }

 private:
  Index cin_, cout_, side_;
};

}  // namespace

std::unique_ptr<Layer> make_dense(Index in, Index out) { return std::make_unique<Dense>(in, out); }
std::unique_ptr<Layer> make_activation(Activation a, Index size) {
  return std::make_unique<ActivationLayer>(a, size);
}
std::unique_ptr<Layer> make_batchnorm(Index channels, Index spatial) {
  return std::make_unique<BatchNorm>(channels, spatial);
}
std::unique_ptr<Layer> make_conv2d(Index in_channels, Index out_channels, Index side) {
  return std::make_unique<Conv2d>(in_channels, out_channels, side);
}
std::unique_ptr<Layer> make_conv_transpose2d(Index in_channels, Index out_channels, Index side) {
  return std::make_unique<ConvTranspose2d>(in_channels, out_channels, side);
}

}  // namespace corrgan::gan
