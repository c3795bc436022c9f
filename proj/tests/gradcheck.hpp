#pragma once

// Central finite-difference checks shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "corrgan/gan/model.hpp"
#include "corrgan/rng.hpp"

namespace testing {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-4;
/// Denominator floor. A central difference of an O(1) loss carries rounding
/// noise near eps / step = 2e-11, so gradients below the floor are compared
/// absolutely (to 1e-10) instead of relatively.
constexpr double kFdFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
}

struct GradCheck {
  double max_error = 0.0;
  std::size_t checked = 0;
  std::string worst;

  bool passed() const { return max_error <= kFdTolerance; }
  void record(double err, const std::string& where) {
    ++checked;
    if (err > max_error) {
      max_error = err;
      worst = where;
    }
  }
};

/// Indices 0..size-1, or `limit` of them chosen without replacement.
inline std::vector<corrgan::Index> pick(corrgan::Index size, std::size_t limit, std::uint64_t seed) {
  std::vector<corrgan::Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), corrgan::Index{0});
  if (limit == 0 || limit >= all.size()) return all;
  corrgan::Philox rng(seed, 77);
  for (std::size_t k = 0; k < limit; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(all.size() - k));
    std::swap(all[k], all[j]);
  }
  all.resize(limit);
  return all;
}

/// Every generator and discriminator parameter (or `per_network` sampled ones of each).
inline GradCheck check_model(const corrgan::gan::GanModel& model, const corrgan::gan::LossSpec& loss,
                             std::size_t per_network = 0, std::uint64_t seed = 0) {
  using namespace corrgan::gan;
  const LossGradient g = backward(model, loss);
  GradCheck out;
  const auto probe = [&](bool generator) {
    const auto& params = generator ? model.generator_params : model.discriminator_params;
    const auto& analytic = generator ? g.generator : g.discriminator;
    for (const auto i : pick(params.size(), per_network, seed + generator)) {
      GanModel m = model;
      auto& p = generator ? m.generator_params : m.discriminator_params;
      p(i) = params(i) + kFdStep;
      const double up = backward(m, loss).loss;
      p(i) = params(i) - kFdStep;
      const double down = backward(m, loss).loss;
      out.record(relative_error(analytic(i), (up - down) / (2.0 * kFdStep)),
                 std::string(generator ? "generator" : "discriminator") + "[" + std::to_string(i) + "]");
    }
  };
  probe(true);
  probe(false);
  return out;
}

/// One layer under the loss sum(w .* layer(x)), in training mode. Checks
/// parameter gradients and input gradients.
inline GradCheck check_layer(std::unique_ptr<corrgan::gan::Layer> layer, corrgan::Index batch, std::uint64_t seed,
                             std::size_t limit = 0) {
  using namespace corrgan;
  using namespace corrgan::gan;
  const std::string kind = layer->kind();
  Network net("probe");
  net.add(std::move(layer));
  Philox rng(seed, 3);
  Eigen::VectorXd params, state;
  net.init(params, state, rng);
  // Non-trivial affine parameters so batch-norm gamma and beta matter.
  for (Index k = 0; k < params.size(); ++k) params(k) += 0.3 * standard_normal(rng);
  Batch x(net.in_size(), batch), w(net.out_size(), batch);
  for (Index k = 0; k < x.size(); ++k) x.data()[k] = standard_normal(rng);
  for (Index k = 0; k < w.size(); ++k) w.data()[k] = standard_normal(rng);

  const auto loss = [&](const Eigen::VectorXd& p, const Batch& in) {
    Eigen::VectorXd s = state;
    Tape tape;
    return (net.forward(p, s, in, Mode::train, tape).array() * w.array()).sum();
  };
  Eigen::VectorXd s = state;
  Tape tape;
  net.forward(params, s, x, Mode::train, tape);
  Eigen::VectorXd grad_p = Eigen::VectorXd::Zero(params.size());
  const Batch grad_x = net.backward(params, tape, w, grad_p);

  GradCheck out;
  for (const auto i : pick(params.size(), limit, seed)) {
    Eigen::VectorXd p = params;
    p(i) += kFdStep;
    const double up = loss(p, x);
    p(i) = params(i) - kFdStep;
    const double down = loss(p, x);
    out.record(relative_error(grad_p(i), (up - down) / (2.0 * kFdStep)), kind + " param " + std::to_string(i));
  }
  for (const auto i : pick(x.size(), limit, seed + 1)) {
    Batch xi = x;
    xi.data()[i] += kFdStep;
    const double up = loss(params, xi);
    xi.data()[i] = x.data()[i] - kFdStep;
    const double down = loss(params, xi);
    out.record(relative_error(grad_x.data()[i], (up - down) / (2.0 * kFdStep)), kind + " input " + std::to_string(i));
  }
  return out;
}

}  // namespace testing
