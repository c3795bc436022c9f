#include "corrgan/gan/network.hpp"

#include "corrgan/errors.hpp"

namespace corrgan::gan {

void Network::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layer->in_size() != out_size()) {
    throw ConfigError(prefix_ + ": layer '" + layer->kind() + "' expects " + std::to_string(layer->in_size()) +
                      " inputs, previous layer yields " + std::to_string(out_size()));
  }
  param_offsets_.push_back(param_count_);
  state_offsets_.push_back(state_count_);
  param_count_ += layer->param_count();
  state_count_ += layer->state_count();
  layers_.push_back(std::move(layer));
}

Index Network::in_size() const { return layers_.empty() ? 0 : layers_.front()->in_size(); }
Index Network::out_size() const { return layers_.empty() ? 0 : layers_.back()->out_size(); }

std::vector<Slice> Network::param_slices() const {
  std::vector<Slice> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->param_count() == 0) continue;
    out.push_back({prefix_ + "." + std::to_string(i) + "." + layers_[i]->kind(), param_offsets_[i],
                   layers_[i]->param_count()});
  }
  return out;
}

std::vector<Slice> Network::state_slices() const {
  std::vector<Slice> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->state_count() == 0) continue;
    out.push_back({prefix_ + "." + std::to_string(i) + "." + layers_[i]->kind() + ".running", state_offsets_[i],
                   layers_[i]->state_count()});
  }
  return out;
}

void Network::init(Eigen::VectorXd& params, Eigen::VectorXd& state, Philox& rng) const {
  params = Eigen::VectorXd::Zero(param_count_);
  state = Eigen::VectorXd::Zero(state_count_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->init_params({params.data() + param_offsets_[i], static_cast<std::size_t>(layers_[i]->param_count())},
                            rng);
    layers_[i]->init_state({state.data() + state_offsets_[i], static_cast<std::size_t>(layers_[i]->state_count())});
  }
}

Batch Network::forward(const Eigen::VectorXd& params, Eigen::VectorXd& state, const Batch& x, Mode mode,
                       Tape& tape) const {
  if (x.rows() != in_size()) {
    throw ShapeError(prefix_ + ": expected " + std::to_string(in_size()) + " input features, got " +
                     std::to_string(x.rows()));
  }
  tape.assign(layers_.size(), Cache{});
  Batch h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = *layers_[i];
    h = l.forward({params.data() + param_offsets_[i], static_cast<std::size_t>(l.param_count())},
                  {state.data() + state_offsets_[i], static_cast<std::size_t>(l.state_count())}, h, mode, tape[i]);
  }
  return h;
}

Batch Network::backward(const Eigen::VectorXd& params, const Tape& tape, const Batch& grad_out,
                        Eigen::VectorXd& grad_params) const {
  if (grad_params.size() != param_count_) grad_params = Eigen::VectorXd::Zero(param_count_);
  Batch g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& l = *layers_[i];
    g = l.backward({params.data() + param_offsets_[i], static_cast<std::size_t>(l.param_count())}, tape[i], g,
                   {grad_params.data() + param_offsets_[i], static_cast<std::size_t>(l.param_count())});
  }
  return g;
}

}  // namespace corrgan::gan
