#include "pril/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "pril/error.hpp"

namespace pril {

Mlp::Mlp(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw Error(ErrorKind::InvalidArgument, "network needs input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw Error(ErrorKind::InvalidArgument, "layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]), Eigen::VectorXd::Zero(sizes_[l + 1])});
  }
}

void Mlp::initialize(Rng& rng) {
  for (auto& layer : layers_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit =
        activation_ == Activation::Tanh ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
    }
    layer.bias.setZero();
  }
}

std::size_t Mlp::n_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::activate(const Eigen::MatrixXd& z) const {
  if (activation_ == Activation::Tanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

// Expressed through the activation output: a > 0 exactly when z > 0.
Eigen::MatrixXd Mlp::activate_derivative(const Eigen::MatrixXd& a) const {
  if (activation_ == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() > 0.0).cast<double>().matrix();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weight * h).colwise() + layers_[l].bias;
    h = l + 1 < layers_.size() ? activate(z) : std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != n_inputs()) throw Error(ErrorKind::InvalidArgument, "input size does not match the network");
  cache.inputs.clear();
  cache.activations.clear();
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs.push_back(h);
    Eigen::MatrixXd z = (layers_[l].weight * h).colwise() + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      h = activate(z);
      cache.activations.push_back(h);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output) const {
  Eigen::VectorXd grad(static_cast<Eigen::Index>(n_parameters()));
  // Offsets of each layer's block in the flat vector.
  std::vector<Eigen::Index> offsets(layers_.size());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = offset;
    offset += layers_[l].weight.size() + layers_[l].bias.size();
  }

  Eigen::MatrixXd delta = grad_output;  // dLoss/dz of the current layer
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Eigen::MatrixXd& input = cache.inputs[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets[l], layer.weight.rows(), layer.weight.cols());
    gw.noalias() = delta * input.transpose();
    grad.segment(offsets[l] + layer.weight.size(), layer.bias.size()) = delta.rowwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd& a = cache.activations[l - 1];
      Eigen::MatrixXd upstream = layer.weight.transpose() * delta;
      delta = upstream.cwiseProduct(activate_derivative(a));
    }
  }
  return grad;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(n_parameters()));
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    flat.segment(offset, layer.weight.size()) = layer.weight.reshaped();
    offset += layer.weight.size();
    flat.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return flat;
}

void Mlp::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(n_parameters())) {
    throw Error(ErrorKind::InvalidArgument, "parameter vector has the wrong size");
  }
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() = flat.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias = flat.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

void Mlp::add_to_parameters(const Eigen::VectorXd& delta) {
  if (delta.size() != static_cast<Eigen::Index>(n_parameters())) {
    throw Error(ErrorKind::InvalidArgument, "update vector has the wrong size");
  }
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() += delta.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias += delta.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

Eigen::MatrixXd one_hot(const std::vector<int>& states, int n_states) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_states, static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) x(states[i], static_cast<Eigen::Index>(i)) = 1.0;
  return x;
}

LossAndGrad squared_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  const double batch = static_cast<double>(outputs.cols());
  Eigen::MatrixXd diff = outputs - targets;
  return {0.5 * diff.squaredNorm() / batch, diff / batch};
}

double gradient_check(const Mlp& net, const Eigen::MatrixXd& inputs, const BatchLoss& loss, double step) {
  Mlp::Cache cache;
  const Eigen::MatrixXd out = net.forward(inputs, cache);
  const Eigen::VectorXd analytic = net.backward(cache, loss(out).grad_output);

  Mlp probe = net;
  const Eigen::VectorXd theta = net.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd shifted = theta;
    shifted(i) = theta(i) + step;
    probe.set_parameters(shifted);
    const double up = loss(probe.forward(inputs)).loss;
    shifted(i) = theta(i) - step;
    probe.set_parameters(shifted);
    const double down = loss(probe.forward(inputs)).loss;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / scale);
  }
  return worst;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_parameters)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (kind_ == OptimizerKind::Adam) {
    m_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_parameters));
    v_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_parameters));
  }
}

Eigen::VectorXd Optimizer::step(const Eigen::VectorXd& grad) {
  if (kind_ == OptimizerKind::Sgd) return -lr_ * grad;
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  return (-lr_ * (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps_)).matrix();
}

}  // namespace pril
