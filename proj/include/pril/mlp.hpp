#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "pril/privacy.hpp"
#include "pril/random.hpp"

namespace pril {

/// Fully connected network with a shared hidden activation and a linear
/// output layer. Batches are column-major: one example per column.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
  };

  /// Activations of every layer from the last forward pass, kept for
  /// backpropagation.
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;       // input to each layer
    std::vector<Eigen::MatrixXd> activations;  // post-activation of each hidden layer
  };

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation activation);

  /// Glorot-uniform weights for tanh, He-uniform for rectifiers; zero biases.
  void initialize(Rng& rng);

  int n_inputs() const { return sizes_.front(); }
  int n_outputs() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::size_t n_parameters() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;

  /// Gradient of a loss with respect to all parameters, flattened in
  /// parameters() order, given dLoss/dOutput for the cached batch.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& grad_output) const;

  /// Flat layout: per layer, weight (column-major) followed by bias.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
  void add_to_parameters(const Eigen::VectorXd& delta);

 private:
  Eigen::MatrixXd activate(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd activate_derivative(const Eigen::MatrixXd& a) const;

  std::vector<int> sizes_;
  Activation activation_ = Activation::Relu;
  std::vector<Layer> layers_;
};

/// One-hot encoding of a batch of state indices.
Eigen::MatrixXd one_hot(const std::vector<int>& states, int n_states);

/// Loss value plus its gradient with respect to the network outputs.
struct LossAndGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_output;
};

using BatchLoss = std::function<LossAndGrad(const Eigen::MatrixXd& outputs)>;

/// Mean over the batch of 0.5 * |y - t|^2.
LossAndGrad squared_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets);

/// Largest relative disagreement between the analytic gradient and
/// central finite differences over all parameters.
double gradient_check(const Mlp& net, const Eigen::MatrixXd& inputs, const BatchLoss& loss, double step = 1e-5);

/// Stateful first-order optimizer over a flat parameter vector.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_parameters);

  /// Parameter delta for the given gradient (to be added to the weights).
  Eigen::VectorXd step(const Eigen::VectorXd& grad);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  OptimizerKind kind_ = OptimizerKind::Sgd;
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

}  // namespace pril
