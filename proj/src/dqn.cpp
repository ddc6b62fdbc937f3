#include "pril/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pril/value_iteration.hpp"

namespace pril {

namespace {

struct Transition {
  int state;
  int action;
  double reward;
  int next;
  bool done;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(static_cast<std::size_t>(capacity)) { data_.reserve(capacity_); }

  void push(const Transition& t) {
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[head_] = t;
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }

  const Transition& sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    return data_[pick(rng)];
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

int argmax_lowest(const Eigen::MatrixXd& q, int s) {
  int best = 0;
  for (int a = 1; a < q.rows(); ++a) {
    if (q(a, s) > q(best, s)) best = a;
  }
  return best;
}

}  // namespace

Policy q_network_policy(const Mdp& mdp, const Mlp& net) {
  const int n = mdp.n_states();
  const Eigen::MatrixXd q = net.forward(Eigen::MatrixXd::Identity(n, n));
  std::vector<int> actions(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    if (!mdp.is_terminal(s)) actions[static_cast<std::size_t>(s)] = argmax_lowest(q, s);
  }
  return Policy::from_actions(actions, mdp.n_actions());
}

TrainResult train_dqn(const Mdp& mdp, const TrainConfig& config, Mlp& net, const std::optional<DpSgdConfig>& dp,
                      Rng& rng, const DqnSettings& settings) {
  config.validate();
  const int n = mdp.n_states();
  const int n_actions = mdp.n_actions();
  if (net.n_inputs() != n || net.n_outputs() != n_actions) {
    throw Error(ErrorKind::InvalidArgument, "network shape does not match the MDP");
  }
  if (settings.replay_capacity < config.batch_size || settings.target_update_interval < 1 ||
      settings.env_steps_per_update < 1) {
    throw Error(ErrorKind::InvalidArgument, "invalid DQN settings");
  }
  const int cap = settings.max_episode_steps > 0 ? settings.max_episode_steps : default_max_steps(n);
  const int total = config.total_steps();
  const int micro = config.batch_size / config.micro_batches;
  const double decay_span = std::max(1.0, settings.decay_fraction * total);

  TrainResult result;
  Optimizer optimizer(config.optimizer, config.step_size(), net.n_parameters());
  Mlp target = net;
  ReplayBuffer buffer(settings.replay_capacity);
  const Eigen::MatrixXd all_states = Eigen::MatrixXd::Identity(n, n);

  const Eigen::VectorXd reset_dist = collection_start(mdp, settings.exploring_starts);
  int state = sample_categorical(reset_dist, rng);
  int episode_steps = 0;
  auto collect = [&](const Eigen::MatrixXd& q, double explore) {
    int action;
    if (uniform01(rng) < explore) {
      action = std::uniform_int_distribution<int>(0, n_actions - 1)(rng);
    } else {
      action = argmax_lowest(q, state);
    }
    const int next = env_step(mdp, state, action, rng);
    const bool done = mdp.is_terminal(next);
    buffer.push({state, action, mdp.reward(state), next, done});
    ++episode_steps;
    if (done || episode_steps >= cap) {
      state = sample_categorical(reset_dist, rng);
      episode_steps = 0;
    } else {
      state = next;
    }
  };

  {
    const Eigen::MatrixXd q = net.forward(all_states);
    while (static_cast<int>(buffer.size()) < config.batch_size) collect(q, 1.0);
  }

  std::vector<int> states(static_cast<std::size_t>(micro));
  std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(config.micro_batches));
  std::vector<Transition> batch(static_cast<std::size_t>(config.batch_size));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
      const int step = epoch * config.iterations + it;
      const double explore = settings.epsilon_start +
                             (settings.epsilon_end - settings.epsilon_start) * std::min(1.0, step / decay_span);
      {
        const Eigen::MatrixXd q = net.forward(all_states);
        for (int k = 0; k < settings.env_steps_per_update; ++k) collect(q, explore);
      }

      for (auto& t : batch) t = buffer.sample(rng);
      const Eigen::MatrixXd q_target = target.forward(all_states);
      const Eigen::MatrixXd q_online = settings.double_q ? net.forward(all_states) : q_target;
      double loss = 0.0;
      for (int m = 0; m < config.micro_batches; ++m) {
        Eigen::VectorXd y(micro);
        for (int i = 0; i < micro; ++i) {
          const Transition& t = batch[static_cast<std::size_t>(m * micro + i)];
          states[static_cast<std::size_t>(i)] = t.state;
          const double future = t.done ? mdp.reward(t.next) : q_target(argmax_lowest(q_online, t.next), t.next);
          y(i) = t.reward + config.gamma * future;
        }
        Mlp::Cache cache;
        const Eigen::MatrixXd out = net.forward(one_hot(states, n), cache);
        Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(n_actions, micro);
        for (int i = 0; i < micro; ++i) {
          const Transition& t = batch[static_cast<std::size_t>(m * micro + i)];
          const double err = out(t.action, i) - y(i);
          const double abs_err = std::abs(err);
          if (abs_err <= settings.huber_delta) {
            loss += 0.5 * err * err;
            grad_out(t.action, i) = err / micro;
          } else {
            loss += settings.huber_delta * (abs_err - 0.5 * settings.huber_delta);
            grad_out(t.action, i) = std::copysign(settings.huber_delta, err) / micro;
          }
        }
        grads[static_cast<std::size_t>(m)] = net.backward(cache, grad_out);
      }
      loss /= config.batch_size;
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::DivergedLoss, "loss diverged at update " + std::to_string(step));
      }
      epoch_loss += loss;

      const double progress = static_cast<double>(step) / total;
      optimizer.set_learning_rate(config.step_size() * (1.0 - (1.0 - settings.final_lr_fraction) * progress));
      const Eigen::VectorXd g = combine_gradients(grads, dp ? &*dp : nullptr, rng, &result.accountant);
      net.add_to_parameters(optimizer.step(g));
      ++result.updates;
      if (result.updates % settings.target_update_interval == 0) target = net;
    }
    result.epoch_losses.push_back(epoch_loss / config.iterations);
  }
  result.policy = q_network_policy(mdp, net);
  return result;
}

}  // namespace pril
