#include "pril/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pril/value_iteration.hpp"

namespace pril {

namespace {

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

struct Step {
  int state;
  int action;
  double reward;
  double old_prob;
  int next;
  bool done;
  bool ends;
  double advantage = 0.0;
  double value_target = 0.0;
};

}  // namespace

Policy actor_policy(const Mlp& actor, int n_states) {
  Policy p;
  p.probs = softmax_columns(actor.forward(Eigen::MatrixXd::Identity(n_states, n_states))).transpose();
  return p;
}

TrainResult train_ppo(const Mdp& mdp, const TrainConfig& config, Mlp& actor, Mlp& critic,
                      const std::optional<DpSgdConfig>& dp_actor, Rng& rng, const PpoSettings& settings) {
  config.validate();
  const int n = mdp.n_states();
  const int n_actions = mdp.n_actions();
  if (actor.n_inputs() != n || actor.n_outputs() != n_actions || critic.n_inputs() != n || critic.n_outputs() != 1) {
    throw Error(ErrorKind::InvalidArgument, "network shapes do not match the MDP");
  }
  if (settings.actor_passes < 1 || !(settings.critic_grad_clip > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid PPO settings");
  }
  const int cap = settings.max_episode_steps > 0 ? settings.max_episode_steps : default_max_steps(n);
  const int micro = config.batch_size / config.micro_batches;
  const Eigen::MatrixXd all_states = Eigen::MatrixXd::Identity(n, n);

  TrainResult result;
  Optimizer actor_opt(config.optimizer, config.step_size(), actor.n_parameters());
  Optimizer critic_opt(config.optimizer, config.step_size(), critic.n_parameters());

  const Eigen::VectorXd reset_dist = collection_start(mdp, settings.exploring_starts);
  int state = sample_categorical(reset_dist, rng);
  int episode_steps = 0;
  std::vector<Step> steps;
  std::vector<int> goal_states;  // goal arrivals, used only by the critic
  std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(config.micro_batches));
  std::vector<int> batch_states(static_cast<std::size_t>(micro));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
      const int update = epoch * config.iterations + it;
      const Eigen::MatrixXd probs = softmax_columns(actor.forward(all_states));
      steps.clear();
      goal_states.clear();
      while (static_cast<int>(steps.size()) < config.batch_size) {
        const int a = sample_categorical(probs.col(state), rng);
        const int next = env_step(mdp, state, a, rng);
        ++episode_steps;
        const bool done = mdp.is_terminal(next);
        const bool truncated = !done && episode_steps >= cap;
        steps.push_back({state, a, mdp.reward(state), probs(a, state), next, done, done || truncated});
        if (done) goal_states.push_back(next);
        if (done || truncated) {
          state = sample_categorical(reset_dist, rng);
          episode_steps = 0;
        } else {
          state = next;
        }
      }
      if (steps.empty()) throw Error(ErrorKind::DegenerateBatch, "trajectory batch has no steps");

      // Generalized advantage estimates. The goal is worth its reward; cut
      // trajectories bootstrap from the critic.
      const Eigen::MatrixXd values = critic.forward(all_states);
      double gae = 0.0;
      for (std::size_t k = steps.size(); k-- > 0;) {
        Step& st = steps[k];
        const double v = values(0, st.state);
        const double next_value = st.done ? mdp.reward(st.next) : values(0, st.next);
        const bool cut = st.ends || k + 1 == steps.size();
        const double delta = st.reward + config.gamma * next_value - v;
        gae = delta + (cut ? 0.0 : config.gamma * settings.gae_lambda * gae);
        st.advantage = gae;
        st.value_target = gae + v;
      }
      double mean = 0.0;
      for (const Step& st : steps) mean += st.advantage;
      mean /= static_cast<double>(steps.size());
      double var = 0.0;
      for (const Step& st : steps) var += (st.advantage - mean) * (st.advantage - mean);
      const double sd = std::sqrt(var / static_cast<double>(steps.size()));
      for (Step& st : steps) st.advantage = (st.advantage - mean) / (sd + 1e-8);

      double surrogate = 0.0;
      for (int pass = 0; pass < settings.actor_passes; ++pass) {
        surrogate = 0.0;
        for (int m = 0; m < config.micro_batches; ++m) {
          for (int i = 0; i < micro; ++i) batch_states[static_cast<std::size_t>(i)] = steps[static_cast<std::size_t>(m * micro + i)].state;
          Mlp::Cache cache;
          const Eigen::MatrixXd p = softmax_columns(actor.forward(one_hot(batch_states, n), cache));
          Eigen::MatrixXd grad_out(n_actions, micro);
          for (int i = 0; i < micro; ++i) {
            const Step& st = steps[static_cast<std::size_t>(m * micro + i)];
            const double ratio = p(st.action, i) / st.old_prob;
            double entropy = 0.0;
            for (int a = 0; a < n_actions; ++a) {
              if (p(a, i) > 0.0) entropy -= p(a, i) * std::log(p(a, i));
            }
            surrogate += ratio * st.advantage + settings.entropy_coef * entropy;
            for (int a = 0; a < n_actions; ++a) {
              const double indicator = a == st.action ? 1.0 : 0.0;
              const double d_ratio = st.advantage * ratio * (indicator - p(a, i));
              const double log_p = p(a, i) > 0.0 ? std::log(p(a, i)) : 0.0;
              const double d_entropy = -p(a, i) * (log_p + entropy);
              grad_out(a, i) = -(d_ratio + settings.entropy_coef * d_entropy) / micro;
            }
          }
          grads[static_cast<std::size_t>(m)] = actor.backward(cache, grad_out);
        }
        surrogate /= static_cast<double>(steps.size());
        if (!std::isfinite(surrogate)) {
          throw Error(ErrorKind::DivergedLoss, "actor objective diverged at update " + std::to_string(update));
        }
        const Eigen::VectorXd g = combine_gradients(grads, dp_actor ? &*dp_actor : nullptr, rng, &result.accountant);
        actor.add_to_parameters(actor_opt.step(g));
      }

      // Critic regression on the value targets plus goal arrivals.
      std::vector<int> critic_states;
      Eigen::MatrixXd targets(1, static_cast<Eigen::Index>(steps.size() + goal_states.size()));
      for (std::size_t k = 0; k < steps.size(); ++k) {
        critic_states.push_back(steps[k].state);
        targets(0, static_cast<Eigen::Index>(k)) = steps[k].value_target;
      }
      for (std::size_t k = 0; k < goal_states.size(); ++k) {
        critic_states.push_back(goal_states[k]);
        targets(0, static_cast<Eigen::Index>(steps.size() + k)) = mdp.reward(goal_states[k]);
      }
      Mlp::Cache cache;
      const LossAndGrad fit = squared_loss(critic.forward(one_hot(critic_states, n), cache), targets);
      if (!std::isfinite(fit.loss)) {
        throw Error(ErrorKind::DivergedLoss, "critic loss diverged at update " + std::to_string(update));
      }
      Eigen::VectorXd critic_grad = critic.backward(cache, fit.grad_output);
      clip_to_norm(critic_grad, settings.critic_grad_clip);
      critic.add_to_parameters(critic_opt.step(critic_grad));
      epoch_loss += fit.loss;
      ++result.updates;
    }
    result.epoch_losses.push_back(epoch_loss / config.iterations);
  }
  result.policy = actor_policy(actor, n);
  return result;
}

}  // namespace pril
