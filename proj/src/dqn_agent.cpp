#include "uavwpcn/dqn_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uavwpcn {

DqnHyper DqnHyper::from(const LearningConfig& l) {
  DqnHyper h;
  h.hidden_width = l.hidden_width;
  h.hidden_layers = l.hidden_layers;
  h.gamma = l.dqn_gamma;
  h.lr_start = l.dqn_lr_start;
  h.lr_end = l.dqn_lr_end;
  h.epsilon_start = l.epsilon_start;
  h.epsilon_end = l.epsilon_end;
  h.epsilon_decay_fraction = l.epsilon_decay_fraction;
  h.target_sync_period = l.target_sync_period;
  return h;
}

double epsilon_at(const DqnHyper& h, Index episode, Index total_episodes) {
  const double span = h.epsilon_decay_fraction * static_cast<double>(total_episodes);
  if (span <= 0.0) return h.epsilon_end;
  const double frac = std::min(1.0, static_cast<double>(episode) / span);
  return h.epsilon_start + frac * (h.epsilon_end - h.epsilon_start);
}

double dqn_lr_at(const DqnHyper& h, Index episode, Index total_episodes) {
  if (total_episodes <= 1) return h.lr_start;
  const double frac = std::clamp(static_cast<double>(episode) / static_cast<double>(total_episodes - 1), 0.0, 1.0);
  return h.lr_start * std::pow(h.lr_end / h.lr_start, frac);
}

DqnModel::DqnModel(Index num_wns, DqnHyper hyper, Rng& init_rng) : hyper_(hyper) {
  eval = Mlp<double>::with_hidden(num_wns + 3, hyper.hidden_width, hyper.hidden_layers, num_wns);
  eval.initialize(init_rng);
  target = eval;
  opt = AdamState<double>(eval.parameter_count(), hyper.lr_start);
}

DqnBatch DqnBatch::gather(const std::vector<TierTwoExperience>& items) {
  if (items.empty()) throw std::invalid_argument("empty DQN batch");
  const Index n = static_cast<Index>(items.size());
  const Index d = items.front().observation.size();
  DqnBatch b{Eigen::MatrixXd(d, n), Eigen::VectorXi(n), Eigen::VectorXd(n), Eigen::MatrixXd(d, n)};
  for (Index j = 0; j < n; ++j) {
    const auto& e = items[static_cast<std::size_t>(j)];
    b.observations.col(j) = e.observation;
    b.actions(j) = static_cast<int>(e.action);
    b.rewards(j) = e.reward;
    b.next_observations.col(j) = e.next_observation;
  }
  return b;
}

Eigen::VectorXd q_values(const DqnModel& model, const Eigen::Ref<const Eigen::VectorXd>& observation) {
  return model.eval.forward(observation);
}

Eigen::VectorXd select_scores(const DqnModel& model, const Eigen::Ref<const Eigen::VectorXd>& observation,
                              double epsilon, Rng& rng) {
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    std::vector<double> ranks(static_cast<std::size_t>(model.num_wns()));
    std::iota(ranks.begin(), ranks.end(), 0.0);
    std::shuffle(ranks.begin(), ranks.end(), rng);
    return Eigen::Map<Eigen::VectorXd>(ranks.data(), model.num_wns());
  }
  return q_values(model, observation);
}

Eigen::RowVectorXd dqn_targets(const DqnModel& model, const DqnBatch& batch) {
  return batch.rewards.transpose() + model.hyper().gamma * model.target.forward(batch.next_observations).colwise().maxCoeff();
}

double dqn_loss(const DqnModel& model, const DqnBatch& batch, Eigen::VectorXd* grad) {
  const Index n = batch.size();
  const Eigen::RowVectorXd target = dqn_targets(model, batch);
  Mlp<double>::Tape tape;
  const Eigen::MatrixXd q = model.eval.forward(batch.observations, tape);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q.rows(), n);
  Index active = 0;
  for (Index j = 0; j < n; ++j) active += batch.actions(j) != kSilentAction;
  double loss = 0.0;
  if (active > 0) {
    const double inv = 1.0 / static_cast<double>(active);
    for (Index j = 0; j < n; ++j) {
      const int a = batch.actions(j);
      if (a == kSilentAction) continue;
      if (a < 0 || a >= q.rows()) throw std::out_of_range("DQN action index out of range");
      const double err = q(a, j) - target(j);
      loss += 0.5 * err * err * inv;
      g(a, j) = err * inv;
    }
  }
  if (grad) {
    *grad = Eigen::VectorXd::Zero(model.eval.parameter_count());
    model.eval.backward(tape, g, *grad);
  }
  return loss;
}

double dqn_train_step(DqnModel& model, const DqnBatch& batch, double lr) {
  if (batch.size() < 1) throw std::invalid_argument("empty DQN batch");
  Eigen::VectorXd grad;
  const double loss = dqn_loss(model, batch, &grad);
  model.opt.lr = lr;
  adam_step<double>(model.eval.parameters(), grad, model.opt);
  ++model.train_steps;
  if (model.hyper().target_sync_period > 0 && model.train_steps % model.hyper().target_sync_period == 0) {
    model.target = model.eval;
  }
  return loss;
}

std::vector<NamedArray> export_dqn_model(const DqnModel& model) {
  auto out = mlp_arrays(model.eval, "eval");
  auto t = mlp_arrays(model.target, "target");
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

void import_dqn_model(DqnModel& model, const std::vector<NamedArray>& arrays) {
  load_mlp_arrays(model.eval, arrays, "eval");
  load_mlp_arrays(model.target, arrays, "target");
}

}  // namespace uavwpcn
