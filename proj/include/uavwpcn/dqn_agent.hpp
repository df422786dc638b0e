#pragma once

#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"
#include "uavwpcn/neural.hpp"
#include "uavwpcn/rng.hpp"

namespace uavwpcn {

inline constexpr Index kSilentAction = -1;

struct DqnHyper {
  Index hidden_width = 256;
  Index hidden_layers = 3;
  double gamma = 0.99;
  double lr_start = 0.01;
  double lr_end = 1e-6;
  double epsilon_start = 0.9;
  double epsilon_end = 0.02;
  double epsilon_decay_fraction = 0.8;
  Index target_sync_period = 200;

  static DqnHyper from(const LearningConfig& l);
};

// Linear decay over the first `epsilon_decay_fraction` of the episodes, then flat.
double epsilon_at(const DqnHyper& h, Index episode, Index total_episodes);
// Exponential decay from lr_start (first episode) to lr_end (last episode).
double dqn_lr_at(const DqnHyper& h, Index episode, Index total_episodes);

class DqnModel {
 public:
  DqnModel() = default;
  DqnModel(Index num_wns, DqnHyper hyper, Rng& init_rng);

  const DqnHyper& hyper() const { return hyper_; }
  Index num_wns() const { return eval.output_size(); }

  Mlp<double> eval;    // lambda_1
  Mlp<double> target;  // lambda_2
  AdamState<double> opt;
  Index train_steps = 0;

 private:
  DqnHyper hyper_;
};

// Action is the 0-based WN index, or kSilentAction when the UAV collected nothing.
struct TierTwoExperience {
  Eigen::VectorXd observation;
  Index action = kSilentAction;
  double reward = 0.0;
  Eigen::VectorXd next_observation;
};

struct DqnBatch {
  Eigen::MatrixXd observations;
  Eigen::VectorXi actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_observations;

  Index size() const { return observations.cols(); }
  static DqnBatch gather(const std::vector<TierTwoExperience>& items);
};

Eigen::VectorXd q_values(const DqnModel& model, const Eigen::Ref<const Eigen::VectorXd>& observation);

// With probability 1 - epsilon the raw Q-vector; otherwise a uniformly random
// permutation of 0..W-1, i.e. a random preference ranking.
Eigen::VectorXd select_scores(const DqnModel& model, const Eigen::Ref<const Eigen::VectorXd>& observation,
                              double epsilon, Rng& rng);

// Targets r + gamma * max Q_target(o'), held constant. Mean over the
// non-silent samples; silent ones carry no gradient.
Eigen::RowVectorXd dqn_targets(const DqnModel& model, const DqnBatch& batch);
double dqn_loss(const DqnModel& model, const DqnBatch& batch, Eigen::VectorXd* grad);

// One Adam step at `lr`; copies eval into target every target_sync_period steps.
double dqn_train_step(DqnModel& model, const DqnBatch& batch, double lr);

std::vector<NamedArray> export_dqn_model(const DqnModel& model);
void import_dqn_model(DqnModel& model, const std::vector<NamedArray>& arrays);

}  // namespace uavwpcn
