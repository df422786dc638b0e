#pragma once

#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"
#include "uavwpcn/environment.hpp"
#include "uavwpcn/neural.hpp"
#include "uavwpcn/rng.hpp"

namespace uavwpcn {

struct SacDims {
  Index observation = 0;  // own observation, actor input
  Index joint_state = 0;  // concatenation of every UAV's observation
  Index action = 3;       // heading, speed, WET
};

struct SacHyper {
  Index hidden_width = 256;
  Index hidden_layers = 3;
  double gamma = 0.99;
  double tau = 0.999;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 2e-4;
  double initial_alpha = 0.2;
  double entropy_target = 0.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  // Entropy target is +|o| unless the config negates it.
  static SacHyper from(const LearningConfig& l, Index observation_size);
};

// Actor outputs (mean, log-std) per action dimension; critics take the joint state.
class SacModel {
 public:
  SacModel() = default;
  SacModel(SacDims dims, SacHyper hyper, Rng& init_rng);

  const SacDims& dims() const { return dims_; }
  const SacHyper& hyper() const { return hyper_; }
  double alpha() const { return std::exp(log_alpha); }

  Mlp<double> actor;
  Mlp<double> v_main;    // phi_1
  Mlp<double> v_target;  // phi_2
  Mlp<double> q1;
  Mlp<double> q2;
  double log_alpha = 0.0;

  AdamState<double> actor_opt, v_opt, q1_opt, q2_opt, alpha_opt;

 private:
  SacDims dims_;
  SacHyper hyper_;
};

// Column-major batch; `observations` is the acting UAV's slice of `states`.
struct SacBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;  // squashed, in [-1, 1]
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;

  Index size() const { return states.cols(); }
};

// Standard-normal draws for the value-target action and the policy-loss action.
struct SacNoise {
  Eigen::MatrixXd value;
  Eigen::MatrixXd policy;

  static SacNoise draw(Index action_dim, Index batch, Rng& rng);
};

struct SacLosses {
  double v = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double policy = 0.0;
  double alpha = 0.0;
};

struct SacGradients {
  Eigen::VectorXd actor, v, q1, q2;
  double log_alpha = 0.0;
};

struct PolicySample {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd log_std;     // clamped
  Eigen::MatrixXd clamp_mask;  // 1 where log-std was inside the clamp range
  Eigen::MatrixXd pre_tanh;
  Eigen::MatrixXd action;      // tanh(pre_tanh)
  Eigen::RowVectorXd log_prob;
  Mlp<double>::Tape tape;
};

// Reparameterized squashed-Gaussian draw: a = tanh(mean + std * noise).
PolicySample sample_policy(const Mlp<double>& actor, const Eigen::Ref<const Eigen::MatrixXd>& observations,
                           const Eigen::Ref<const Eigen::MatrixXd>& noise, const SacHyper& hyper);

// log pi(action | observation) for squashed actions strictly inside (-1, 1).
Eigen::RowVectorXd policy_log_prob(const Mlp<double>& actor, const Eigen::Ref<const Eigen::MatrixXd>& observations,
                                   const Eigen::Ref<const Eigen::MatrixXd>& actions, const SacHyper& hyper);

// Every loss at the current parameters; fills `grads` when non-null. Value
// and Q targets are held constant (no gradient flows into them).
SacLosses sac_losses(const SacModel& model, const SacBatch& batch, const SacNoise& noise, SacGradients* grads);

// One update of actor, V, both Q nets and the temperature, then the soft
// update of the target V net.
SacLosses sac_train_step(SacModel& model, const SacBatch& batch, Rng& rng);

// Squashed action for one observation.
Eigen::Vector3d sac_act(const SacModel& model, const Eigen::Ref<const Eigen::VectorXd>& observation,
                        bool deterministic, Rng& rng);

// Affine range mapping of a squashed action; heading stays below 2*pi.
SlotAction to_slot_action(const Eigen::Ref<const Eigen::Vector3d>& squashed, double v_max);

// Actor snapshots pushed from the central trainer to a UAV.
std::vector<NamedArray> export_actor(const SacModel& model);
void import_actor(SacModel& model, const std::vector<NamedArray>& snapshot);

std::vector<NamedArray> export_sac_model(const SacModel& model);
void import_sac_model(SacModel& model, const std::vector<NamedArray>& arrays);

}  // namespace uavwpcn
