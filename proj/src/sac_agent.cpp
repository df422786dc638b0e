#include "uavwpcn/sac_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavwpcn {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2) without cancellation.
double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

MatrixXd stack_rows(const Eigen::Ref<const MatrixXd>& top, const Eigen::Ref<const MatrixXd>& bottom) {
  MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

SacHyper SacHyper::from(const LearningConfig& l, Index observation_size) {
  SacHyper h;
  h.hidden_width = l.hidden_width;
  h.hidden_layers = l.hidden_layers;
  h.gamma = l.gamma;
  h.tau = l.tau;
  h.lr_actor = l.lr_actor;
  h.lr_critic = l.lr_critic;
  h.lr_alpha = l.lr_alpha;
  h.initial_alpha = l.initial_alpha;
  const Index magnitude = l.entropy_target_action_dim ? 3 : observation_size;
  h.entropy_target = (l.negate_entropy_target ? -1.0 : 1.0) * static_cast<double>(magnitude);
  return h;
}

SacModel::SacModel(SacDims dims, SacHyper hyper, Rng& init_rng) : dims_(dims), hyper_(hyper) {
  const Index hw = hyper.hidden_width;
  const Index hl = hyper.hidden_layers;
  actor = Mlp<double>::with_hidden(dims.observation, hw, hl, 2 * dims.action);
  v_main = Mlp<double>::with_hidden(dims.joint_state, hw, hl, 1);
  q1 = Mlp<double>::with_hidden(dims.joint_state + dims.action, hw, hl, 1);
  q2 = Mlp<double>::with_hidden(dims.joint_state + dims.action, hw, hl, 1);
  actor.initialize(init_rng);
  v_main.initialize(init_rng);
  q1.initialize(init_rng);
  q2.initialize(init_rng);
  v_target = v_main;
  log_alpha = std::log(hyper.initial_alpha);

  actor_opt = AdamState<double>(actor.parameter_count(), hyper.lr_actor);
  v_opt = AdamState<double>(v_main.parameter_count(), hyper.lr_critic);
  q1_opt = AdamState<double>(q1.parameter_count(), hyper.lr_critic);
  q2_opt = AdamState<double>(q2.parameter_count(), hyper.lr_critic);
  alpha_opt = AdamState<double>(1, hyper.lr_alpha);
}

SacNoise SacNoise::draw(Index action_dim, Index batch, Rng& rng) {
  SacNoise n{MatrixXd(action_dim, batch), MatrixXd(action_dim, batch)};
  for (Index j = 0; j < batch; ++j)
    for (Index i = 0; i < action_dim; ++i) n.value(i, j) = standard_normal(rng);
  for (Index j = 0; j < batch; ++j)
    for (Index i = 0; i < action_dim; ++i) n.policy(i, j) = standard_normal(rng);
  return n;
}

PolicySample sample_policy(const Mlp<double>& actor, const Eigen::Ref<const MatrixXd>& observations,
                           const Eigen::Ref<const MatrixXd>& noise, const SacHyper& hyper) {
  PolicySample s;
  const MatrixXd out = actor.forward(observations, s.tape);
  const Index dim = out.rows() / 2;
  if (noise.rows() != dim || noise.cols() != observations.cols()) throw std::invalid_argument("noise shape mismatch");
  s.mean = out.topRows(dim);
  const MatrixXd raw = out.bottomRows(dim);
  s.log_std = raw.cwiseMax(hyper.log_std_min).cwiseMin(hyper.log_std_max);
  s.clamp_mask = ((raw.array() > hyper.log_std_min) && (raw.array() < hyper.log_std_max)).cast<double>();
  s.pre_tanh = s.mean.array() + s.log_std.array().exp() * noise.array();
  s.action = s.pre_tanh.array().tanh();
  s.log_prob = Eigen::RowVectorXd::Zero(observations.cols());
  for (Index j = 0; j < s.pre_tanh.cols(); ++j) {
    double lp = 0.0;
    for (Index i = 0; i < dim; ++i) {
      lp += -0.5 * noise(i, j) * noise(i, j) - s.log_std(i, j) - kHalfLog2Pi - log_one_minus_tanh_sq(s.pre_tanh(i, j));
    }
    s.log_prob(j) = lp;
  }
  return s;
}

Eigen::RowVectorXd policy_log_prob(const Mlp<double>& actor, const Eigen::Ref<const MatrixXd>& observations,
                                   const Eigen::Ref<const MatrixXd>& actions, const SacHyper& hyper) {
  const MatrixXd out = actor.forward(observations);
  const Index dim = out.rows() / 2;
  Eigen::RowVectorXd lp = Eigen::RowVectorXd::Zero(observations.cols());
  for (Index j = 0; j < observations.cols(); ++j) {
    for (Index i = 0; i < dim; ++i) {
      const double log_std = std::clamp(out(dim + i, j), hyper.log_std_min, hyper.log_std_max);
      const double u = std::atanh(actions(i, j));
      const double z = (u - out(i, j)) / std::exp(log_std);
      lp(j) += -0.5 * z * z - log_std - kHalfLog2Pi - log_one_minus_tanh_sq(u);
    }
  }
  return lp;
}

SacLosses sac_losses(const SacModel& model, const SacBatch& batch, const SacNoise& noise, SacGradients* grads) {
  const SacHyper& h = model.hyper();
  const Index n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double alpha = model.alpha();
  SacLosses losses;

  if (grads) {
    grads->actor = VectorXd::Zero(model.actor.parameter_count());
    grads->v = VectorXd::Zero(model.v_main.parameter_count());
    grads->q1 = VectorXd::Zero(model.q1.parameter_count());
    grads->q2 = VectorXd::Zero(model.q2.parameter_count());
    grads->log_alpha = 0.0;
  }

  // (i) V_1 regression onto min-Q of a fresh policy action minus alpha * log pi.
  const PolicySample fresh = sample_policy(model.actor, batch.observations, noise.value, h);
  {
    const MatrixXd qa = stack_rows(batch.states, fresh.action);
    const Eigen::RowVectorXd q_min = model.q1.forward(qa).cwiseMin(model.q2.forward(qa));
    const Eigen::RowVectorXd target = q_min - alpha * fresh.log_prob;
    Mlp<double>::Tape tape;
    const Eigen::RowVectorXd v = model.v_main.forward(batch.states, tape);
    const Eigen::RowVectorXd err = v - target;
    losses.v = 0.5 * err.squaredNorm() * inv_n;
    if (grads) model.v_main.backward(tape, err * inv_n, grads->v);
  }

  // (ii) Q_m regression onto r + gamma * V_2(s').
  {
    const Eigen::RowVectorXd target =
        batch.rewards.transpose() + h.gamma * model.v_target.forward(batch.next_states);
    const MatrixXd qa = stack_rows(batch.states, batch.actions);
    Mlp<double>::Tape t1, t2;
    const Eigen::RowVectorXd e1 = model.q1.forward(qa, t1) - target;
    const Eigen::RowVectorXd e2 = model.q2.forward(qa, t2) - target;
    losses.q1 = 0.5 * e1.squaredNorm() * inv_n;
    losses.q2 = 0.5 * e2.squaredNorm() * inv_n;
    if (grads) {
      model.q1.backward(t1, e1 * inv_n, grads->q1);
      model.q2.backward(t2, e2 * inv_n, grads->q2);
    }
  }

  // (iii) Policy: alpha * log pi(a_theta) - min Q(s, a_theta), reparameterized.
  {
    const PolicySample ps = sample_policy(model.actor, batch.observations, noise.policy, h);
    const MatrixXd qa = stack_rows(batch.states, ps.action);
    Mlp<double>::Tape t1, t2;
    const Eigen::RowVectorXd v1 = model.q1.forward(qa, t1);
    const Eigen::RowVectorXd v2 = model.q2.forward(qa, t2);
    const Eigen::RowVectorXd q_min = v1.cwiseMin(v2);
    losses.policy = (alpha * ps.log_prob - q_min).sum() * inv_n;

    if (grads) {
      const Eigen::RowVectorXd pick1 = (v1.array() <= v2.array()).cast<double>();
      const Eigen::RowVectorXd pick2 = Eigen::RowVectorXd::Ones(n) - pick1;
      VectorXd scratch1, scratch2;
      const MatrixXd dqa1 = model.q1.backward(t1, -pick1 * inv_n, scratch1);
      const MatrixXd dqa2 = model.q2.backward(t2, -pick2 * inv_n, scratch2);
      const Index dim = ps.action.rows();
      const MatrixXd d_action = dqa1.bottomRows(dim) + dqa2.bottomRows(dim);

      // d log pi / d pre_tanh = 2 tanh(u); d a / d u = 1 - a^2.
      const MatrixXd d_pre = (alpha * inv_n) * 2.0 * ps.action.array() +
                             d_action.array() * (1.0 - ps.action.array().square());
      const MatrixXd d_log_std =
          ((-alpha * inv_n) + d_pre.array() * ps.log_std.array().exp() * noise.policy.array()) *
          ps.clamp_mask.array();
      model.actor.backward(ps.tape, stack_rows(d_pre, d_log_std), grads->actor);
    }
  }

  // (iv) Temperature, log pi held constant.
  {
    const double mean_term = (-fresh.log_prob.array() - h.entropy_target).mean();
    losses.alpha = alpha * mean_term;
    if (grads) grads->log_alpha = alpha * mean_term;
  }
  return losses;
}

SacLosses sac_train_step(SacModel& model, const SacBatch& batch, Rng& rng) {
  if (batch.size() < 1) throw std::invalid_argument("empty SAC batch");
  const SacNoise noise = SacNoise::draw(model.dims().action, batch.size(), rng);
  SacGradients g;
  const SacLosses losses = sac_losses(model, batch, noise, &g);

  adam_step<double>(model.v_main.parameters(), g.v, model.v_opt);
  adam_step<double>(model.q1.parameters(), g.q1, model.q1_opt);
  adam_step<double>(model.q2.parameters(), g.q2, model.q2_opt);
  adam_step<double>(model.actor.parameters(), g.actor, model.actor_opt);
  Eigen::VectorXd la(1);
  la(0) = model.log_alpha;
  adam_step<double>(la, Eigen::VectorXd::Constant(1, g.log_alpha), model.alpha_opt);
  model.log_alpha = la(0);
  soft_update(model.v_target, model.v_main, model.hyper().tau);
  return losses;
}

Eigen::Vector3d sac_act(const SacModel& model, const Eigen::Ref<const VectorXd>& observation, bool deterministic,
                        Rng& rng) {
  if (observation.size() != model.dims().observation) throw std::invalid_argument("observation width mismatch");
  if (deterministic) {
    const VectorXd out = model.actor.forward(observation);
    return out.head<3>().array().tanh();
  }
  MatrixXd noise(3, 1);
  for (Index i = 0; i < 3; ++i) noise(i, 0) = standard_normal(rng);
  return sample_policy(model.actor, observation, noise, model.hyper()).action.col(0);
}

SlotAction to_slot_action(const Eigen::Ref<const Eigen::Vector3d>& squashed, double v_max) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  SlotAction a;
  a.heading = std::clamp((squashed(0) + 1.0) * 0.5 * two_pi, 0.0, std::nextafter(two_pi, 0.0));
  a.speed = std::clamp((squashed(1) + 1.0) * 0.5 * v_max, 0.0, v_max);
  a.wet = squashed(2) > 0.0 ? 1 : 0;
  return a;
}

std::vector<NamedArray> export_actor(const SacModel& model) { return mlp_arrays(model.actor, "actor"); }

void import_actor(SacModel& model, const std::vector<NamedArray>& snapshot) {
  load_mlp_arrays(model.actor, snapshot, "actor");
}

std::vector<NamedArray> export_sac_model(const SacModel& model) {
  std::vector<NamedArray> out = mlp_arrays(model.actor, "actor");
  for (auto&& [net, name] : {std::pair{&model.v_main, "v_main"}, std::pair{&model.v_target, "v_target"},
                             std::pair{&model.q1, "q1"}, std::pair{&model.q2, "q2"}}) {
    auto arrays = mlp_arrays(*net, name);
    out.insert(out.end(), arrays.begin(), arrays.end());
  }
  out.push_back({"log_alpha", {1}, {model.log_alpha}});
  return out;
}

void import_sac_model(SacModel& model, const std::vector<NamedArray>& arrays) {
  load_mlp_arrays(model.actor, arrays, "actor");
  load_mlp_arrays(model.v_main, arrays, "v_main");
  load_mlp_arrays(model.v_target, arrays, "v_target");
  load_mlp_arrays(model.q1, arrays, "q1");
  load_mlp_arrays(model.q2, arrays, "q2");
  for (const auto& a : arrays) {
    if (a.name == "log_alpha" && a.data.size() == 1) {
      model.log_alpha = a.data[0];
      return;
    }
  }
  throw std::invalid_argument("checkpoint is missing 'log_alpha'");
}

}  // namespace uavwpcn
