#include <istream>
#include <ostream>
#include <stdexcept>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "uavwpcn/config_io.hpp"
#include "uavwpcn/orchestrator.hpp"

namespace uavwpcn {
namespace {

constexpr const char* kStateMagic = "uavwpcn-trainer-state";
constexpr int kStateVersion = 1;

template <class Archive, int R, int C>
void save_matrix(Archive& ar, const Eigen::Matrix<double, R, C>& m) {
  ar(static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols()));
  ar(cereal::binary_data(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)));
}

template <class Archive, int R, int C>
void load_matrix(Archive& ar, Eigen::Matrix<double, R, C>& m) {
  std::int64_t rows = 0, cols = 0;
  ar(rows, cols);
  if (rows < 0 || cols < 0 || (R != Eigen::Dynamic && rows != R) || (C != Eigen::Dynamic && cols != C)) {
    throw std::runtime_error("corrupt trainer state: bad matrix shape");
  }
  m.resize(rows, cols);
  ar(cereal::binary_data(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)));
}

// Parameters and Adam moments of one network; shapes are fixed by the config.
template <class Archive>
void save_net(Archive& ar, const Mlp<double>& net) { save_matrix(ar, net.parameters()); }

template <class Archive>
void load_net(Archive& ar, Mlp<double>& net) {
  Eigen::VectorXd p;
  load_matrix(ar, p);
  if (p.size() != net.parameter_count()) throw std::runtime_error("corrupt trainer state: parameter count");
  net.parameters() = p;
}

template <class Archive>
void save_adam(Archive& ar, const AdamState<double>& s) {
  save_matrix(ar, s.m);
  save_matrix(ar, s.v);
  ar(static_cast<std::int64_t>(s.step), s.lr);
}

template <class Archive>
void load_adam(Archive& ar, AdamState<double>& s) {
  load_matrix(ar, s.m);
  load_matrix(ar, s.v);
  std::int64_t step = 0;
  ar(step, s.lr);
  s.step = step;
}

template <class Archive>
void save_metrics(Archive& ar, const EpisodeMetrics& m) {
  ar(static_cast<std::int64_t>(m.episode), m.c_total, m.mean_reward, static_cast<std::int64_t>(m.wns_below_c_min),
     static_cast<std::int64_t>(m.uavs_below_b_min), static_cast<std::int64_t>(m.d_min_violation_slots),
     m.min_pair_distance, static_cast<std::int64_t>(m.wet_slots), m.v_loss, m.q_loss, m.policy_loss, m.alpha_loss,
     m.alpha, m.dqn_loss, m.epsilon, m.dqn_lr);
}

template <class Archive>
void load_metrics(Archive& ar, EpisodeMetrics& m) {
  std::int64_t ep = 0, wns = 0, uavs = 0, dmin = 0, wet = 0;
  ar(ep, m.c_total, m.mean_reward, wns, uavs, dmin, m.min_pair_distance, wet, m.v_loss, m.q_loss, m.policy_loss,
     m.alpha_loss, m.alpha, m.dqn_loss, m.epsilon, m.dqn_lr);
  m.episode = ep;
  m.wns_below_c_min = wns;
  m.uavs_below_b_min = uavs;
  m.d_min_violation_slots = dmin;
  m.wet_slots = wet;
}

std::string fingerprint(const WorldConfig& c, const SchemeOptions& s, Index total, std::uint64_t seed) {
  return config_to_json(c).dump() + "|" + std::string(scheme_name(s.id)) + "|" + std::to_string(s.tbar) + "|" +
         std::to_string(total) + "|" + std::to_string(seed);
}

}  // namespace

void Trainer::save_state(std::ostream& out) const {
  cereal::PortableBinaryOutputArchive ar(out);
  ar(std::string(kStateMagic), kStateVersion, fingerprint(config_, scheme_, total_episodes_, seed_));
  ar(static_cast<std::int64_t>(episode_), static_cast<std::uint64_t>(metrics_.size()));
  for (const auto& m : metrics_) save_metrics(ar, m);

  for (std::size_t u = 0; u < agents_.sac.size(); ++u) {
    const SacModel& s = agents_.sac[u];
    for (const Mlp<double>* net : {&s.actor, &s.v_main, &s.v_target, &s.q1, &s.q2}) save_net(ar, *net);
    ar(s.log_alpha);
    for (const AdamState<double>* o : {&s.actor_opt, &s.v_opt, &s.q1_opt, &s.q2_opt, &s.alpha_opt}) save_adam(ar, *o);
    save_net(ar, agents_.local_actors[u]);
    const DqnModel& d = agents_.dqn[u];
    save_net(ar, d.eval);
    save_net(ar, d.target);
    save_adam(ar, d.opt);
    ar(static_cast<std::int64_t>(d.train_steps));
  }

  ar(static_cast<std::uint64_t>(tier1_.size()), static_cast<std::int64_t>(tier1_.next_slot()));
  for (const auto& e : tier1_.storage()) {
    save_matrix(ar, e.state);
    save_matrix(ar, e.actions);
    save_matrix(ar, e.rewards);
    save_matrix(ar, e.next_state);
  }
  for (const auto& buffer : tier2_) {
    ar(static_cast<std::uint64_t>(buffer.size()), static_cast<std::int64_t>(buffer.next_slot()));
    for (const auto& e : buffer.storage()) {
      save_matrix(ar, e.observation);
      ar(static_cast<std::int64_t>(e.action), e.reward);
      save_matrix(ar, e.next_observation);
    }
  }
}

void Trainer::load_state(std::istream& in) {
  cereal::PortableBinaryInputArchive ar(in);
  std::string magic, print;
  int version = 0;
  try {
    ar(magic, version, print);
  } catch (const cereal::Exception&) {
    throw std::runtime_error("corrupt trainer state: unreadable header");
  }
  if (magic != kStateMagic || version != kStateVersion) throw std::runtime_error("not a trainer state file");
  if (print != fingerprint(config_, scheme_, total_episodes_, seed_)) {
    throw std::invalid_argument("trainer state was written for a different configuration");
  }
  try {
    std::int64_t episode = 0;
    std::uint64_t rows = 0;
    ar(episode, rows);
    std::vector<EpisodeMetrics> metrics(rows);
    for (auto& m : metrics) load_metrics(ar, m);

    AgentSet agents = agents_;
    for (std::size_t u = 0; u < agents.sac.size(); ++u) {
      SacModel& s = agents.sac[u];
      for (Mlp<double>* net : {&s.actor, &s.v_main, &s.v_target, &s.q1, &s.q2}) load_net(ar, *net);
      ar(s.log_alpha);
      for (AdamState<double>* o : {&s.actor_opt, &s.v_opt, &s.q1_opt, &s.q2_opt, &s.alpha_opt}) load_adam(ar, *o);
      load_net(ar, agents.local_actors[u]);
      DqnModel& d = agents.dqn[u];
      load_net(ar, d.eval);
      load_net(ar, d.target);
      load_adam(ar, d.opt);
      std::int64_t steps = 0;
      ar(steps);
      d.train_steps = steps;
    }

    std::uint64_t n = 0;
    std::int64_t next = 0;
    ar(n, next);
    std::vector<TierOneExperience> items(n);
    for (auto& e : items) {
      load_matrix(ar, e.state);
      load_matrix(ar, e.actions);
      load_matrix(ar, e.rewards);
      load_matrix(ar, e.next_state);
    }
    ReplayBuffer<TierOneExperience> tier1(tier1_.capacity());
    tier1.restore(std::move(items), next);

    std::vector<ReplayBuffer<TierTwoExperience>> tier2;
    for (const auto& old : tier2_) {
      ar(n, next);
      std::vector<TierTwoExperience> t2(n);
      for (auto& e : t2) {
        load_matrix(ar, e.observation);
        std::int64_t action = 0;
        ar(action, e.reward);
        e.action = action;
        load_matrix(ar, e.next_observation);
      }
      ReplayBuffer<TierTwoExperience> b(old.capacity());
      b.restore(std::move(t2), next);
      tier2.push_back(std::move(b));
    }

    episode_ = episode;
    metrics_ = std::move(metrics);
    agents_ = std::move(agents);
    tier1_ = std::move(tier1);
    tier2_ = std::move(tier2);
  } catch (const cereal::Exception& e) {
    throw std::runtime_error(std::string("corrupt trainer state: ") + e.what());
  }
}

}  // namespace uavwpcn
