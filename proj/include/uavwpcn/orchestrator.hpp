#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"
#include "uavwpcn/dqn_agent.hpp"
#include "uavwpcn/environment.hpp"
#include "uavwpcn/rng.hpp"
#include "uavwpcn/sac_agent.hpp"

namespace uavwpcn {

enum class SchemeId { mahdrl, mahdrl_no_hoe, phase_division, team, random_wdc };

inline constexpr SchemeId kAllSchemes[] = {SchemeId::mahdrl, SchemeId::mahdrl_no_hoe, SchemeId::phase_division,
                                           SchemeId::team, SchemeId::random_wdc};

std::string_view scheme_name(SchemeId id);
SchemeId parse_scheme(std::string_view name);  // throws std::invalid_argument

struct SchemeOptions {
  SchemeId id = SchemeId::mahdrl;
  Index tbar = 0;  // phase division: slots 1..tbar-1 are the WET phase
};

// Executed (post-override) slot decision of each UAV.
struct SlotPlan {
  std::vector<SlotAction> actions;
  Eigen::Matrix3Xd squashed;  // what the SAC stores, after scheme overrides
  std::vector<bool> wdc_enabled;
};

// Scheme overrides on top of the policy's squashed actions.
SlotPlan plan_slot(const Eigen::Matrix3Xd& policy_actions, const WorldState& state, const WorldConfig& config,
                   const SchemeOptions& scheme);

struct TierOneExperience {
  Eigen::VectorXd state;
  Eigen::Matrix3Xd actions;  // one column per UAV, squashed
  Eigen::VectorXd rewards;
  Eigen::VectorXd next_state;
};

// Builds UAV u's SAC batch out of shared joint-state experiences.
SacBatch gather_sac_batch(const std::vector<const TierOneExperience*>& items, Index uav, Index observation_size);

struct EpisodeMetrics {
  Index episode = 0;
  double c_total = 0.0;
  double mean_reward = 0.0;  // tier-1 reward per UAV per slot
  Index wns_below_c_min = 0;
  Index uavs_below_b_min = 0;
  Index d_min_violation_slots = 0;
  double min_pair_distance = 0.0;
  Index wet_slots = 0;  // UAV-slots with WET on
  double v_loss = 0.0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double dqn_loss = 0.0;
  double epsilon = 0.0;
  double dqn_lr = 0.0;
};

struct UavSlotRecord {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  int wet = 0;
  double battery = 0.0;
  std::vector<Index> served;  // WN per sub-slot, -1 when silent
  double data = 0.0;
};

struct SlotRecord {
  Index episode = 0;
  Index slot = 0;
  std::vector<UavSlotRecord> uavs;
  std::vector<int> wn_flags;  // at the start of the slot
  std::vector<double> wn_batteries;  // at the end of the slot
  double c_total = 0.0;
};

// Agents of a run: central SAC models, the actor copies on the UAVs, local DQNs.
struct AgentSet {
  std::vector<SacModel> sac;
  std::vector<Mlp<double>> local_actors;
  std::vector<DqnModel> dqn;

  static AgentSet create(const WorldConfig& config, std::uint64_t seed);
};

class Trainer {
 public:
  Trainer(WorldConfig config, SchemeOptions scheme, Index total_episodes, std::uint64_t seed,
          ValidationOptions options = {});

  bool finished() const { return episode_ >= total_episodes_; }
  Index episode() const { return episode_; }
  Index total_episodes() const { return total_episodes_; }
  std::uint64_t seed() const { return seed_; }
  const WorldConfig& config() const { return config_; }
  const SchemeOptions& scheme() const { return scheme_; }
  const ValidationOptions& validation() const { return options_; }
  const std::vector<EpisodeMetrics>& metrics() const { return metrics_; }
  const AgentSet& agents() const { return agents_; }
  AgentSet& agents() { return agents_; }
  Rng& rng() { return rng_; }

  // Trains one episode and appends its metrics row.
  const EpisodeMetrics& run_episode();
  void run_to_end();

  // Full mutable state for pause/resume.
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  WorldConfig config_;
  SchemeOptions scheme_;
  Index total_episodes_;
  std::uint64_t seed_;
  ValidationOptions options_;
  AgentSet agents_;
  ReplayBuffer<TierOneExperience> tier1_;
  std::vector<ReplayBuffer<TierTwoExperience>> tier2_;
  Rng rng_;
  Index episode_ = 0;
  std::vector<EpisodeMetrics> metrics_;
};

struct TrainRun {
  WorldConfig config;
  SchemeOptions scheme;
  Index episodes = 0;
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> metrics;
  AgentSet agents;
};

TrainRun run_training(const WorldConfig& config, Index episodes, std::uint64_t seed, SchemeOptions scheme = {},
                      ValidationOptions options = {});

struct EvaluationResult {
  std::vector<EpisodeReport> reports;
  std::vector<SlotRecord> trajectory;  // filled when requested

  double mean_c_total() const;
};

// Test stage: deterministic actor means, greedy DQN scores, no learning.
EvaluationResult run_evaluation(const WorldConfig& config, const AgentSet& agents, Index episodes,
                                std::uint64_t seed, SchemeOptions scheme = {}, bool record_trajectory = false,
                                ValidationOptions options = {});

// Seed of evaluation/training episode `episode` of a run seeded with `seed`.
std::uint64_t episode_seed(std::uint64_t seed, Index episode, bool evaluation);

struct TbarPoint {
  Index tbar = 0;
  double c_total = 0.0;
};

// Evenly spaced candidates in 2..T; count >= T-1 gives every integer.
std::vector<Index> tbar_grid(Index horizon, Index count);

// One-dimensional search over T-bar: each candidate is trained for
// `train_episodes` and scored by the mean evaluation C_total.
std::vector<TbarPoint> phase_division_sweep(const WorldConfig& config, const std::vector<Index>& candidates,
                                            Index train_episodes, Index eval_episodes, std::uint64_t seed);
TbarPoint best_tbar(const std::vector<TbarPoint>& curve);

struct ScalabilityCell {
  Index uavs = 0;
  Index wns = 0;
  double c_min = 0.0;
  double c_total = 0.0;
};

// W = 2U for every row; each cell is a full training plus evaluation.
std::vector<ScalabilityCell> scalability_sweep(const WorldConfig& base, const std::vector<Index>& uav_counts,
                                               const std::vector<double>& c_min_values, Index train_episodes,
                                               Index eval_episodes, std::uint64_t seed);

}  // namespace uavwpcn
