#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

struct SlotAction {
  double heading = 0.0;  // rad, [0, 2*pi)
  double speed = 0.0;    // m/s, [0, V_U^max]
  int wet = 0;
};

struct RewardBreakdown {
  double b_wet = 0.0;
  double b_wdc = 0.0;
  double b_es = 0.0;
  double b_sd = 0.0;
  double total = 0.0;
};

struct WorldState {
  Index slot = 1;  // 1-based index of the slot about to be played
  std::vector<UavState> uavs;
  std::vector<WnState> wns;

  // Per-slot scratch, valid between apply_slot_actions and end_slot.
  Eigen::MatrixXd gains;       // U x W
  Eigen::VectorXd slot_data;   // C_w[t] so far
  Eigen::VectorXi wdc_counts;  // per UAV
  Eigen::VectorXi tx_counts;   // per WN
  Index subslot = 0;

  double c_total = 0.0;
  Index d_min_violation_slots = 0;
  double min_pair_distance = 0.0;

  bool done(Index horizon) const { return slot > horizon; }
};

// WN layout drawn from config.seed; stays fixed across episodes of a run.
std::vector<Vec2> wn_layout(const WorldConfig& config);

// UAV starts and WN batteries are drawn from episode_seed.
WorldState reset(const WorldConfig& config, std::uint64_t episode_seed, ValidationOptions options = {});

// Moves every UAV (clamped to the area), latches WET flags, and prepares the
// slot's gain matrix. Depleted UAVs hover with WET off.
void apply_slot_actions(WorldState& state, const std::vector<SlotAction>& actions, const WorldConfig& config);

// Sequential association protocol: UAV u walks its candidates by descending
// score (ties to the lower WN index) and takes the first I-node not already
// claimed by a lower-index UAV. `active[u] == false` keeps UAV u silent.
SubSlotSchedule resolve_associations(const Eigen::Ref<const Eigen::MatrixXd>& scores, const std::vector<int>& flags,
                                     const std::vector<bool>& active);
SubSlotSchedule resolve_wdc_associations(const WorldState& state, const Eigen::Ref<const Eigen::MatrixXd>& scores);

struct SubSlotOutcome {
  Eigen::VectorXd data;    // bits/Hz received by each UAV
  Eigen::VectorXd reward;  // tier-2 reward per UAV
};

SubSlotOutcome step_subslot(WorldState& state, const SubSlotSchedule& schedule, const WorldConfig& config);

struct SlotSummary {
  Eigen::VectorXd harvested;    // per WN, W*s
  Eigen::VectorXd uav_energy;   // per UAV, W*s
  Eigen::VectorXd slot_data;    // per WN
  bool d_min_violated = false;
};

// Closes the slot: battery laws, accumulators, type and HoE updates, then
// every UAV observes the new status.
SlotSummary end_slot(WorldState& state, const WorldConfig& config);

bool any_pair_closer_than(const std::vector<UavState>& uavs, double d_min);

// `before` is the state at the start of slot t, `after` the state once slot t closed.
RewardBreakdown compute_tier1_reward(const WorldState& before, const WorldState& after, Index uav,
                                     const WorldConfig& config, bool hoe_weighting = true);

Eigen::VectorXd make_tier1_observation(const WorldState& state, Index uav, const WorldConfig& config);
Eigen::VectorXd make_tier2_observation(const WorldState& state, Index uav, Index subslot, const WorldConfig& config);
Eigen::VectorXd make_joint_state(const WorldState& state, const WorldConfig& config);

struct EpisodeReport {
  std::vector<double> wn_data;
  std::vector<bool> wn_meets_c_min;
  std::vector<double> uav_battery_end;
  std::vector<bool> uav_meets_b_min;
  Index d_min_violation_slots = 0;
  double min_pair_distance = 0.0;
  double c_total = 0.0;

  bool all_pass() const;
};

EpisodeReport episode_report(const WorldState& state, const WorldConfig& config);

}  // namespace uavwpcn
