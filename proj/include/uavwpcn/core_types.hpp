#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace uavwpcn {

using Index = Eigen::Index;
using Vec2 = Eigen::Vector2d;

// Rotary-wing propulsion constants (blade profile, induced, parasite terms).
struct PropulsionParams {
  double blade_profile_w = 79.86;   // P_a
  double induced_w = 88.63;         // P_b
  double tip_speed = 120.0;         // V_tip, m/s
  double mean_induced_velocity = 4.03;  // e_0, m/s
  double fuselage_drag_ratio = 0.6;     // f_0
  double air_density = 1.225;           // kg/m^3
  double rotor_solidity = 0.05;         // e_1
  double rotor_disc_area = 0.503;       // m^2
};

// Normalized-logistic fit of the active region of the RF->DC curve.
struct HarvesterParams {
  double f_max = 4.5e-3;    // W, DC output at saturation
  double midpoint = 1.5e-3;  // W
  double steepness = 2500.0;  // 1/W
};

struct RewardWeights {
  double wet = 20.0;
  double wdc = 0.01;
  double energy_saving = 1e-6;
  double safe_distance = 1.0;
};

struct LearningConfig {
  Index hidden_width = 256;
  Index hidden_layers = 3;  // 5 fully connected layers including input and output
  Index batch_size = 128;
  Index replay_capacity = 131072;

  // tier 1
  double gamma = 0.99;
  double tau = 0.999;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 2e-4;
  double initial_alpha = 0.2;
  bool negate_entropy_target = false;
  bool entropy_target_action_dim = false;  // |target| = action width instead of |o|
  Index actor_sync_interval = 1;  // slots between actor snapshots pushed to the UAVs

  // tier 2
  double dqn_gamma = 0.99;
  double dqn_lr_start = 0.01;
  double dqn_lr_end = 1e-6;
  double epsilon_start = 0.9;
  double epsilon_end = 0.02;
  double epsilon_decay_fraction = 0.8;
  Index target_sync_period = 200;
  bool dqn_train_per_subslot = true;

  // episodes per candidate split point in the phase-division search
  Index phase_division_episodes = 100;
};

struct WorldConfig {
  double area_width_m = 400.0;
  double area_height_m = 400.0;
  Index num_uavs = 4;
  Index num_wns = 10;
  double altitude = 5.0;
  Index horizon = 300;
  Index subslots = 4;
  double slot_len = 1.0;
  double subslot_len = 0.25;

  double p_uav_tx = 1.0;     // W
  double p_wn_tx = 1e-4;     // W
  double p_wdc = 1e-2;       // W
  double noise = 1e-12;      // W (-90 dBm)
  double g0 = 0.1;
  double alpha_los = 3.0;
  double alpha_nlos = 5.0;
  double los_a = 12.08;
  double los_b = 0.11;
  double p_sen = 1e-4;                   // W (-10 dBm)
  double p_sat = 5.011872336272722e-3;   // W (7 dBm)
  HarvesterParams harvester{};

  double b_e = 2e-3;          // W*s
  double b_i = 4e-3;          // W*s
  double b_wn_max = 6e-3;     // W*s
  double wn_initial_battery_min = 2e-3;
  double wn_initial_battery_max = 4e-3;
  double b_uav_max = 4e5;     // W*s
  double b_uav_min = 3e4;     // W*s

  double d_min = 2.0;
  double d_cov = 20.0;
  double c_min = 100.0;       // bits/Hz
  double v_max = 20.0;        // m/s
  double data_scale = 1000.0; // bits/Hz, normalizes accumulated-data features

  PropulsionParams propulsion{};
  RewardWeights reward{};
  LearningConfig learning{};

  std::uint64_t seed = 1;
};

// Observation widths. Tier 2 carries x, y, C_1..C_W and the sub-slot index.
inline Index tier1_observation_size(const WorldConfig& c) { return 3 * c.num_wns + 3; }
inline Index tier2_observation_size(const WorldConfig& c) { return c.num_wns + 3; }
inline Index joint_state_size(const WorldConfig& c) { return tier1_observation_size(c) * c.num_uavs; }

struct WnState {
  Vec2 pos = Vec2::Zero();
  double battery = 0.0;
  int flag = 0;          // 1: I-node, 0: E-node
  int hoe = 1;
  double acc_data = 0.0;  // true sum of C_w over completed slots
  double last_harvest = 0.0;

  bool is_inode() const { return flag == 1; }
};

struct UavState {
  Vec2 pos = Vec2::Zero();
  double battery = 0.0;
  int wet_flag = 0;
  double velocity = 0.0;
  bool depleted = false;
  Eigen::VectorXd observed_batteries;
  Eigen::VectorXd observed_acc_data;
};

// Sparse D matrix for one sub-slot: assignment[u] is the WN served by UAV u.
struct SubSlotSchedule {
  std::vector<std::optional<Index>> assignment;

  explicit SubSlotSchedule(Index num_uavs = 0) : assignment(static_cast<std::size_t>(num_uavs)) {}
  Index num_uavs() const { return static_cast<Index>(assignment.size()); }
  bool empty() const;
};

// Structural check of the one-to-one association constraint.
bool schedule_is_feasible(const SubSlotSchedule& s, const std::vector<WnState>& wns);

struct ConfigViolation {
  std::string field;
  std::string relation;
};

struct ValidationOptions {
  // The scalability sweep includes a single-UAV row; everything else needs U >= 2.
  bool allow_single_uav = false;
};

std::vector<ConfigViolation> validate_config(const WorldConfig& config, ValidationOptions options = {});

// Throws std::invalid_argument listing every violation.
void require_valid(const WorldConfig& config, ValidationOptions options = {});

template <typename Scalar>
Scalar dbm_to_watts(Scalar dbm) {
  using std::pow;
  return pow(Scalar(10), (dbm - Scalar(30)) / Scalar(10));
}

template <typename Scalar>
Scalar watts_to_dbm(Scalar watts) {
  using std::log10;
  return Scalar(10) * log10(watts) + Scalar(30);
}

// Desk-scale scenario used by the acceptance suite and `--profile desk`.
WorldConfig desk_profile();

}  // namespace uavwpcn
