#include "uavwpcn/core_types.hpp"

#include <sstream>
#include <stdexcept>

namespace uavwpcn {

bool SubSlotSchedule::empty() const {
  for (const auto& a : assignment) {
    if (a) return false;
  }
  return true;
}

bool schedule_is_feasible(const SubSlotSchedule& s, const std::vector<WnState>& wns) {
  std::vector<int> served(wns.size(), 0);
  for (const auto& a : s.assignment) {
    if (!a) continue;
    if (*a < 0 || *a >= static_cast<Index>(wns.size())) return false;
    const auto w = static_cast<std::size_t>(*a);
    if (!wns[w].is_inode()) return false;
    if (++served[w] > 1) return false;
  }
  return true;
}

std::vector<ConfigViolation> validate_config(const WorldConfig& c, ValidationOptions options) {
  std::vector<ConfigViolation> out;
  auto check = [&out](bool ok, const char* field, const char* relation) {
    if (!ok) out.push_back({field, relation});
  };

  check(c.area_width_m > 0 && c.area_height_m > 0, "area_width_m/area_height_m", "area dimensions > 0");
  check(c.altitude > 0, "altitude", "h > 0");
  check(c.horizon >= 1, "horizon", "T >= 1");
  check(c.subslots >= 1, "subslots", "K >= 1");
  check(c.p_sen > 0 && c.p_sen < c.p_sat, "p_sen/p_sat", "0 < P_sen < P_sat");
  check(c.p_wn_tx * c.slot_len < c.b_e, "b_e", "P_W*slot_len < B_E");
  check(c.b_e < c.b_i, "b_e/b_i", "B_E < B_I");
  check(c.b_i <= c.b_wn_max, "b_i/b_wn_max", "B_I <= B_W^max");
  check(std::abs(c.slot_len - static_cast<double>(c.subslots) * c.subslot_len) <= 1e-9 * std::abs(c.slot_len),
        "slot_len/subslots/subslot_len", "slot_len = K*subslot_len");
  check(c.alpha_los > 0 && c.alpha_los < c.alpha_nlos, "alpha_los/alpha_nlos", "0 < alpha_L < alpha_N");
  check(c.num_uavs >= (options.allow_single_uav ? 1 : 2), "num_uavs", "U >= 2");
  check(c.num_wns > c.num_uavs, "num_wns", "W > U");
  check(c.p_uav_tx > 0 && c.p_wn_tx > 0 && c.p_wdc >= 0, "p_uav_tx/p_wn_tx/p_wdc", "transmit powers > 0");
  check(c.noise > 0, "noise", "sigma^2 > 0");
  check(c.g0 > 0, "g0", "G_0 > 0");
  check(c.b_uav_min >= 0 && c.b_uav_min <= c.b_uav_max, "b_uav_min/b_uav_max", "0 <= B_U^min <= B_U^max");
  check(c.wn_initial_battery_min >= 0 && c.wn_initial_battery_min <= c.wn_initial_battery_max &&
            c.wn_initial_battery_max <= c.b_wn_max,
        "wn_initial_battery_min/max", "0 <= initial battery range <= B_W^max");
  check(c.d_cov > 0, "d_cov", "d_cov > 0");
  check(c.d_min >= 0, "d_min", "d_min >= 0");
  check(c.v_max > 0, "v_max", "V_U^max > 0");
  check(c.c_min >= 0, "c_min", "C_min >= 0");
  check(c.data_scale > 0, "data_scale", "data_scale > 0");
  check(c.harvester.f_max > 0 && c.harvester.steepness > 0, "harvester", "f_max > 0 and steepness > 0");

  const auto& l = c.learning;
  check(l.hidden_width >= 1 && l.hidden_layers >= 1, "learning.hidden_width/hidden_layers", "network sizes >= 1");
  check(l.batch_size >= 1 && l.replay_capacity >= l.batch_size, "learning.batch_size/replay_capacity",
        "1 <= batch_size <= replay_capacity");
  check(l.tau >= 0 && l.tau <= 1, "learning.tau", "0 <= tau <= 1");
  check(l.gamma >= 0 && l.gamma <= 1 && l.dqn_gamma >= 0 && l.dqn_gamma <= 1, "learning.gamma/dqn_gamma",
        "discounts in [0, 1]");
  check(l.initial_alpha > 0, "learning.initial_alpha", "alpha > 0");
  check(l.epsilon_end >= 0 && l.epsilon_end <= l.epsilon_start && l.epsilon_start <= 1,
        "learning.epsilon_start/epsilon_end", "0 <= eps_end <= eps_start <= 1");
  check(l.dqn_lr_end > 0 && l.dqn_lr_end <= l.dqn_lr_start, "learning.dqn_lr_start/dqn_lr_end",
        "0 < lr_end <= lr_start");
  check(l.target_sync_period >= 1, "learning.target_sync_period", "sync period >= 1");
  check(l.actor_sync_interval >= 1, "learning.actor_sync_interval", "actor sync interval >= 1");
  return out;
}

void require_valid(const WorldConfig& config, ValidationOptions options) {
  const auto violations = validate_config(config, options);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid configuration:";
  for (const auto& v : violations) msg << "\n  " << v.field << ": violates " << v.relation;
  throw std::invalid_argument(msg.str());
}

WorldConfig desk_profile() {
  WorldConfig c;
  c.area_width_m = 100.0;
  c.area_height_m = 100.0;
  c.num_uavs = 2;
  c.num_wns = 4;
  c.horizon = 300;
  c.learning.hidden_width = 32;
  c.learning.batch_size = 64;
  c.learning.negate_entropy_target = true;
  c.learning.entropy_target_action_dim = true;
  c.learning.dqn_train_per_subslot = false;
  c.learning.phase_division_episodes = 40;
  return c;
}

}  // namespace uavwpcn
