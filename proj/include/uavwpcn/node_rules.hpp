#pragma once

#include <algorithm>
#include <vector>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

// Double-threshold hysteresis on battery level.
inline int update_node_type(double battery, int prev_flag, double b_e, double b_i) {
  if (battery >= b_i) return 1;
  if (battery <= b_e) return 0;
  return prev_flag;
}

// Energy an E-node is expected to gather per slot to flip type once over the horizon.
inline double expected_slot_harvest(const WorldConfig& c) { return (c.b_i - c.b_e) / static_cast<double>(c.horizon); }

inline int update_hoe(int prev_hoe, double prev_harvest, int flag, const WorldConfig& c) {
  if (flag == 1) return 0;
  if (prev_harvest < expected_slot_harvest(c)) return prev_hoe + 1;
  return std::max(prev_hoe - 1, 1);
}

// Refreshes one UAV's view of the network. I-nodes always reach every UAV;
// E-nodes only reach UAVs within d_cov horizontally, otherwise the view is stale.
void observe_status(UavState& uav, const std::vector<WnState>& wns, double d_cov);

}  // namespace uavwpcn
