#include "uavwpcn/node_rules.hpp"

#include <stdexcept>

namespace uavwpcn {

void observe_status(UavState& uav, const std::vector<WnState>& wns, double d_cov) {
  const auto n = static_cast<Index>(wns.size());
  if (uav.observed_batteries.size() != n || uav.observed_acc_data.size() != n) {
    throw std::invalid_argument("observed arrays must have one entry per WN");
  }
  for (Index w = 0; w < n; ++w) {
    const WnState& wn = wns[static_cast<std::size_t>(w)];
    if (wn.is_inode() || (uav.pos - wn.pos).norm() <= d_cov) {
      uav.observed_batteries(w) = wn.battery;
      uav.observed_acc_data(w) = wn.acc_data;
    }
  }
}

}  // namespace uavwpcn
