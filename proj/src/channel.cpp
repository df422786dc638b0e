#include "uavwpcn/channel.hpp"

namespace uavwpcn {

Eigen::MatrixXd gain_matrix(const std::vector<UavState>& uavs, const std::vector<WnState>& wns,
                            const WorldConfig& c) {
  Eigen::MatrixXd gains(static_cast<Index>(uavs.size()), static_cast<Index>(wns.size()));
  for (std::size_t u = 0; u < uavs.size(); ++u) {
    for (std::size_t w = 0; w < wns.size(); ++w) {
      gains(static_cast<Index>(u), static_cast<Index>(w)) =
          channel_gain(link_geometry<double>(uavs[u].pos, wns[w].pos, c.altitude), c);
    }
  }
  return gains;
}

Eigen::VectorXd sinr_vector(const SubSlotSchedule& schedule, const Eigen::Ref<const Eigen::MatrixXd>& gains,
                            double p_wn_tx, double noise) {
  const Index num_uavs = schedule.num_uavs();
  Eigen::VectorXd sinr = Eigen::VectorXd::Zero(num_uavs);
  for (Index u = 0; u < num_uavs; ++u) {
    const auto& target = schedule.assignment[static_cast<std::size_t>(u)];
    if (!target) continue;
    double interference = 0.0;
    for (const auto& other : schedule.assignment) {
      if (other && *other != *target) interference += p_wn_tx * gains(u, *other);
    }
    sinr(u) = p_wn_tx * gains(u, *target) / (interference + noise);
  }
  return sinr;
}

}  // namespace uavwpcn
