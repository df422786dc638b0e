#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

template <typename Scalar>
struct LinkGeometry {
  Scalar distance;             // 3-D, m
  Scalar horizontal_distance;  // m
  Scalar elevation_deg;        // (0, 90]
};

template <typename Scalar>
LinkGeometry<Scalar> link_geometry(const Eigen::Matrix<Scalar, 2, 1>& uav_pos,
                                   const Eigen::Matrix<Scalar, 2, 1>& wn_pos, Scalar altitude) {
  using std::asin;
  using std::sqrt;
  const Scalar horizontal = (uav_pos - wn_pos).norm();
  const Scalar d = sqrt(horizontal * horizontal + altitude * altitude);
  const Scalar beta = asin(altitude / d) * Scalar(180) / std::numbers::pi_v<Scalar>;
  return {d, horizontal, beta};
}

// Logistic LoS model with elevation in degrees.
template <typename Scalar>
Scalar los_probability(Scalar elevation_deg, Scalar a, Scalar b) {
  using std::exp;
  return Scalar(1) / (Scalar(1) + a * exp(-b * (elevation_deg - a)));
}

// Average A2G gain: LoS/NLoS mixture of two power-law path losses.
template <typename Scalar>
Scalar channel_gain(const LinkGeometry<Scalar>& g, const WorldConfig& c) {
  using std::pow;
  const Scalar p_los = los_probability<Scalar>(g.elevation_deg, Scalar(c.los_a), Scalar(c.los_b));
  return p_los * Scalar(c.g0) * pow(g.distance, -Scalar(c.alpha_los)) +
         (Scalar(1) - p_los) * Scalar(c.g0) * pow(g.distance, -Scalar(c.alpha_nlos));
}

// U x W matrix of gains between every UAV and every WN.
Eigen::MatrixXd gain_matrix(const std::vector<UavState>& uavs, const std::vector<WnState>& wns,
                            const WorldConfig& c);

// SINR of every scheduled pair; entry u is the SINR at UAV u (0 when silent).
// Interference at UAV u sums every other scheduled I-node's signal at u.
Eigen::VectorXd sinr_vector(const SubSlotSchedule& schedule, const Eigen::Ref<const Eigen::MatrixXd>& gains,
                            double p_wn_tx, double noise);

template <typename Scalar>
Scalar subslot_data_size(Scalar sinr, Scalar subslot_len) {
  using std::log2;
  return log2(Scalar(1) + sinr) * subslot_len;
}

}  // namespace uavwpcn
