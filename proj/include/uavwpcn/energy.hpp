#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

// Piecewise RF->DC law: 0 below sensitivity, fit(p) on the active interval,
// fit(P_sat) from saturation on. `fit` is any callable Scalar -> Scalar.
template <typename Scalar, typename Fit>
Scalar harvested_dc_power(Scalar p_rf, Scalar p_sen, Scalar p_sat, Fit&& fit) {
  if (p_rf < p_sen) return Scalar(0);
  if (p_rf >= p_sat) return fit(p_sat);
  return fit(p_rf);
}

// Logistic rescaled so that it is exactly 0 at P_sen and f_max at P_sat.
template <typename Scalar>
class NormalizedLogistic {
 public:
  NormalizedLogistic(const HarvesterParams& h, Scalar p_sen, Scalar p_sat)
      : f_max_(h.f_max), midpoint_(h.midpoint), steepness_(h.steepness),
        low_(sigmoid(p_sen)), span_(sigmoid(p_sat) - sigmoid(p_sen)) {}

  Scalar operator()(Scalar p) const { return f_max_ * (sigmoid(p) - low_) / span_; }

 private:
  Scalar sigmoid(Scalar p) const {
    using std::exp;
    return Scalar(1) / (Scalar(1) + exp(-steepness_ * (p - midpoint_)));
  }

  Scalar f_max_, midpoint_, steepness_, low_, span_;
};

template <typename Scalar>
Scalar harvested_dc_power(Scalar p_rf, const WorldConfig& c) {
  const NormalizedLogistic<Scalar> fit(c.harvester, Scalar(c.p_sen), Scalar(c.p_sat));
  return harvested_dc_power(p_rf, Scalar(c.p_sen), Scalar(c.p_sat), fit);
}

// Energy one WN harvests in a slot from the superposed RF of every transmitting UAV.
// `gains_to_wn` holds G_w^u for this WN, one entry per UAV.
inline double harvested_energy_slot(const Eigen::Ref<const Eigen::VectorXi>& wet_flags,
                                    const Eigen::Ref<const Eigen::VectorXd>& gains_to_wn, const WorldConfig& c) {
  const double received = c.p_uav_tx * (wet_flags.cast<double>().array() * gains_to_wn.array()).sum();
  return harvested_dc_power(received, c) * c.slot_len;
}

template <typename Scalar>
Scalar propulsion_power(Scalar v, const PropulsionParams& p) {
  using std::pow;
  using std::sqrt;
  const Scalar v2 = v * v;
  const Scalar e0_2 = Scalar(p.mean_induced_velocity * p.mean_induced_velocity);
  const Scalar blade = Scalar(p.blade_profile_w) * (Scalar(1) + Scalar(3) * v2 / Scalar(p.tip_speed * p.tip_speed));
  const Scalar parasite = Scalar(0.5 * p.fuselage_drag_ratio * p.air_density * p.rotor_solidity *
                                 p.rotor_disc_area) * v2 * v;
  const Scalar induced =
      Scalar(p.induced_w) * sqrt(sqrt(Scalar(1) + v2 * v2 / (Scalar(4) * e0_2 * e0_2)) - v2 / (Scalar(2) * e0_2));
  return blade + parasite + induced;
}

inline double uav_slot_energy(Index wdc_subslots, int wet_flag, double velocity, const WorldConfig& c) {
  if (wdc_subslots < 0 || wdc_subslots > c.subslots) throw std::invalid_argument("WDC sub-slot count out of range");
  return static_cast<double>(wdc_subslots) * c.p_wdc * c.subslot_len +
         propulsion_power(velocity, c.propulsion) * c.slot_len + wet_flag * c.p_uav_tx * c.slot_len;
}

// E-nodes store harvest up to capacity; I-nodes spend P_W per active sub-slot.
inline double update_wn_battery(const WnState& wn, double harvested, Index tx_subslots, const WorldConfig& c) {
  if (wn.is_inode()) {
    return std::max(wn.battery - static_cast<double>(tx_subslots) * c.p_wn_tx * c.subslot_len, 0.0);
  }
  if (tx_subslots > 0) throw std::logic_error("E-node scheduled for data transmission");
  return std::min(c.b_wn_max, wn.battery + harvested);
}

inline double update_uav_battery(double battery, double slot_energy) { return std::max(battery - slot_energy, 0.0); }

}  // namespace uavwpcn
