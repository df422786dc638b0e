#include "uavwpcn/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "uavwpcn/channel.hpp"
#include "uavwpcn/energy.hpp"
#include "uavwpcn/node_rules.hpp"
#include "uavwpcn/rng.hpp"

namespace uavwpcn {
namespace {

constexpr std::uint64_t kLayoutStream = 0x6c61796f7574ULL;

double min_pairwise_distance(const std::vector<UavState>& uavs) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    for (std::size_t j = i + 1; j < uavs.size(); ++j) best = std::min(best, (uavs[i].pos - uavs[j].pos).norm());
  }
  return best;
}

}  // namespace

std::vector<Vec2> wn_layout(const WorldConfig& config) {
  Rng rng(derive_seed(config.seed, kLayoutStream));
  std::vector<Vec2> out(static_cast<std::size_t>(config.num_wns));
  for (auto& p : out) {
    const double x = uniform(rng, 0.0, config.area_width_m);
    const double y = uniform(rng, 0.0, config.area_height_m);
    p = Vec2(x, y);
  }
  return out;
}

WorldState reset(const WorldConfig& config, std::uint64_t episode_seed, ValidationOptions options) {
  require_valid(config, options);
  Rng rng(episode_seed);
  WorldState s;
  s.slot = 1;

  const auto layout = wn_layout(config);
  s.wns.resize(layout.size());
  for (std::size_t w = 0; w < layout.size(); ++w) {
    WnState& wn = s.wns[w];
    wn.pos = layout[w];
    wn.battery = uniform(rng, config.wn_initial_battery_min, config.wn_initial_battery_max);
    // Nodes start as if they had been E-nodes.
    wn.flag = update_node_type(wn.battery, 0, config.b_e, config.b_i);
    wn.hoe = wn.flag == 1 ? 0 : 1;
    wn.acc_data = 0.0;
    wn.last_harvest = 0.0;
  }

  s.uavs.resize(static_cast<std::size_t>(config.num_uavs));
  for (auto& uav : s.uavs) {
    const double x = uniform(rng, 0.0, config.area_width_m);
    const double y = uniform(rng, 0.0, config.area_height_m);
    uav.pos = Vec2(x, y);
    uav.battery = config.b_uav_max;
    uav.wet_flag = 0;
    uav.velocity = 0.0;
    uav.depleted = false;
    // One-time global sync at deployment.
    uav.observed_batteries.resize(config.num_wns);
    uav.observed_acc_data.resize(config.num_wns);
    for (Index w = 0; w < config.num_wns; ++w) {
      uav.observed_batteries(w) = s.wns[static_cast<std::size_t>(w)].battery;
      uav.observed_acc_data(w) = 0.0;
    }
  }

  s.gains = gain_matrix(s.uavs, s.wns, config);
  s.slot_data = Eigen::VectorXd::Zero(config.num_wns);
  s.wdc_counts = Eigen::VectorXi::Zero(config.num_uavs);
  s.tx_counts = Eigen::VectorXi::Zero(config.num_wns);
  s.min_pair_distance = min_pairwise_distance(s.uavs);
  return s;
}

void apply_slot_actions(WorldState& state, const std::vector<SlotAction>& actions, const WorldConfig& config) {
  if (actions.size() != state.uavs.size()) throw std::invalid_argument("one slot action per UAV required");
  for (std::size_t u = 0; u < state.uavs.size(); ++u) {
    UavState& uav = state.uavs[u];
    SlotAction a = actions[u];
    if (uav.depleted) a = SlotAction{};
    const double speed = std::clamp(a.speed, 0.0, config.v_max);
    const Vec2 step = speed * config.slot_len * Vec2(std::cos(a.heading), std::sin(a.heading));
    const Vec2 target = uav.pos + step;
    const Vec2 clamped(std::clamp(target.x(), 0.0, config.area_width_m),
                       std::clamp(target.y(), 0.0, config.area_height_m));
    uav.velocity = (clamped - uav.pos).norm() / config.slot_len;
    uav.pos = clamped;
    uav.wet_flag = a.wet != 0 ? 1 : 0;
  }
  state.gains = gain_matrix(state.uavs, state.wns, config);
  state.slot_data.setZero(config.num_wns);
  state.wdc_counts.setZero(config.num_uavs);
  state.tx_counts.setZero(config.num_wns);
  state.subslot = 0;
}

SubSlotSchedule resolve_associations(const Eigen::Ref<const Eigen::MatrixXd>& scores, const std::vector<int>& flags,
                                     const std::vector<bool>& active) {
  const Index num_uavs = scores.rows();
  const Index num_wns = scores.cols();
  if (static_cast<Index>(flags.size()) != num_wns || static_cast<Index>(active.size()) != num_uavs) {
    throw std::invalid_argument("score matrix does not match the network size");
  }
  SubSlotSchedule schedule(num_uavs);
  std::vector<bool> claimed(static_cast<std::size_t>(num_wns), false);
  std::vector<Index> order(static_cast<std::size_t>(num_wns));
  for (Index u = 0; u < num_uavs; ++u) {
    if (!active[static_cast<std::size_t>(u)]) continue;
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(u, a) > scores(u, b); });
    for (Index w : order) {
      const auto wi = static_cast<std::size_t>(w);
      if (flags[wi] != 1 || claimed[wi]) continue;
      claimed[wi] = true;
      schedule.assignment[static_cast<std::size_t>(u)] = w;
      break;
    }
  }
  return schedule;
}

SubSlotSchedule resolve_wdc_associations(const WorldState& state, const Eigen::Ref<const Eigen::MatrixXd>& scores) {
  std::vector<int> flags;
  flags.reserve(state.wns.size());
  for (const auto& wn : state.wns) flags.push_back(wn.flag);
  std::vector<bool> active;
  active.reserve(state.uavs.size());
  for (const auto& uav : state.uavs) active.push_back(!uav.depleted);
  return resolve_associations(scores, flags, active);
}

SubSlotOutcome step_subslot(WorldState& state, const SubSlotSchedule& schedule, const WorldConfig& config) {
  if (!schedule_is_feasible(schedule, state.wns)) throw std::logic_error("infeasible sub-slot schedule");
  const Index num_uavs = config.num_uavs;
  const Eigen::VectorXd sinr = sinr_vector(schedule, state.gains, config.p_wn_tx, config.noise);

  SubSlotOutcome out{Eigen::VectorXd::Zero(num_uavs), Eigen::VectorXd::Zero(num_uavs)};
  for (Index u = 0; u < num_uavs; ++u) {
    const auto& target = schedule.assignment[static_cast<std::size_t>(u)];
    if (!target) continue;
    const double m = subslot_data_size(sinr(u), config.subslot_len);
    out.data(u) = m;
    state.slot_data(*target) += m;
    state.tx_counts(*target) += 1;
    state.wdc_counts(u) += 1;
  }

  // Gap term uses each UAV's own (possibly stale) view of accumulated data.
  const double expected = static_cast<double>(state.slot - 1) / static_cast<double>(config.horizon) * config.c_min;
  for (Index u = 0; u < num_uavs; ++u) {
    const UavState& uav = state.uavs[static_cast<std::size_t>(u)];
    double gap = 0.0;
    for (Index w = 0; w < config.num_wns; ++w) {
      if (state.wns[static_cast<std::size_t>(w)].is_inode()) gap += uav.observed_acc_data(w) - expected;
    }
    out.reward(u) = out.data(u) + gap;
  }
  ++state.subslot;
  return out;
}

bool any_pair_closer_than(const std::vector<UavState>& uavs, double d_min) {
  return uavs.size() >= 2 && min_pairwise_distance(uavs) < d_min;
}

SlotSummary end_slot(WorldState& state, const WorldConfig& config) {
  const Index num_uavs = config.num_uavs;
  const Index num_wns = config.num_wns;
  SlotSummary summary{Eigen::VectorXd::Zero(num_wns), Eigen::VectorXd::Zero(num_uavs), state.slot_data, false};

  Eigen::VectorXi wet(num_uavs);
  for (Index u = 0; u < num_uavs; ++u) wet(u) = state.uavs[static_cast<std::size_t>(u)].wet_flag;

  for (Index w = 0; w < num_wns; ++w) {
    WnState& wn = state.wns[static_cast<std::size_t>(w)];
    const double harvested = wn.is_inode() ? 0.0 : harvested_energy_slot(wet, state.gains.col(w), config);
    wn.battery = update_wn_battery(wn, harvested, state.tx_counts(w), config);
    wn.last_harvest = harvested;
    wn.acc_data += state.slot_data(w);
    summary.harvested(w) = harvested;
  }
  state.c_total += state.slot_data.sum();

  for (Index u = 0; u < num_uavs; ++u) {
    UavState& uav = state.uavs[static_cast<std::size_t>(u)];
    const double energy = uav_slot_energy(state.wdc_counts(u), uav.wet_flag, uav.velocity, config);
    uav.battery = update_uav_battery(uav.battery, energy);
    if (uav.battery <= 0.0) uav.depleted = true;
    summary.uav_energy(u) = energy;
  }

  summary.d_min_violated = any_pair_closer_than(state.uavs, config.d_min);
  if (summary.d_min_violated) ++state.d_min_violation_slots;
  state.min_pair_distance = std::min(state.min_pair_distance, min_pairwise_distance(state.uavs));

  for (auto& wn : state.wns) {
    wn.flag = update_node_type(wn.battery, wn.flag, config.b_e, config.b_i);
    wn.hoe = update_hoe(wn.hoe, wn.last_harvest, wn.flag, config);
  }
  ++state.slot;
  for (auto& uav : state.uavs) observe_status(uav, state.wns, config.d_cov);
  return summary;
}

RewardBreakdown compute_tier1_reward(const WorldState& before, const WorldState& after, Index uav,
                                     const WorldConfig& config, bool hoe_weighting) {
  const auto u = static_cast<std::size_t>(uav);
  const UavState& prev_view = before.uavs[u];
  const UavState& next_view = after.uavs[u];
  RewardBreakdown r;

  // WET: share of each E-node's observed gain attributable to this UAV, times
  // the HoE-weighted observed battery increase. 0/0 ratios count as 0.
  double share = 0.0;
  double weighted_gain = 0.0;
  for (Index w = 0; w < config.num_wns; ++w) {
    const WnState& wn = before.wns[static_cast<std::size_t>(w)];
    if (wn.is_inode()) continue;
    const double delta = next_view.observed_batteries(w) - prev_view.observed_batteries(w);
    if (delta != 0.0) {
      const double own = harvested_dc_power(config.p_uav_tx * next_view.wet_flag * after.gains(uav, w), config) *
                         config.slot_len;
      share += own / delta;
    }
    weighted_gain += (hoe_weighting ? static_cast<double>(wn.hoe) : 1.0) * delta;
  }
  r.b_wet = share * weighted_gain;

  const double t = static_cast<double>(before.slot);
  for (Index w = 0; w < config.num_wns; ++w) {
    const auto wi = static_cast<std::size_t>(w);
    if (!before.wns[wi].is_inode()) continue;
    r.b_wdc += after.wns[wi].acc_data - t / static_cast<double>(config.horizon) * config.c_min;
  }

  r.b_es = next_view.battery - config.b_uav_min;
  r.b_sd = any_pair_closer_than(after.uavs, config.d_min) ? -1.0 : 0.0;
  r.total = config.reward.wet * r.b_wet + config.reward.wdc * r.b_wdc + config.reward.energy_saving * r.b_es +
            config.reward.safe_distance * r.b_sd;
  return r;
}

Eigen::VectorXd make_tier1_observation(const WorldState& state, Index uav, const WorldConfig& config) {
  const Index n = config.num_wns;
  const UavState& view = state.uavs[static_cast<std::size_t>(uav)];
  Eigen::VectorXd o(tier1_observation_size(config));
  for (Index w = 0; w < n; ++w) o(w) = state.wns[static_cast<std::size_t>(w)].flag;
  o.segment(n, n) = view.observed_batteries / config.b_wn_max;
  // Data features are scaled, not clipped.
  o.segment(2 * n, n) = view.observed_acc_data / config.data_scale;
  o(3 * n) = view.pos.x() / config.area_width_m;
  o(3 * n + 1) = view.pos.y() / config.area_height_m;
  o(3 * n + 2) = view.battery / config.b_uav_max;
  return o;
}

Eigen::VectorXd make_tier2_observation(const WorldState& state, Index uav, Index subslot, const WorldConfig& config) {
  if (subslot < 1 || subslot > config.subslots) throw std::out_of_range("sub-slot index must be in 1..K");
  const Index n = config.num_wns;
  const UavState& view = state.uavs[static_cast<std::size_t>(uav)];
  Eigen::VectorXd o(tier2_observation_size(config));
  o(0) = view.pos.x() / config.area_width_m;
  o(1) = view.pos.y() / config.area_height_m;
  o.segment(2, n) = view.observed_acc_data / config.data_scale;
  o(n + 2) = static_cast<double>(subslot) / static_cast<double>(config.subslots);
  return o;
}

Eigen::VectorXd make_joint_state(const WorldState& state, const WorldConfig& config) {
  const Index width = tier1_observation_size(config);
  Eigen::VectorXd s(joint_state_size(config));
  for (Index u = 0; u < config.num_uavs; ++u) s.segment(u * width, width) = make_tier1_observation(state, u, config);
  return s;
}

bool EpisodeReport::all_pass() const {
  return d_min_violation_slots == 0 && std::all_of(wn_meets_c_min.begin(), wn_meets_c_min.end(), [](bool b) { return b; }) &&
         std::all_of(uav_meets_b_min.begin(), uav_meets_b_min.end(), [](bool b) { return b; });
}

EpisodeReport episode_report(const WorldState& state, const WorldConfig& config) {
  EpisodeReport r;
  for (const auto& wn : state.wns) {
    r.wn_data.push_back(wn.acc_data);
    r.wn_meets_c_min.push_back(wn.acc_data >= config.c_min);
  }
  for (const auto& uav : state.uavs) {
    r.uav_battery_end.push_back(uav.battery);
    r.uav_meets_b_min.push_back(uav.battery >= config.b_uav_min);
  }
  r.d_min_violation_slots = state.d_min_violation_slots;
  r.min_pair_distance = state.min_pair_distance;
  r.c_total = state.c_total;
  return r;
}

}  // namespace uavwpcn
