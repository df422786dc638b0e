#include "uavwpcn/config_io.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace uavwpcn {
namespace {

using nlohmann::json;

template <typename Visitor>
void visit(PropulsionParams& p, Visitor&& f) {
  f("blade_profile_w", p.blade_profile_w);
  f("induced_w", p.induced_w);
  f("tip_speed", p.tip_speed);
  f("mean_induced_velocity", p.mean_induced_velocity);
  f("fuselage_drag_ratio", p.fuselage_drag_ratio);
  f("air_density", p.air_density);
  f("rotor_solidity", p.rotor_solidity);
  f("rotor_disc_area", p.rotor_disc_area);
}

template <typename Visitor>
void visit(HarvesterParams& h, Visitor&& f) {
  f("f_max", h.f_max);
  f("midpoint", h.midpoint);
  f("steepness", h.steepness);
}

template <typename Visitor>
void visit(RewardWeights& r, Visitor&& f) {
  f("wet", r.wet);
  f("wdc", r.wdc);
  f("energy_saving", r.energy_saving);
  f("safe_distance", r.safe_distance);
}

template <typename Visitor>
void visit(LearningConfig& l, Visitor&& f) {
  f("hidden_width", l.hidden_width);
  f("hidden_layers", l.hidden_layers);
  f("batch_size", l.batch_size);
  f("replay_capacity", l.replay_capacity);
  f("gamma", l.gamma);
  f("tau", l.tau);
  f("lr_actor", l.lr_actor);
  f("lr_critic", l.lr_critic);
  f("lr_alpha", l.lr_alpha);
  f("initial_alpha", l.initial_alpha);
  f("negate_entropy_target", l.negate_entropy_target);
  f("entropy_target_action_dim", l.entropy_target_action_dim);
  f("actor_sync_interval", l.actor_sync_interval);
  f("dqn_gamma", l.dqn_gamma);
  f("dqn_lr_start", l.dqn_lr_start);
  f("dqn_lr_end", l.dqn_lr_end);
  f("epsilon_start", l.epsilon_start);
  f("epsilon_end", l.epsilon_end);
  f("epsilon_decay_fraction", l.epsilon_decay_fraction);
  f("target_sync_period", l.target_sync_period);
  f("dqn_train_per_subslot", l.dqn_train_per_subslot);
  f("phase_division_episodes", l.phase_division_episodes);
}

template <typename Visitor>
void visit_scalars(WorldConfig& c, Visitor&& f) {
  f("area_width_m", c.area_width_m);
  f("area_height_m", c.area_height_m);
  f("num_uavs", c.num_uavs);
  f("num_wns", c.num_wns);
  f("altitude", c.altitude);
  f("horizon", c.horizon);
  f("subslots", c.subslots);
  f("slot_len", c.slot_len);
  f("subslot_len", c.subslot_len);
  f("p_uav_tx", c.p_uav_tx);
  f("p_wn_tx", c.p_wn_tx);
  f("p_wdc", c.p_wdc);
  f("noise", c.noise);
  f("g0", c.g0);
  f("alpha_los", c.alpha_los);
  f("alpha_nlos", c.alpha_nlos);
  f("los_a", c.los_a);
  f("los_b", c.los_b);
  f("p_sen", c.p_sen);
  f("p_sat", c.p_sat);
  f("b_e", c.b_e);
  f("b_i", c.b_i);
  f("b_wn_max", c.b_wn_max);
  f("wn_initial_battery_min", c.wn_initial_battery_min);
  f("wn_initial_battery_max", c.wn_initial_battery_max);
  f("b_uav_max", c.b_uav_max);
  f("b_uav_min", c.b_uav_min);
  f("d_min", c.d_min);
  f("d_cov", c.d_cov);
  f("c_min", c.c_min);
  f("v_max", c.v_max);
  f("data_scale", c.data_scale);
  f("seed", c.seed);
}

template <typename Group>
json group_to_json(const Group& g) {
  json out = json::object();
  visit(const_cast<Group&>(g), [&out](const char* name, auto& v) { out[name] = v; });
  return out;
}

template <typename T>
void read_value(const json& j, const std::string& path, T& target) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw std::invalid_argument("expected boolean");
      target = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw std::invalid_argument("expected integer");
      target = j.get<T>();
    } else {
      if (!j.is_number()) throw std::invalid_argument("expected number");
      target = j.get<T>();
    }
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key '" + path + "': " + e.what());
  }
}

template <typename Group>
void group_from_json(const json& j, const std::string& prefix, Group& g) {
  if (!j.is_object()) throw std::invalid_argument("config key '" + prefix + "' must be an object");
  std::set<std::string> known;
  visit(g, [&](const char* name, auto& v) {
    known.insert(name);
    if (auto it = j.find(name); it != j.end()) read_value(*it, prefix + "." + name, v);
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + prefix + "." + key + "'");
  }
}

}  // namespace

json config_to_json(const WorldConfig& config) {
  json out = json::object();
  visit_scalars(const_cast<WorldConfig&>(config), [&out](const char* name, auto& v) { out[name] = v; });
  out["harvester"] = group_to_json(config.harvester);
  out["propulsion"] = group_to_json(config.propulsion);
  out["reward"] = group_to_json(config.reward);
  out["learning"] = group_to_json(config.learning);
  return out;
}

WorldConfig config_from_json(const json& doc, WorldConfig base) {
  if (!doc.is_object()) throw std::invalid_argument("config document must be a JSON object");
  std::set<std::string> known{"harvester", "propulsion", "reward", "learning"};
  visit_scalars(base, [&](const char* name, auto& v) {
    known.insert(name);
    if (auto it = doc.find(name); it != doc.end()) read_value(*it, name, v);
  });
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  if (auto it = doc.find("harvester"); it != doc.end()) group_from_json(*it, "harvester", base.harvester);
  if (auto it = doc.find("propulsion"); it != doc.end()) group_from_json(*it, "propulsion", base.propulsion);
  if (auto it = doc.find("reward"); it != doc.end()) group_from_json(*it, "reward", base.reward);
  if (auto it = doc.find("learning"); it != doc.end()) group_from_json(*it, "learning", base.learning);
  return base;
}

WorldConfig load_config(const std::filesystem::path& path, WorldConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc, base);
}

void save_config(const WorldConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace uavwpcn
