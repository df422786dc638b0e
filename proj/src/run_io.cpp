#include "uavwpcn/run_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uavwpcn {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Rows of a CSV file with the given header; throws on a schema mismatch.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::runtime_error(path.string() + ": unexpected header");
  const std::size_t width = split(header, ',').size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != width) throw std::runtime_error(path.string() + ": ragged row");
    rows.push_back(std::move(cells));
  }
  return rows;
}

const char* kEvalHeader =
    "episode,c_total,wns_below_c_min,uavs_below_b_min,min_uav_battery,d_min_violation_slots,min_pair_distance,all_pass";
const char* kEvalWnHeader = "episode,wn,data,meets_c_min";
const char* kTbarHeader = "tbar,c_total";

}  // namespace

std::string metrics_csv_header() {
  return "episode,c_total,mean_reward,wns_below_c_min,uavs_below_b_min,d_min_violation_slots,min_pair_distance,"
         "wet_slots,v_loss,q_loss,policy_loss,alpha_loss,alpha,dqn_loss,epsilon,dqn_lr";
}

void write_metrics_csv(const fs::path& path, const std::vector<EpisodeMetrics>& rows) {
  auto out = open_out(path);
  out << metrics_csv_header() << '\n';
  for (const auto& m : rows) {
    out << m.episode << ',' << num(m.c_total) << ',' << num(m.mean_reward) << ',' << m.wns_below_c_min << ','
        << m.uavs_below_b_min << ',' << m.d_min_violation_slots << ',' << num(m.min_pair_distance) << ','
        << m.wet_slots << ',' << num(m.v_loss) << ',' << num(m.q_loss) << ',' << num(m.policy_loss) << ','
        << num(m.alpha_loss) << ',' << num(m.alpha) << ',' << num(m.dqn_loss) << ',' << num(m.epsilon) << ','
        << num(m.dqn_lr) << '\n';
  }
}

std::vector<EpisodeMetrics> read_metrics_csv(const fs::path& path) {
  std::vector<EpisodeMetrics> out;
  for (const auto& c : read_csv(path, metrics_csv_header())) {
    EpisodeMetrics m;
    m.episode = std::stoll(c[0]);
    m.c_total = std::stod(c[1]);
    m.mean_reward = std::stod(c[2]);
    m.wns_below_c_min = std::stoll(c[3]);
    m.uavs_below_b_min = std::stoll(c[4]);
    m.d_min_violation_slots = std::stoll(c[5]);
    m.min_pair_distance = std::stod(c[6]);
    m.wet_slots = std::stoll(c[7]);
    m.v_loss = std::stod(c[8]);
    m.q_loss = std::stod(c[9]);
    m.policy_loss = std::stod(c[10]);
    m.alpha_loss = std::stod(c[11]);
    m.alpha = std::stod(c[12]);
    m.dqn_loss = std::stod(c[13]);
    m.epsilon = std::stod(c[14]);
    m.dqn_lr = std::stod(c[15]);
    out.push_back(m);
  }
  return out;
}

void write_eval_csv(const fs::path& path, const std::vector<EpisodeReport>& reports) {
  auto out = open_out(path);
  out << kEvalHeader << '\n';
  for (std::size_t e = 0; e < reports.size(); ++e) {
    const auto& r = reports[e];
    Index below_c = 0, below_b = 0;
    for (bool ok : r.wn_meets_c_min) below_c += !ok;
    for (bool ok : r.uav_meets_b_min) below_b += !ok;
    double min_battery = r.uav_battery_end.empty() ? 0.0 : r.uav_battery_end.front();
    for (double b : r.uav_battery_end) min_battery = std::min(min_battery, b);
    out << e << ',' << num(r.c_total) << ',' << below_c << ',' << below_b << ',' << num(min_battery) << ','
        << r.d_min_violation_slots << ',' << num(r.min_pair_distance) << ',' << (r.all_pass() ? 1 : 0) << '\n';
  }
}

void write_eval_wn_csv(const fs::path& path, const std::vector<EpisodeReport>& reports) {
  auto out = open_out(path);
  out << kEvalWnHeader << '\n';
  for (std::size_t e = 0; e < reports.size(); ++e) {
    for (std::size_t w = 0; w < reports[e].wn_data.size(); ++w) {
      out << e << ',' << w << ',' << num(reports[e].wn_data[w]) << ',' << (reports[e].wn_meets_c_min[w] ? 1 : 0)
          << '\n';
    }
  }
}

std::vector<EpisodeReport> read_eval_csv(const fs::path& eval_path, const fs::path& wn_path) {
  std::vector<EpisodeReport> out;
  for (const auto& c : read_csv(eval_path, kEvalHeader)) {
    EpisodeReport r;
    r.c_total = std::stod(c[1]);
    r.d_min_violation_slots = std::stoll(c[5]);
    r.min_pair_distance = std::stod(c[6]);
    out.push_back(std::move(r));
  }
  for (const auto& c : read_csv(wn_path, kEvalWnHeader)) {
    const auto e = static_cast<std::size_t>(std::stoull(c[0]));
    if (e >= out.size()) throw std::runtime_error(wn_path.string() + ": episode out of range");
    out[e].wn_data.push_back(std::stod(c[2]));
    out[e].wn_meets_c_min.push_back(c[3] == "1");
  }
  return out;
}

json slot_record_to_json(const SlotRecord& r) {
  json uavs = json::array();
  for (const auto& u : r.uavs) {
    uavs.push_back({{"x", u.x},
                    {"y", u.y},
                    {"heading", u.heading},
                    {"speed", u.speed},
                    {"wet", u.wet},
                    {"battery", u.battery},
                    {"served", u.served},
                    {"data", u.data}});
  }
  return {{"episode", r.episode}, {"slot", r.slot},        {"uavs", uavs},
          {"wn_flags", r.wn_flags}, {"wn_batteries", r.wn_batteries}, {"c_total", r.c_total}};
}

SlotRecord slot_record_from_json(const json& j) {
  SlotRecord r;
  r.episode = j.at("episode").get<Index>();
  r.slot = j.at("slot").get<Index>();
  for (const auto& u : j.at("uavs")) {
    UavSlotRecord s;
    s.x = u.at("x").get<double>();
    s.y = u.at("y").get<double>();
    s.heading = u.at("heading").get<double>();
    s.speed = u.at("speed").get<double>();
    s.wet = u.at("wet").get<int>();
    s.battery = u.at("battery").get<double>();
    s.served = u.at("served").get<std::vector<Index>>();
    s.data = u.at("data").get<double>();
    r.uavs.push_back(std::move(s));
  }
  r.wn_flags = j.at("wn_flags").get<std::vector<int>>();
  r.wn_batteries = j.at("wn_batteries").get<std::vector<double>>();
  r.c_total = j.at("c_total").get<double>();
  return r;
}

void write_trajectory_jsonl(const fs::path& path, const std::vector<SlotRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << slot_record_to_json(r).dump() << '\n';
}

std::vector<SlotRecord> read_trajectory_jsonl(const fs::path& path) {
  auto in = open_in(path);
  std::vector<SlotRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(slot_record_from_json(json::parse(line)));
  }
  return out;
}

void write_tbar_csv(const fs::path& path, const std::vector<TbarPoint>& curve) {
  auto out = open_out(path);
  out << kTbarHeader << '\n';
  for (const auto& p : curve) out << p.tbar << ',' << num(p.c_total) << '\n';
}

std::vector<TbarPoint> read_tbar_csv(const fs::path& path) {
  std::vector<TbarPoint> out;
  for (const auto& c : read_csv(path, kTbarHeader)) out.push_back({std::stoll(c[0]), std::stod(c[1])});
  return out;
}

void write_scalability_csv(const fs::path& path, const std::vector<ScalabilityCell>& table) {
  auto out = open_out(path);
  out << "uavs,wns,c_min,c_total\n";
  for (const auto& c : table) out << c.uavs << ',' << c.wns << ',' << num(c.c_min) << ',' << num(c.c_total) << '\n';
}

const std::vector<std::string>& checkpoint_networks() {
  static const std::vector<std::string> names{"actor", "v1", "v2", "q1", "q2", "temperature", "dqn_eval", "dqn_target"};
  return names;
}

void save_checkpoints(const fs::path& dir, const AgentSet& agents) {
  fs::create_directories(dir);
  for (std::size_t u = 0; u < agents.sac.size(); ++u) {
    const SacModel& s = agents.sac[u];
    const DqnModel& d = agents.dqn[u];
    const std::vector<std::pair<std::string, std::vector<NamedArray>>> files{
        {"actor", mlp_arrays(s.actor, "actor")},
        {"v1", mlp_arrays(s.v_main, "v1")},
        {"v2", mlp_arrays(s.v_target, "v2")},
        {"q1", mlp_arrays(s.q1, "q1")},
        {"q2", mlp_arrays(s.q2, "q2")},
        {"temperature", {NamedArray{"log_alpha", {1}, {s.log_alpha}}}},
        {"dqn_eval", mlp_arrays(d.eval, "dqn_eval")},
        {"dqn_target", mlp_arrays(d.target, "dqn_target")},
    };
    for (const auto& [net, arrays] : files) {
      write_json_file(dir / ("uav" + std::to_string(u) + "_" + net + ".json"), checkpoint_to_json(arrays));
    }
  }
}

AgentSet load_checkpoints(const fs::path& dir, const WorldConfig& config) {
  AgentSet a = AgentSet::create(config, 0);
  auto arrays = [&](std::size_t u, const std::string& net) {
    const fs::path p = dir / ("uav" + std::to_string(u) + "_" + net + ".json");
    if (!fs::exists(p)) throw std::runtime_error("missing checkpoint " + p.string());
    return checkpoint_from_json(read_json_file(p));
  };
  for (std::size_t u = 0; u < a.sac.size(); ++u) {
    SacModel& s = a.sac[u];
    load_mlp_arrays(s.actor, arrays(u, "actor"), "actor");
    load_mlp_arrays(s.v_main, arrays(u, "v1"), "v1");
    load_mlp_arrays(s.v_target, arrays(u, "v2"), "v2");
    load_mlp_arrays(s.q1, arrays(u, "q1"), "q1");
    load_mlp_arrays(s.q2, arrays(u, "q2"), "q2");
    const auto t = arrays(u, "temperature");
    if (t.size() != 1 || t[0].name != "log_alpha" || t[0].data.size() != 1) {
      throw std::invalid_argument("temperature checkpoint is malformed");
    }
    s.log_alpha = t[0].data[0];
    a.local_actors[u] = s.actor;
    load_mlp_arrays(a.dqn[u].eval, arrays(u, "dqn_eval"), "dqn_eval");
    load_mlp_arrays(a.dqn[u].target, arrays(u, "dqn_target"), "dqn_target");
  }
  return a;
}

json read_json_file(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

}  // namespace uavwpcn
