// uavwpcn: train, evaluate, benchmark and sweep the hierarchical UAV-WPCN agents.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "uavwpcn/config_io.hpp"
#include "uavwpcn/orchestrator.hpp"
#include "uavwpcn/run_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uavwpcn;

namespace {

constexpr int kManifestVersion = 1;

struct ConfigArgs {
  std::string config_path;
  std::string profile = "full";
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config; keys override the profile")->check(CLI::ExistingFile);
  cmd->add_option("--profile", a.profile, "Base scenario")->check(CLI::IsMember({"full", "desk"}));
}

WorldConfig resolve_config(const ConfigArgs& a) {
  WorldConfig base = a.profile == "desk" ? desk_profile() : WorldConfig{};
  return a.config_path.empty() ? base : load_config(a.config_path, base);
}

Index default_episodes(const ConfigArgs& a) { return a.profile == "desk" ? 200 : 2000; }

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("UAVWPCN_OUTPUT_ROOT"); root && *root) p = fs::path(root) / p;
  }
  return p;
}

// The output directory must be new or empty unless --overwrite is given.
void prepare_out(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::invalid_argument(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!overwrite) throw std::invalid_argument(dir.string() + " is not empty; pass --overwrite to replace it");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

json base_manifest(const std::string& command, const ConfigArgs& a, const fs::path& out) {
  return {{"version", kManifestVersion},
          {"command", command},
          {"profile", a.profile},
          {"config_path", a.config_path},
          {"output_dir", out.string()}};
}

json checkpoint_list(const WorldConfig& c) {
  json list = json::array();
  for (Index u = 0; u < c.num_uavs; ++u) {
    for (const auto& net : checkpoint_networks()) list.push_back("checkpoints/uav" + std::to_string(u) + "_" + net + ".json");
  }
  return list;
}

SchemeOptions scheme_from(const std::string& name, Index tbar) { return {parse_scheme(name), tbar}; }

void save_trainer_state(const fs::path& run, Trainer& t) {
  fs::create_directories(run / "state");
  {
    std::ofstream out(run / "state" / "state.bin", std::ios::binary);
    t.save_state(out);
  }
  std::ofstream rng(run / "state" / "rng_state.txt");
  rng << t.rng();
}

// Writes every artifact of a (possibly partial) training run.
void write_training_outputs(const fs::path& run, Trainer& t, json manifest) {
  write_metrics_csv(run / "metrics.csv", t.metrics());
  save_checkpoints(run / "checkpoints", t.agents());
  manifest["completed_episodes"] = t.episode();
  manifest["checkpoints"] = checkpoint_list(t.config());
  if (!t.finished()) {
    save_trainer_state(run, t);
    manifest["state"] = "state/state.bin";
  } else if (fs::exists(run / "state")) {
    fs::remove_all(run / "state");
    manifest.erase("state");
  }
  write_json_file(run / "manifest.json", manifest);
}

void train_loop(const fs::path& run, Trainer& t, json manifest, Index stop_after, Index checkpoint_every) {
  Index done_here = 0;
  while (!t.finished() && (stop_after <= 0 || done_here < stop_after)) {
    const auto& m = t.run_episode();
    ++done_here;
    std::cerr << "episode " << m.episode << " c_total " << m.c_total << '\n';
    if (checkpoint_every > 0 && t.episode() % checkpoint_every == 0 && !t.finished()) {
      write_training_outputs(run, t, manifest);
    }
  }
  write_training_outputs(run, t, manifest);
}

void write_evaluation(const fs::path& dir, const EvaluationResult& r) {
  write_eval_csv(dir / "eval.csv", r.reports);
  write_eval_wn_csv(dir / "eval_wn.csv", r.reports);
  if (!r.trajectory.empty()) write_trajectory_jsonl(dir / "trajectory.jsonl", r.trajectory);
  for (std::size_t e = 0; e < r.reports.size(); ++e) {
    const auto& rep = r.reports[e];
    Index below = 0;
    for (bool ok : rep.wn_meets_c_min) below += !ok;
    std::cout << "eval episode " << e << " c_total " << rep.c_total << " wns_below_c_min " << below
              << " d_min_violation_slots " << rep.d_min_violation_slots << " all_pass " << rep.all_pass() << '\n';
  }
}

struct RunInfo {
  WorldConfig config;
  json manifest;
  SchemeOptions scheme;
};

RunInfo read_run(const fs::path& run) {
  if (!fs::exists(run / "manifest.json") || !fs::exists(run / "config.json")) {
    throw std::invalid_argument(run.string() + " is not a run directory");
  }
  RunInfo info;
  info.manifest = read_json_file(run / "manifest.json");
  info.config = config_from_json(read_json_file(run / "config.json"));
  info.scheme = scheme_from(info.manifest.value("scheme", "mahdrl"), info.manifest.value("tbar", Index{0}));
  return info;
}

ValidationOptions validation_for(const WorldConfig& c) { return {c.num_uavs == 1}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multi-agent RL for UAV-assisted wireless-powered networks"};
  app.require_subcommand(1);

  ConfigArgs cfg;
  std::string out, scheme = "mahdrl", run_dir, what;
  std::uint64_t seed = 1;
  Index episodes = 0, eval_episodes = 5, stop_after = 0, checkpoint_every = 0, tbar = 0, tbar_count = 0,
        tbar_episodes = 0;
  bool overwrite = false;
  std::vector<Index> uav_counts{1, 2, 3};
  std::vector<double> c_min_values{50.0, 100.0};
  std::vector<double> dcov_values{5.0, 20.0, 80.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};

  auto* train = app.add_subcommand("train", "Train MAHDRL or a benchmark scheme");
  add_config_options(train, cfg);
  train->add_option("--episodes", episodes, "Training episodes");
  train->add_option("--seed", seed);
  train->add_option("--out", out)->required();
  train->add_option("--scheme", scheme)->check(CLI::IsMember({"mahdrl", "mahdrl_no_hoe", "phase_division", "team", "random_wdc"}));
  train->add_option("--tbar", tbar, "Phase-division split slot");
  train->add_option("--stop-after", stop_after, "Stop after this many episodes and keep a resumable state");
  train->add_option("--checkpoint-every", checkpoint_every, "Write a resumable state every N episodes");
  train->add_flag("--overwrite", overwrite);

  auto* eval = app.add_subcommand("eval", "Evaluate trained checkpoints");
  eval->add_option("--run", run_dir, "Training run directory")->required();
  eval->add_option("--episodes", eval_episodes);
  eval->add_option("--seed", seed);
  eval->add_option("--out", out)->required();
  eval->add_flag("--overwrite", overwrite);

  auto* bench = app.add_subcommand("benchmark", "Train and evaluate one scheme");
  add_config_options(bench, cfg);
  bench->add_option("--scheme", scheme)->required()->check(CLI::IsMember({"mahdrl", "mahdrl_no_hoe", "phase_division", "team", "random_wdc"}));
  bench->add_option("--episodes", episodes);
  bench->add_option("--eval-episodes", eval_episodes);
  bench->add_option("--seed", seed);
  bench->add_option("--out", out)->required();
  bench->add_option("--tbar-count", tbar_count, "Phase-division candidates (0: every integer)");
  bench->add_option("--tbar-episodes", tbar_episodes, "Training episodes per candidate");
  bench->add_flag("--overwrite", overwrite);

  auto* sweep = app.add_subcommand("sweep", "Scalability or d_cov sweep");
  add_config_options(sweep, cfg);
  sweep->add_option("--what", what)->required()->check(CLI::IsMember({"scalability", "dcov"}));
  sweep->add_option("--uavs", uav_counts);
  sweep->add_option("--c-min", c_min_values);
  sweep->add_option("--dcov", dcov_values);
  sweep->add_option("--seeds", seeds);
  sweep->add_option("--episodes", episodes);
  sweep->add_option("--eval-episodes", eval_episodes);
  sweep->add_option("--out", out)->required();
  sweep->add_flag("--overwrite", overwrite);

  auto* exp = app.add_subcommand("export", "Export plot data from a run");
  exp->add_option("--run", run_dir)->required();
  exp->add_option("--what", what)->required()->check(CLI::IsMember({"trajectory", "metrics", "tbar"}));
  exp->add_option("--out", out, "Output file (default: stdout)");
  exp->add_option("--seed", seed, "Evaluation seed when the trajectory is regenerated");

  auto* resume = app.add_subcommand("resume", "Continue an interrupted training run");
  resume->add_option("--run", run_dir)->required();
  resume->add_option("--stop-after", stop_after);
  resume->add_option("--checkpoint-every", checkpoint_every);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const WorldConfig c = resolve_config(cfg);
      if (episodes <= 0) episodes = default_episodes(cfg);
      const SchemeOptions s = scheme_from(scheme, tbar);
      Trainer t(c, s, episodes, seed, validation_for(c));
      const fs::path dir = resolve_out(out);
      prepare_out(dir, overwrite);
      save_config(c, dir / "config.json");
      json m = base_manifest("train", cfg, dir);
      m.update({{"scheme", scheme}, {"tbar", tbar}, {"seed", seed}, {"episodes", episodes}});
      train_loop(dir, t, m, stop_after, checkpoint_every);
    } else if (*resume) {
      const fs::path dir = resolve_out(run_dir);
      RunInfo info = read_run(dir);
      if (!fs::exists(dir / "state" / "state.bin")) throw std::invalid_argument("run has no resumable state");
      Trainer t(info.config, info.scheme, info.manifest.at("episodes").get<Index>(),
                info.manifest.at("seed").get<std::uint64_t>(), validation_for(info.config));
      {
        std::ifstream in(dir / "state" / "state.bin", std::ios::binary);
        t.load_state(in);
      }
      std::ifstream rng_in(dir / "state" / "rng_state.txt");
      if (rng_in) {
        rng_in >> t.rng();
        if (!rng_in) throw std::runtime_error("corrupt RNG state");
      } else {
        std::cerr << "warning: no RNG state found; continuing with a fresh generator\n";
        t.rng().seed(derive_seed(t.seed(), 0x726573756d65ULL, static_cast<std::uint64_t>(t.episode())));
      }
      train_loop(dir, t, info.manifest, stop_after, checkpoint_every);
    } else if (*eval) {
      const fs::path src = resolve_out(run_dir);
      RunInfo info = read_run(src);
      const AgentSet agents = load_checkpoints(src / "checkpoints", info.config);
      const EvaluationResult r =
          run_evaluation(info.config, agents, eval_episodes, seed, info.scheme, true, validation_for(info.config));
      const fs::path dir = resolve_out(out);
      prepare_out(dir, overwrite);
      save_config(info.config, dir / "config.json");
      json m{{"version", kManifestVersion}, {"command", "eval"},        {"run", src.string()},
             {"seed", seed},                {"episodes", eval_episodes}, {"scheme", scheme_name(info.scheme.id)},
             {"tbar", info.scheme.tbar},    {"output_dir", dir.string()}};
      write_json_file(dir / "manifest.json", m);
      write_evaluation(dir, r);
    } else if (*bench) {
      const WorldConfig c = resolve_config(cfg);
      if (episodes <= 0) episodes = default_episodes(cfg);
      const fs::path dir = resolve_out(out);
      SchemeOptions s = scheme_from(scheme, 0);
      require_valid(c, validation_for(c));
      prepare_out(dir, overwrite);
      save_config(c, dir / "config.json");
      json m = base_manifest("benchmark", cfg, dir);
      if (s.id == SchemeId::phase_division) {
        if (tbar_episodes <= 0) tbar_episodes = c.learning.phase_division_episodes;
        const auto grid = tbar_count > 0 ? tbar_grid(c.horizon, tbar_count) : tbar_grid(c.horizon, c.horizon);
        const auto curve = phase_division_sweep(c, grid, tbar_episodes, eval_episodes, seed);
        write_tbar_csv(dir / "tbar_sweep.csv", curve);
        s.tbar = best_tbar(curve).tbar;
        m["tbar_episodes"] = tbar_episodes;
      }
      m.update({{"scheme", scheme}, {"tbar", s.tbar}, {"seed", seed}, {"episodes", episodes},
                {"eval_episodes", eval_episodes}});
      Trainer t(c, s, episodes, seed, validation_for(c));
      train_loop(dir, t, m, 0, 0);
      write_evaluation(dir, run_evaluation(c, t.agents(), eval_episodes, seed, s, true, validation_for(c)));
    } else if (*sweep) {
      const WorldConfig c = resolve_config(cfg);
      if (episodes <= 0) episodes = default_episodes(cfg);
      const fs::path dir = resolve_out(out);
      prepare_out(dir, overwrite);
      save_config(c, dir / "config.json");
      json m = base_manifest("sweep", cfg, dir);
      m.update({{"what", what}, {"seeds", seeds}, {"episodes", episodes}, {"eval_episodes", eval_episodes}});
      if (what == "scalability") {
        std::vector<ScalabilityCell> table;
        for (std::uint64_t sd : seeds) {
          auto part = scalability_sweep(c, uav_counts, c_min_values, episodes, eval_episodes, sd);
          table.insert(table.end(), part.begin(), part.end());
        }
        write_scalability_csv(dir / "scalability.csv", table);
        m["uavs"] = uav_counts;
        m["c_min"] = c_min_values;
      } else {
        std::ofstream csv(dir / "dcov.csv");
        csv << "d_cov,seed,c_total\n";
        for (double d : dcov_values) {
          for (std::uint64_t sd : seeds) {
            WorldConfig v = c;
            v.d_cov = d;
            const TrainRun run = run_training(v, episodes, sd, {}, validation_for(v));
            const double ct =
                run_evaluation(v, run.agents, eval_episodes, sd, {}, false, validation_for(v)).mean_c_total();
            char line[96];
            std::snprintf(line, sizeof line, "%.17g,%llu,%.17g\n", d, static_cast<unsigned long long>(sd), ct);
            csv << line;
          }
        }
        m["dcov"] = dcov_values;
      }
      write_json_file(dir / "manifest.json", m);
    } else if (*exp) {
      const fs::path src = resolve_out(run_dir);
      RunInfo info = read_run(src);
      std::ostringstream buf;
      if (what == "metrics") {
        std::ifstream in(src / "metrics.csv", std::ios::binary);
        if (!in) throw std::invalid_argument("run has no metrics.csv");
        buf << in.rdbuf();
      } else if (what == "tbar") {
        std::ifstream in(src / "tbar_sweep.csv", std::ios::binary);
        if (!in) throw std::invalid_argument("run has no tbar_sweep.csv");
        buf << in.rdbuf();
      } else if (fs::exists(src / "trajectory.jsonl")) {
        std::ifstream in(src / "trajectory.jsonl", std::ios::binary);
        buf << in.rdbuf();
      } else {
        const AgentSet agents = load_checkpoints(src / "checkpoints", info.config);
        const auto r = run_evaluation(info.config, agents, 1, seed, info.scheme, true, validation_for(info.config));
        for (const auto& rec : r.trajectory) buf << slot_record_to_json(rec).dump() << '\n';
      }
      if (out.empty()) {
        std::cout << buf.str();
      } else {
        const fs::path target = resolve_out(out);
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        std::ofstream(target, std::ios::binary) << buf.str();
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
