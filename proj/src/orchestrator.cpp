#include "uavwpcn/orchestrator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace uavwpcn {
namespace {

constexpr std::uint64_t kTrainEpisodeStream = 0x747261696eULL;
constexpr std::uint64_t kEvalEpisodeStream = 0x6576616cULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kTrainerStream = 0x72756eULL;

bool uses_dqn(SchemeId id) { return id != SchemeId::random_wdc; }

void check_scheme(const SchemeOptions& scheme, const WorldConfig& config) {
  if (scheme.id == SchemeId::phase_division && (scheme.tbar < 2 || scheme.tbar > config.horizon)) {
    throw std::invalid_argument("phase division needs 2 <= tbar <= horizon");
  }
}

Eigen::Vector3d act_with(const Mlp<double>& actor, const Eigen::VectorXd& obs, bool deterministic,
                         const SacHyper& hyper, Rng& rng) {
  if (deterministic) return actor.forward(obs).topRows<3>().array().tanh();
  Eigen::MatrixXd noise(3, 1);
  for (Index i = 0; i < 3; ++i) noise(i, 0) = standard_normal(rng);
  return sample_policy(actor, obs, noise, hyper).action.col(0);
}

struct LossAccumulator {
  double v = 0.0, q = 0.0, policy = 0.0, alpha_loss = 0.0, dqn = 0.0;
  Index sac_steps = 0;
  Index dqn_steps = 0;

  void add(const SacLosses& l) {
    v += l.v;
    q += 0.5 * (l.q1 + l.q2);
    policy += l.policy;
    alpha_loss += l.alpha;
    ++sac_steps;
  }
};

struct EpisodeContext {
  const WorldConfig& config;
  const SchemeOptions& scheme;
  const ValidationOptions& options;
  AgentSet& agents;
  Rng& rng;
  bool learn = false;
  double epsilon = 0.0;
  double dqn_lr = 0.0;
  ReplayBuffer<TierOneExperience>* tier1 = nullptr;
  std::vector<ReplayBuffer<TierTwoExperience>>* tier2 = nullptr;
  std::vector<SlotRecord>* trajectory = nullptr;
  Index episode = 0;
};

void train_dqn(EpisodeContext& ctx, Index u, LossAccumulator& acc) {
  auto& buffer = (*ctx.tier2)[static_cast<std::size_t>(u)];
  const Index batch = ctx.config.learning.batch_size;
  if (buffer.size() < batch) return;
  std::vector<TierTwoExperience> items;
  items.reserve(static_cast<std::size_t>(batch));
  for (Index i : buffer.sample_indices(batch, ctx.rng)) items.push_back(buffer[i]);
  acc.dqn += dqn_train_step(ctx.agents.dqn[static_cast<std::size_t>(u)], DqnBatch::gather(items), ctx.dqn_lr);
  ++acc.dqn_steps;
}

struct PendingTierTwo {
  Eigen::VectorXd observation;
  Index action = kSilentAction;
  double reward = 0.0;
  bool valid = false;
};

EpisodeMetrics play_episode(EpisodeContext& ctx, std::uint64_t seed, EpisodeReport* report_out) {
  const WorldConfig& c = ctx.config;
  const Index num_uavs = c.num_uavs;
  const Index num_wns = c.num_wns;
  const Index obs_size = tier1_observation_size(c);
  const bool hoe_weighting = ctx.scheme.id != SchemeId::mahdrl_no_hoe;
  const bool dqn_active = uses_dqn(ctx.scheme.id);
  const bool learn_dqn = ctx.learn && dqn_active;

  WorldState state = reset(c, seed, ctx.options);
  std::vector<PendingTierTwo> pending(static_cast<std::size_t>(num_uavs));
  LossAccumulator acc;
  double alpha_sum = 0.0;
  double reward_sum = 0.0;
  Index wet_slots = 0;

  for (Index t = 1; t <= c.horizon; ++t) {
    const WorldState before = state;
    const Eigen::VectorXd joint = make_joint_state(state, c);

    Eigen::Matrix3Xd policy(3, num_uavs);
    for (Index u = 0; u < num_uavs; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      policy.col(u) = act_with(ctx.agents.local_actors[uu], joint.segment(u * obs_size, obs_size), !ctx.learn,
                               ctx.agents.sac[uu].hyper(), ctx.rng);
    }
    const SlotPlan plan = plan_slot(policy, state, c, ctx.scheme);
    apply_slot_actions(state, plan.actions, c);

    SlotRecord record;
    if (ctx.trajectory) {
      record.episode = ctx.episode;
      record.slot = t;
      for (const auto& wn : before.wns) record.wn_flags.push_back(wn.flag);
      record.uavs.resize(static_cast<std::size_t>(num_uavs));
    }

    std::vector<int> flags;
    for (const auto& wn : state.wns) flags.push_back(wn.flag);
    for (Index k = 1; k <= c.subslots; ++k) {
      Eigen::MatrixXd scores(num_uavs, num_wns);
      std::vector<Eigen::VectorXd> obs2(static_cast<std::size_t>(num_uavs));
      std::vector<bool> active(static_cast<std::size_t>(num_uavs));
      for (Index u = 0; u < num_uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        obs2[uu] = make_tier2_observation(state, u, k, c);
        if (dqn_active) {
          scores.row(u) = select_scores(ctx.agents.dqn[uu], obs2[uu], ctx.learn ? ctx.epsilon : 0.0, ctx.rng);
        } else {
          for (Index w = 0; w < num_wns; ++w) scores(u, w) = uniform(ctx.rng, 0.0, 1.0);
        }
        active[uu] = plan.wdc_enabled[uu] && !state.uavs[uu].depleted;
      }
      const SubSlotSchedule schedule = resolve_associations(scores, flags, active);
      const SubSlotOutcome outcome = step_subslot(state, schedule, c);

      for (Index u = 0; u < num_uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        const auto& served = schedule.assignment[uu];
        if (ctx.trajectory) {
          record.uavs[uu].served.push_back(served ? *served : Index{-1});
          record.uavs[uu].data += outcome.data(u);
        }
        if (!learn_dqn) continue;
        if (pending[uu].valid) {
          (*ctx.tier2)[uu].push({pending[uu].observation, pending[uu].action, pending[uu].reward, obs2[uu]});
          pending[uu].valid = false;
        }
        // Silent sub-slots carry no gradient, so they are not stored.
        if (served) pending[uu] = {obs2[uu], *served, outcome.reward(u), true};
      }
      if (learn_dqn && c.learning.dqn_train_per_subslot) {
        for (Index u = 0; u < num_uavs; ++u) train_dqn(ctx, u, acc);
      }
    }

    end_slot(state, c);

    Eigen::VectorXd rewards(num_uavs);
    for (Index u = 0; u < num_uavs; ++u) {
      rewards(u) = compute_tier1_reward(before, state, u, c, hoe_weighting).total;
      wet_slots += state.uavs[static_cast<std::size_t>(u)].wet_flag;
    }
    reward_sum += rewards.sum();

    if (ctx.learn) {
      ctx.tier1->push({joint, plan.squashed, rewards, make_joint_state(state, c)});
      const Index batch = c.learning.batch_size;
      if (ctx.tier1->size() >= batch) {
        for (Index u = 0; u < num_uavs; ++u) {
          std::vector<const TierOneExperience*> items;
          items.reserve(static_cast<std::size_t>(batch));
          for (Index i : ctx.tier1->sample_indices(batch, ctx.rng)) items.push_back(&(*ctx.tier1)[i]);
          auto& model = ctx.agents.sac[static_cast<std::size_t>(u)];
          acc.add(sac_train_step(model, gather_sac_batch(items, u, obs_size), ctx.rng));
        }
      }
      if (learn_dqn && !c.learning.dqn_train_per_subslot) {
        for (Index u = 0; u < num_uavs; ++u) train_dqn(ctx, u, acc);
      }
      if (t % c.learning.actor_sync_interval == 0) {
        for (Index u = 0; u < num_uavs; ++u) {
          const auto uu = static_cast<std::size_t>(u);
          ctx.agents.local_actors[uu] = ctx.agents.sac[uu].actor;
        }
      }
    }

    if (ctx.trajectory) {
      for (Index u = 0; u < num_uavs; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        auto& r = record.uavs[uu];
        r.x = state.uavs[uu].pos.x();
        r.y = state.uavs[uu].pos.y();
        r.heading = plan.actions[uu].heading;
        r.speed = state.uavs[uu].velocity;
        r.wet = state.uavs[uu].wet_flag;
        r.battery = state.uavs[uu].battery;
      }
      for (const auto& wn : state.wns) record.wn_batteries.push_back(wn.battery);
      record.c_total = state.c_total;
      ctx.trajectory->push_back(std::move(record));
    }
  }

  if (learn_dqn) {
    for (Index u = 0; u < num_uavs; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      if (!pending[uu].valid) continue;
      (*ctx.tier2)[uu].push(
          {pending[uu].observation, pending[uu].action, pending[uu].reward, make_tier2_observation(state, u, 1, c)});
    }
  }

  for (const auto& m : ctx.agents.sac) alpha_sum += m.alpha();

  const EpisodeReport report = episode_report(state, c);
  EpisodeMetrics m;
  m.episode = ctx.episode;
  m.c_total = report.c_total;
  m.mean_reward = reward_sum / static_cast<double>(num_uavs * c.horizon);
  m.wns_below_c_min = std::count(report.wn_meets_c_min.begin(), report.wn_meets_c_min.end(), false);
  m.uavs_below_b_min = std::count(report.uav_meets_b_min.begin(), report.uav_meets_b_min.end(), false);
  m.d_min_violation_slots = report.d_min_violation_slots;
  m.min_pair_distance = report.min_pair_distance;
  m.wet_slots = wet_slots;
  if (acc.sac_steps > 0) {
    const double n = static_cast<double>(acc.sac_steps);
    m.v_loss = acc.v / n;
    m.q_loss = acc.q / n;
    m.policy_loss = acc.policy / n;
    m.alpha_loss = acc.alpha_loss / n;
  }
  m.alpha = alpha_sum / static_cast<double>(num_uavs);
  if (acc.dqn_steps > 0) m.dqn_loss = acc.dqn / static_cast<double>(acc.dqn_steps);
  m.epsilon = ctx.learn && dqn_active ? ctx.epsilon : 0.0;
  m.dqn_lr = ctx.learn && dqn_active ? ctx.dqn_lr : 0.0;
  if (report_out) *report_out = report;
  return m;
}

}  // namespace

std::string_view scheme_name(SchemeId id) {
  switch (id) {
    case SchemeId::mahdrl: return "mahdrl";
    case SchemeId::mahdrl_no_hoe: return "mahdrl_no_hoe";
    case SchemeId::phase_division: return "phase_division";
    case SchemeId::team: return "team";
    case SchemeId::random_wdc: return "random_wdc";
  }
  return "unknown";
}

SchemeId parse_scheme(std::string_view name) {
  for (SchemeId id : kAllSchemes) {
    if (scheme_name(id) == name) return id;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

SlotPlan plan_slot(const Eigen::Matrix3Xd& policy_actions, const WorldState& state, const WorldConfig& config,
                   const SchemeOptions& scheme) {
  const Index num_uavs = policy_actions.cols();
  SlotPlan p;
  p.squashed = policy_actions;
  p.wdc_enabled.assign(static_cast<std::size_t>(num_uavs), true);
  for (Index u = 0; u < num_uavs; ++u) {
    const auto uu = static_cast<std::size_t>(u);
    if (scheme.id == SchemeId::phase_division) {
      const bool wet_phase = state.slot < scheme.tbar;
      p.squashed(2, u) = wet_phase ? 1.0 : -1.0;
      p.wdc_enabled[uu] = !wet_phase;
    } else if (scheme.id == SchemeId::team) {
      if (2 * u < num_uavs) {
        p.wdc_enabled[uu] = false;
      } else {
        p.squashed(2, u) = -1.0;
      }
    }
    p.actions.push_back(to_slot_action(p.squashed.col(u), config.v_max));
  }
  return p;
}

SacBatch gather_sac_batch(const std::vector<const TierOneExperience*>& items, Index uav, Index observation_size) {
  if (items.empty()) throw std::invalid_argument("empty SAC batch");
  const Index n = static_cast<Index>(items.size());
  const Index d = items.front()->state.size();
  SacBatch b{Eigen::MatrixXd(d, n), Eigen::MatrixXd(observation_size, n), Eigen::MatrixXd(3, n),
             Eigen::VectorXd(n), Eigen::MatrixXd(d, n)};
  for (Index j = 0; j < n; ++j) {
    const TierOneExperience& e = *items[static_cast<std::size_t>(j)];
    b.states.col(j) = e.state;
    b.observations.col(j) = e.state.segment(uav * observation_size, observation_size);
    b.actions.col(j) = e.actions.col(uav);
    b.rewards(j) = e.rewards(uav);
    b.next_states.col(j) = e.next_state;
  }
  return b;
}

AgentSet AgentSet::create(const WorldConfig& config, std::uint64_t seed) {
  Rng init(seed);
  AgentSet a;
  const Index obs = tier1_observation_size(config);
  const SacDims dims{obs, joint_state_size(config), 3};
  const SacHyper sac_hyper = SacHyper::from(config.learning, obs);
  const DqnHyper dqn_hyper = DqnHyper::from(config.learning);
  for (Index u = 0; u < config.num_uavs; ++u) {
    a.sac.emplace_back(dims, sac_hyper, init);
    a.local_actors.push_back(a.sac.back().actor);
    a.dqn.emplace_back(config.num_wns, dqn_hyper, init);
  }
  return a;
}

std::uint64_t episode_seed(std::uint64_t seed, Index episode, bool evaluation) {
  return derive_seed(seed, evaluation ? kEvalEpisodeStream : kTrainEpisodeStream, static_cast<std::uint64_t>(episode));
}

Trainer::Trainer(WorldConfig config, SchemeOptions scheme, Index total_episodes, std::uint64_t seed,
                 ValidationOptions options)
    : config_(std::move(config)),
      scheme_(scheme),
      total_episodes_(total_episodes),
      seed_(seed),
      options_(options),
      tier1_(config_.learning.replay_capacity),
      rng_(derive_seed(seed, kTrainerStream)) {
  require_valid(config_, options_);
  check_scheme(scheme_, config_);
  if (total_episodes < 1) throw std::invalid_argument("episode count must be positive");
  agents_ = AgentSet::create(config_, derive_seed(seed, kInitStream));
  tier2_.assign(static_cast<std::size_t>(config_.num_uavs), ReplayBuffer<TierTwoExperience>(config_.learning.replay_capacity));
}

const EpisodeMetrics& Trainer::run_episode() {
  if (finished()) throw std::logic_error("training already finished");
  const DqnHyper h = DqnHyper::from(config_.learning);
  EpisodeContext ctx{config_, scheme_, options_, agents_, rng_};
  ctx.learn = true;
  ctx.epsilon = epsilon_at(h, episode_, total_episodes_);
  ctx.dqn_lr = dqn_lr_at(h, episode_, total_episodes_);
  ctx.tier1 = &tier1_;
  ctx.tier2 = &tier2_;
  ctx.episode = episode_;
  metrics_.push_back(play_episode(ctx, episode_seed(seed_, episode_, false), nullptr));
  ++episode_;
  return metrics_.back();
}

void Trainer::run_to_end() {
  while (!finished()) run_episode();
}

TrainRun run_training(const WorldConfig& config, Index episodes, std::uint64_t seed, SchemeOptions scheme,
                      ValidationOptions options) {
  Trainer trainer(config, scheme, episodes, seed, options);
  trainer.run_to_end();
  return TrainRun{config, scheme, episodes, seed, trainer.metrics(), trainer.agents()};
}

double EvaluationResult::mean_c_total() const {
  if (reports.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : reports) s += r.c_total;
  return s / static_cast<double>(reports.size());
}

EvaluationResult run_evaluation(const WorldConfig& config, const AgentSet& agents, Index episodes,
                                std::uint64_t seed, SchemeOptions scheme, bool record_trajectory,
                                ValidationOptions options) {
  require_valid(config, options);
  check_scheme(scheme, config);
  const auto u = static_cast<std::size_t>(config.num_uavs);
  if (agents.sac.size() != u || agents.local_actors.size() != u || agents.dqn.size() != u) {
    throw std::invalid_argument("agent set does not match the number of UAVs");
  }
  const Index obs = tier1_observation_size(config);
  for (std::size_t i = 0; i < u; ++i) {
    if (agents.local_actors[i].input_size() != obs || agents.dqn[i].eval.input_size() != tier2_observation_size(config)) {
      throw std::invalid_argument("checkpoint widths do not match the configuration");
    }
  }
  // With learning off the episode loop only reads the agents.
  AgentSet& local = const_cast<AgentSet&>(agents);
  Rng rng(derive_seed(seed, kEvalEpisodeStream, 0xffffULL));
  EvaluationResult out;
  for (Index e = 0; e < episodes; ++e) {
    EpisodeContext ctx{config, scheme, options, local, rng};
    ctx.trajectory = record_trajectory ? &out.trajectory : nullptr;
    ctx.episode = e;
    EpisodeReport report;
    play_episode(ctx, episode_seed(seed, e, true), &report);
    out.reports.push_back(std::move(report));
  }
  return out;
}

std::vector<Index> tbar_grid(Index horizon, Index count) {
  if (horizon < 2 || count < 1) throw std::invalid_argument("tbar grid needs horizon >= 2 and count >= 1");
  const Index span = horizon - 2;
  if (count > span) {
    std::vector<Index> all(static_cast<std::size_t>(span + 1));
    std::iota(all.begin(), all.end(), Index{2});
    return all;
  }
  std::vector<Index> out;
  for (Index i = 0; i < count; ++i) {
    // Interior points of an even split.
    out.push_back(2 + (span * (i + 1)) / (count + 1));
  }
  return out;
}

std::vector<TbarPoint> phase_division_sweep(const WorldConfig& config, const std::vector<Index>& candidates,
                                            Index train_episodes, Index eval_episodes, std::uint64_t seed) {
  std::vector<TbarPoint> curve;
  for (Index tbar : candidates) {
    const SchemeOptions scheme{SchemeId::phase_division, tbar};
    const TrainRun run = run_training(config, train_episodes, seed, scheme);
    curve.push_back({tbar, run_evaluation(config, run.agents, eval_episodes, seed, scheme).mean_c_total()});
  }
  return curve;
}

TbarPoint best_tbar(const std::vector<TbarPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty tbar curve");
  return *std::max_element(curve.begin(), curve.end(),
                           [](const TbarPoint& a, const TbarPoint& b) { return a.c_total < b.c_total; });
}

std::vector<ScalabilityCell> scalability_sweep(const WorldConfig& base, const std::vector<Index>& uav_counts,
                                               const std::vector<double>& c_min_values, Index train_episodes,
                                               Index eval_episodes, std::uint64_t seed) {
  std::vector<ScalabilityCell> table;
  const ValidationOptions options{true};
  for (Index u : uav_counts) {
    for (double c_min : c_min_values) {
      WorldConfig c = base;
      c.num_uavs = u;
      c.num_wns = 2 * u;
      c.c_min = c_min;
      const TrainRun run = run_training(c, train_episodes, seed, {}, options);
      const double c_total = run_evaluation(c, run.agents, eval_episodes, seed, {}, false, options).mean_c_total();
      table.push_back({u, 2 * u, c_min, c_total});
    }
  }
  return table;
}

}  // namespace uavwpcn
