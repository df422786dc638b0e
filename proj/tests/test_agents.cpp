#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "support.hpp"
#include "toys.hpp"
#include "uavwpcn/dqn_agent.hpp"
#include "uavwpcn/sac_agent.hpp"

using namespace uavwpcn;
using doctest::Approx;
using Matrix = Eigen::MatrixXd;

namespace {

SacHyper small_hyper() {
  SacHyper h;
  h.hidden_width = 12;
  h.hidden_layers = 2;
  h.entropy_target = 5.0;
  return h;
}

SacBatch random_batch(Index obs, Index units, Index n, Rng& rng) {
  const Index joint = obs * units;
  SacBatch b{Matrix(joint, n), Matrix(obs, n), Matrix(3, n), Eigen::VectorXd(n), Matrix(joint, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < joint; ++i) b.states(i, j) = uniform(rng, 0, 1);
    for (Index i = 0; i < joint; ++i) b.next_states(i, j) = uniform(rng, 0, 1);
    for (Index i = 0; i < 3; ++i) b.actions(i, j) = uniform(rng, -0.95, 0.95);
    b.rewards(j) = standard_normal(rng);
  }
  b.observations = b.states.topRows(obs);
  return b;
}

DqnHyper small_dqn() {
  DqnHyper h;
  h.hidden_width = 12;
  h.hidden_layers = 2;
  return h;
}

DqnBatch random_dqn_batch(Index wns, Index n, Rng& rng, bool with_silent = true) {
  DqnBatch b{Matrix(wns + 3, n), Eigen::VectorXi(n), Eigen::VectorXd(n), Matrix(wns + 3, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < wns + 3; ++i) {
      b.observations(i, j) = uniform(rng, 0, 1);
      b.next_observations(i, j) = uniform(rng, 0, 1);
    }
    b.actions(j) = with_silent && j % 5 == 4 ? static_cast<int>(kSilentAction)
                                            : std::uniform_int_distribution<int>(0, static_cast<int>(wns) - 1)(rng);
    b.rewards(j) = standard_normal(rng);
  }
  return b;
}

}  // namespace

TEST_SUITE("sac_agent") {
  TEST_CASE("network widths") {
    Rng rng(1);
    SacModel m({33, 132, 3}, SacHyper{}, rng);
    CHECK(m.actor.widths() == std::vector<Index>{33, 256, 256, 256, 6});
    CHECK(m.v_main.input_size() == 132);
    CHECK(m.q1.input_size() == 135);
    CHECK(m.v_target.parameters() == m.v_main.parameters());
    CHECK(m.alpha() == Approx(0.2));
  }

  TEST_CASE("entropy target selection") {
    LearningConfig l;
    CHECK(SacHyper::from(l, 15).entropy_target == 15.0);
    l.negate_entropy_target = true;
    CHECK(SacHyper::from(l, 15).entropy_target == -15.0);
    l.entropy_target_action_dim = true;
    CHECK(SacHyper::from(l, 15).entropy_target == -3.0);
  }

  TEST_CASE("range mapping") {
    auto a = to_slot_action(Eigen::Vector3d(-1, -1, -0.2), 20.0);
    CHECK(a.heading == 0.0);
    CHECK(a.speed == 0.0);
    CHECK(a.wet == 0);
    a = to_slot_action(Eigen::Vector3d(1, 1, 0.3), 20.0);
    CHECK(a.heading < 2 * std::numbers::pi);
    CHECK(a.heading == Approx(2 * std::numbers::pi));
    CHECK(a.speed == 20.0);
    CHECK(a.wet == 1);
    a = to_slot_action(Eigen::Vector3d(0, 0, 0), 20.0);
    CHECK(a.heading == Approx(std::numbers::pi));
    CHECK(a.speed == 10.0);
    CHECK(a.wet == 0);
  }

  TEST_CASE("acting is reproducible") {
    Rng init(2);
    SacModel m({6, 12, 3}, small_hyper(), init);
    const Eigen::VectorXd o = Eigen::VectorXd::LinSpaced(6, 0, 1);
    Rng r1(9), r2(9);
    CHECK(sac_act(m, o, false, r1) == sac_act(m, o, false, r2));
    const Eigen::Vector3d det = sac_act(m, o, true, r1);
    CHECK(det == sac_act(m, o, true, r2));
    CHECK((det.array().abs() < 1.0).all());
    CHECK_THROWS_AS(sac_act(m, Eigen::VectorXd::Zero(5), true, r1), std::invalid_argument);
  }

  TEST_CASE("sampled log-prob matches the density formula") {
    Rng init(3);
    SacModel m({4, 8, 3}, small_hyper(), init);
    const Matrix obs = Matrix::Random(4, 20);
    Rng rng(4);
    Matrix noise(3, 20);
    for (Index j = 0; j < 20; ++j)
      for (Index i = 0; i < 3; ++i) noise(i, j) = standard_normal(rng);
    const auto s = sample_policy(m.actor, obs, noise, m.hyper());
    const auto lp = policy_log_prob(m.actor, obs, s.action, m.hyper());
    for (Index j = 0; j < 20; ++j) CHECK(lp(j) == Approx(s.log_prob(j)).epsilon(1e-8));
  }

  TEST_CASE("squashed density agrees with Monte Carlo on a 1-D slice") {
    // Fixed mean and log-std on the first component; histogram of tanh draws.
    Mlp<double> actor({1, 6});
    actor.bias(0) << 0.4, 0.0, 0.0, -0.3, 0.0, 0.0;
    SacHyper h;
    const Matrix obs = Matrix::Zero(1, 1);
    Rng rng(5);
    const int draws = 200000, bins = 40;
    std::vector<double> hist(bins, 0.0);
    for (int i = 0; i < draws; ++i) {
      const double a = std::tanh(0.4 + std::exp(-0.3) * standard_normal(rng));
      ++hist[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((a + 1.0) / 2.0 * bins)))];
    }
    double kl = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double lo = -1.0 + 2.0 * b / bins;
      // Density mass in the bin by midpoint quadrature on 20 sub-points.
      double mass = 0.0;
      for (int q = 0; q < 20; ++q) {
        const double a = lo + (q + 0.5) * (2.0 / bins) / 20.0;
        Matrix act(3, 1);
        act << a, 0.0, 0.0;
        const double joint = policy_log_prob(actor, obs, act, h)(0);
        const double other = policy_log_prob(actor, obs, Matrix::Zero(3, 1), h)(0) -
                             std::log(1.0 / (std::exp(-0.3) * std::sqrt(2 * std::numbers::pi)) *
                                      std::exp(-0.5 * 0.4 * 0.4 / std::exp(-0.6)));
        mass += std::exp(joint - other) * (2.0 / bins) / 20.0;
      }
      const double p = hist[static_cast<std::size_t>(b)] / draws;
      if (p > 0 && mass > 0) kl += p * std::log(p / mass);
    }
    CHECK(kl < 0.01);
  }

  TEST_CASE("finite-difference checks of every loss") {
    Rng init(6);
    SacModel m({5, 10, 3}, small_hyper(), init);
    Rng rng(7);
    const SacBatch batch = random_batch(5, 2, 16, rng);
    const SacNoise noise = SacNoise::draw(3, 16, rng);
    SacGradients g;
    sac_losses(m, batch, noise, &g);

    auto v = testsupport::check_gradient(m.v_main.parameters(), g.v, [&] { return sac_losses(m, batch, noise, nullptr).v; }, 120, rng);
    auto q1 = testsupport::check_gradient(m.q1.parameters(), g.q1, [&] { return sac_losses(m, batch, noise, nullptr).q1; }, 120, rng);
    auto q2 = testsupport::check_gradient(m.q2.parameters(), g.q2, [&] { return sac_losses(m, batch, noise, nullptr).q2; }, 120, rng);
    auto pi = testsupport::check_gradient(m.actor.parameters(), g.actor,
                                          [&] { return sac_losses(m, batch, noise, nullptr).policy; }, 120, rng);
    for (const auto& c : {v, q1, q2, pi}) {
      CHECK(c.checked >= 100);
      CHECK(c.worst < 1e-4);
    }
    Eigen::VectorXd la = Eigen::VectorXd::Constant(1, m.log_alpha);
    const auto alpha_loss = [&] {
      SacModel copy = m;
      copy.log_alpha = la(0);
      return sac_losses(copy, batch, noise, nullptr).alpha;
    };
    const double numeric = testsupport::central_difference(la, 0, alpha_loss);
    CHECK(std::abs(numeric - g.log_alpha) / std::abs(g.log_alpha) < 1e-6);
  }

  TEST_CASE("V loss vanishes at its target") {
    Rng init(8);
    SacModel m({3, 6, 3}, small_hyper(), init);
    // Zero V net and Q nets make the V target -alpha * log pi; match it by
    // choosing a batch of one and setting the V output bias.
    for (auto* net : {&m.v_main, &m.q1, &m.q2}) net->parameters().setZero();
    Rng rng(9);
    SacBatch b = random_batch(3, 2, 1, rng);
    const SacNoise noise = SacNoise::draw(3, 1, rng);
    const auto s = sample_policy(m.actor, b.observations, noise.value, m.hyper());
    m.v_main.bias(m.v_main.num_layers() - 1)(0) = -m.alpha() * s.log_prob(0);
    SacGradients g;
    const auto l = sac_losses(m, b, noise, &g);
    CHECK(l.v < 1e-28);
    CHECK(g.v.norm() < 1e-14);
  }

  TEST_CASE("hand-computed losses on a minimal net") {
    // Every net is a single linear layer; observation and state are 1-D.
    SacHyper h;
    h.hidden_width = 1;
    h.hidden_layers = 1;
    h.gamma = 0.5;
    h.entropy_target = 2.0;
    h.initial_alpha = 0.5;
    Rng init(10);
    SacModel m({1, 1, 3}, h, init);
    for (auto* net : {&m.actor, &m.v_main, &m.v_target, &m.q1, &m.q2}) net->parameters().setZero();
    // V(s) = relu(s) * 1 + 0.1; target V(s') = 0.3 (bias only).
    m.v_main.weight(0)(0, 0) = 1.0;
    m.v_main.weight(1)(0, 0) = 1.0;
    m.v_main.bias(1)(0) = 0.1;
    m.v_target.bias(1)(0) = 0.3;
    // Q1 = 0.2 constant, Q2 = 0.4 constant.
    m.q1.bias(1)(0) = 0.2;
    m.q2.bias(1)(0) = 0.4;
    // Actor: mean 0, log-std 0 on every dimension.

    SacBatch b{Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 2.0), Matrix::Zero(3, 1), Eigen::VectorXd::Constant(1, 1.0),
               Matrix::Constant(1, 1, 1.0)};
    SacNoise noise{Matrix::Zero(3, 1), Matrix::Zero(3, 1)};
    // Zero noise: a = 0, log pi = 3 * (-0.5 log 2pi).
    const double lp = -3.0 * 0.5 * std::log(2 * std::numbers::pi);
    const auto l = sac_losses(m, b, noise, nullptr);
    const double v_target = 0.2 - 0.5 * lp;
    CHECK(l.v == Approx(0.5 * std::pow(2.1 - v_target, 2)).epsilon(1e-12));
    const double q_target = 1.0 + 0.5 * 0.3;
    CHECK(l.q1 == Approx(0.5 * std::pow(0.2 - q_target, 2)).epsilon(1e-12));
    CHECK(l.q2 == Approx(0.5 * std::pow(0.4 - q_target, 2)).epsilon(1e-12));
    CHECK(l.policy == Approx(0.5 * lp - 0.2).epsilon(1e-12));
    CHECK(l.alpha == Approx(0.5 * (-lp - 2.0)).epsilon(1e-12));
  }

  TEST_CASE("Q symmetry") {
    Rng init(11);
    SacModel m({4, 8, 3}, small_hyper(), init);
    Rng rng(12);
    const SacBatch b = random_batch(4, 2, 12, rng);
    const SacNoise noise = SacNoise::draw(3, 12, rng);
    SacModel swapped = m;
    std::swap(swapped.q1, swapped.q2);
    const auto a = sac_losses(m, b, noise, nullptr);
    const auto s = sac_losses(swapped, b, noise, nullptr);
    CHECK(a.v == s.v);
    CHECK(a.policy == s.policy);
    CHECK(a.q1 == s.q2);
    CHECK(a.q2 == s.q1);
  }

  TEST_CASE("tau of one freezes the target V net") {
    SacHyper h = small_hyper();
    h.tau = 1.0;
    Rng init(13);
    SacModel m({4, 8, 3}, h, init);
    const Eigen::VectorXd before = m.v_target.parameters();
    Rng rng(14);
    sac_train_step(m, random_batch(4, 2, 8, rng), rng);
    CHECK(m.v_target.parameters() == before);
    CHECK(m.v_main.parameters() != before);
  }

  TEST_CASE("losses fall on a stationary batch distribution") {
    SacHyper h = small_hyper();
    h.hidden_width = 16;
    h.tau = 0.9;
    h.gamma = 0.5;
    h.entropy_target = -3.0;
    Rng init(15);
    SacModel m({3, 6, 3}, h, init);
    Rng rng(16);
    // Rewards depend only on the state and states repeat, so every critic has a fixed point.
    const auto draw = [&] {
      SacBatch b = random_batch(3, 2, 32, rng);
      b.next_states = b.states;
      for (Index j = 0; j < 32; ++j) b.rewards(j) = b.states(0, j) - 0.5;
      return b;
    };
    SacLosses early{}, late{};
    for (int t = 0; t < 500; ++t) {
      const auto l = sac_train_step(m, draw(), rng);
      auto& acc = t < 50 ? early : late;
      if (t < 50 || t >= 450) {
        acc.v += l.v;
        acc.q1 += l.q1;
        acc.q2 += l.q2;
        acc.policy += l.policy;
        acc.alpha += std::abs(l.alpha);
      }
    }
    CHECK(late.v < early.v);
    CHECK(late.q1 < early.q1);
    CHECK(late.q2 < early.q2);
    CHECK(late.policy < early.policy);
    CHECK(late.alpha < early.alpha);
  }

  TEST_CASE("actor snapshots round trip") {
    Rng init(17);
    SacModel a({4, 8, 3}, small_hyper(), init);
    SacModel b({4, 8, 3}, small_hyper(), init);
    import_actor(b, export_actor(a));
    CHECK(b.actor.parameters() == a.actor.parameters());
    CHECK(checkpoint_to_json(export_actor(b)) == checkpoint_to_json(export_actor(a)));
    CHECK(checkpoint_to_json(export_actor(a))["version"] == kCheckpointVersion);
    SacModel wrong({5, 10, 3}, small_hyper(), init);
    CHECK_THROWS_AS(import_actor(wrong, export_actor(a)), std::invalid_argument);

    SacModel c({4, 8, 3}, small_hyper(), init);
    a.log_alpha = -1.25;
    import_sac_model(c, export_sac_model(a));
    CHECK(checkpoint_to_json(export_sac_model(c)) == checkpoint_to_json(export_sac_model(a)));
  }

  TEST_CASE("move-to-target toy") {
    CHECK(toys::target_toy_run(0).mean_terminal_distance < 0.1);
  }
}

TEST_SUITE("dqn_agent") {
  TEST_CASE("schedules") {
    DqnHyper h;
    CHECK(epsilon_at(h, 0, 100) == 0.9);
    CHECK(epsilon_at(h, 40, 100) == Approx(0.9 + 0.5 * (0.02 - 0.9)));
    CHECK(epsilon_at(h, 80, 100) == Approx(0.02));
    CHECK(epsilon_at(h, 99, 100) == Approx(0.02));
    CHECK(dqn_lr_at(h, 0, 100) == 0.01);
    CHECK(dqn_lr_at(h, 99, 100) == Approx(1e-6));
    CHECK(dqn_lr_at(h, 50, 100) < dqn_lr_at(h, 49, 100));
  }

  TEST_CASE("q-values") {
    Rng rng(1);
    DqnModel m(10, small_dqn(), rng);
    const Eigen::VectorXd o = Eigen::VectorXd::Constant(13, 0.3);
    CHECK(q_values(m, o).size() == 10);
    CHECK(q_values(m, o) == q_values(m, o));
    CHECK_THROWS_AS(q_values(m, Eigen::VectorXd::Zero(12)), std::invalid_argument);
    m.eval.parameters().setZero();
    CHECK(q_values(m, o).isZero());
  }

  TEST_CASE("score selection") {
    Rng init(2);
    DqnModel m(4, small_dqn(), init);
    const Eigen::VectorXd o = Eigen::VectorXd::Constant(7, 0.3);
    Rng rng(3);
    CHECK(select_scores(m, o, 0.0, rng) == q_values(m, o));
    Rng r1(4), r2(4);
    CHECK(select_scores(m, o, 0.5, r1) == select_scores(m, o, 0.5, r2));

    // eps = 1: each of the 24 rankings equally likely over 1e4 draws.
    std::map<std::vector<int>, int> counts;
    for (int t = 0; t < 10000; ++t) {
      const Eigen::VectorXd s = select_scores(m, o, 1.0, rng);
      std::vector<int> key(s.data(), s.data() + 4);
      ++counts[key];
    }
    CHECK(counts.size() == 24);
    const double expected = 10000.0 / 24.0;
    double chi2 = 0.0;
    for (const auto& [k, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 49.7);  // 99.9th percentile of chi^2(23)
  }

  TEST_CASE("loss gradient") {
    Rng init(5);
    DqnModel m(6, small_dqn(), init);
    Rng rng(6);
    const DqnBatch b = random_dqn_batch(6, 20, rng);
    Eigen::VectorXd g;
    dqn_loss(m, b, &g);
    auto c = testsupport::check_gradient(m.eval.parameters(), g, [&] { return dqn_loss(m, b, nullptr); }, 120, rng);
    CHECK(c.checked >= 100);
    CHECK(c.worst < 1e-4);
  }

  TEST_CASE("silent samples carry no loss") {
    Rng init(7);
    DqnModel m(4, small_dqn(), init);
    Rng rng(8);
    DqnBatch b = random_dqn_batch(4, 10, rng);
    b.actions.setConstant(static_cast<int>(kSilentAction));
    Eigen::VectorXd g;
    CHECK(dqn_loss(m, b, &g) == 0.0);
    CHECK(g.isZero());
    b.actions(0) = 7;
    CHECK_THROWS_AS(dqn_loss(m, b, nullptr), std::out_of_range);
  }

  TEST_CASE("loss is zero at the targets") {
    DqnHyper h = small_dqn();
    h.gamma = 0.0;
    Rng init(9);
    DqnModel m(3, h, init);
    m.eval.parameters().setZero();
    m.eval.bias(m.eval.num_layers() - 1) << 0.5, -1.0, 2.0;
    Rng rng(10);
    DqnBatch b = random_dqn_batch(3, 9, rng, false);
    for (Index j = 0; j < 9; ++j) b.rewards(j) = std::array<double, 3>{0.5, -1.0, 2.0}[static_cast<std::size_t>(b.actions(j))];
    Eigen::VectorXd g;
    CHECK(dqn_loss(m, b, &g) == 0.0);
    CHECK(g.isZero());
  }

  TEST_CASE("targets only move at sync boundaries") {
    DqnHyper h = small_dqn();
    h.target_sync_period = 5;
    Rng init(11);
    DqnModel m(4, h, init);
    Rng rng(12);
    const DqnBatch b = random_dqn_batch(4, 16, rng);
    Eigen::VectorXd frozen = m.target.parameters();
    for (int t = 1; t <= 12; ++t) {
      const Eigen::RowVectorXd before = dqn_targets(m, b);
      CHECK(before == dqn_targets(m, b));
      dqn_train_step(m, b, 1e-3);
      if (t % 5 == 0) {
        CHECK(m.target.parameters() == m.eval.parameters());
        frozen = m.target.parameters();
      } else {
        CHECK(m.target.parameters() == frozen);
      }
    }
  }

  TEST_CASE("regression toward constant rewards") {
    DqnHyper h = small_dqn();
    h.gamma = 0.0;
    Rng init(13);
    DqnModel m(3, h, init);
    Rng rng(14);
    const Eigen::Vector3d values(0.2, -0.7, 1.3);
    DqnBatch b = random_dqn_batch(3, 30, rng, false);
    for (Index j = 0; j < 30; ++j) b.rewards(j) = values(b.actions(j));
    for (int t = 0; t < 2000; ++t) dqn_train_step(m, b, 1e-3);
    for (Index j = 0; j < 30; ++j) {
      CHECK(std::abs(q_values(m, b.observations.col(j))(b.actions(j)) - values(b.actions(j))) < 1e-2);
    }
  }

  TEST_CASE("export and import") {
    Rng init(15);
    DqnModel a(4, small_dqn(), init), b(4, small_dqn(), init), wrong(5, small_dqn(), init);
    import_dqn_model(b, export_dqn_model(a));
    CHECK(checkpoint_to_json(export_dqn_model(b)) == checkpoint_to_json(export_dqn_model(a)));
    CHECK_THROWS_AS(import_dqn_model(wrong, export_dqn_model(a)), std::invalid_argument);
  }

  TEST_CASE("bandit") {
    int hits = 0;
    for (std::uint64_t s = 0; s < 20; ++s) hits += toys::bandit_run(s);
    CHECK(hits >= 19);
  }
}
