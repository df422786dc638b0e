#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "support.hpp"
#include "uavwpcn/neural.hpp"

using namespace uavwpcn;
using doctest::Approx;
using Matrix = Eigen::MatrixXd;

TEST_SUITE("neural") {
  TEST_CASE("shapes and layout") {
    Mlp<double> net({4, 3, 2});
    CHECK(net.parameter_count() == 3 * 4 + 3 + 2 * 3 + 2);
    CHECK(net.num_layers() == 2);
    CHECK_THROWS_AS(Mlp<double>({4}), std::invalid_argument);
    CHECK_THROWS_AS(net.forward(Matrix::Zero(3, 1)), std::invalid_argument);
    const auto wide = Mlp<double>::with_hidden(33, 256, 3, 6);
    CHECK(wide.widths() == std::vector<Index>{33, 256, 256, 256, 6});
  }

  TEST_CASE("zero network outputs zero") {
    Mlp<double> net({3, 5, 2});
    CHECK(net.forward(Matrix::Random(3, 4)).isZero());
  }

  TEST_CASE("identity path reproduces a feature") {
    Mlp<double> net({3, 1, 1});
    net.weight(0)(0, 1) = 1.0;
    net.weight(1)(0, 0) = 1.0;
    Matrix x(3, 2);
    x << 0.1, 0.2, 0.7, 0.4, -3.0, 1.0;
    const Matrix y = net.forward(x);
    CHECK(y(0, 0) == 0.7);
    CHECK(y(0, 1) == 0.4);
  }

  TEST_CASE("linear net gradient is the input outer product") {
    Mlp<double> net({3, 2});
    Rng rng(1);
    net.initialize(rng);
    Eigen::Vector3d x(0.5, -1.0, 2.0);
    Mlp<double>::Tape tape;
    net.forward(x, tape);
    Eigen::Vector2d up(1.5, -0.25);
    Eigen::VectorXd grad;
    const Matrix din = net.backward(tape, up, grad);
    const Matrix outer = up * x.transpose();
    CHECK((Eigen::Map<const Matrix>(grad.data(), 2, 3) - outer).norm() < 1e-15);
    CHECK((grad.tail(2) - up).norm() < 1e-15);
    CHECK((din - net.weight(0).transpose() * up).norm() < 1e-15);
  }

  TEST_CASE("two-layer 2x2 symbolic gradient") {
    Mlp<double> net({2, 2, 1});
    net.weight(0) << 1.0, -2.0, 0.5, 0.25;
    net.bias(0) << 0.1, -0.3;
    net.weight(1) << 2.0, -1.0;
    net.bias(1) << 0.2;
    const Eigen::Vector2d x(1.0, 0.5);
    // h = relu(W0 x + b0) = relu(0.1, 0.325) = (0.1, 0.325); y = 2*0.1 - 0.325 + 0.2 = 0.075
    Mlp<double>::Tape tape;
    CHECK(net.forward(x, tape)(0, 0) == Approx(0.075).epsilon(1e-15));
    Eigen::VectorXd grad;
    net.backward(tape, Matrix::Constant(1, 1, 1.0), grad);
    // dL/dW0 = (v .* 1[h>0]) x^T with v = (2, -1)
    Eigen::VectorXd expected(9);
    expected << 2.0, -1.0, 1.0, -0.5, 2.0, -1.0, 0.1, 0.325, 1.0;
    CHECK((grad - expected).norm() < 1e-15);
  }

  TEST_CASE("zero upstream gradient gives zero parameter gradient") {
    auto net = Mlp<double>::with_hidden(4, 6, 2, 3);
    Rng rng(2);
    net.initialize(rng);
    Mlp<double>::Tape tape;
    net.forward(Matrix::Random(4, 5), tape);
    Eigen::VectorXd grad;
    net.backward(tape, Matrix::Zero(3, 5), grad);
    CHECK(grad.isZero());
  }

  TEST_CASE("finite differences on a random network") {
    auto net = Mlp<double>::with_hidden(6, 16, 3, 4);
    Rng rng(3);
    net.initialize(rng);
    const Matrix x = Matrix::NullaryExpr(6, 8, [&] { return standard_normal(rng); });
    const Matrix w = Matrix::NullaryExpr(4, 8, [&] { return standard_normal(rng); });
    const auto loss = [&] { return 0.5 * (net.forward(x).array() * w.array()).square().sum(); };
    Mlp<double>::Tape tape;
    const Matrix y = net.forward(x, tape);
    Eigen::VectorXd grad;
    net.backward(tape, (y.array() * w.array().square()).matrix(), grad);
    const auto check = testsupport::check_gradient(net.parameters(), grad, loss, 150, rng);
    CHECK(check.checked >= 100);
    CHECK(check.worst < 1e-4);
  }

  TEST_CASE("Adam first step and sign") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd g(3);
    g << 0.5, -2.0, 1e-3;
    AdamState<double> s(3, 1e-2);
    adam_step<double>(p, g, s);
    for (Index i = 0; i < 3; ++i) {
      const double expected = -1e-2 * g(i) / (std::abs(g(i)) + 1e-8);
      CHECK(std::abs(p(i) - expected) < 1e-9);
    }
    for (int t = 0; t < 200; ++t) adam_step<double>(p, g, s);
    CHECK(p(0) < 0.0);
    CHECK(p(1) > 0.0);

    Eigen::VectorXd q = Eigen::VectorXd::Constant(2, 1.5);
    AdamState<double> z(2, 1e-2);
    adam_step<double>(q, Eigen::VectorXd::Zero(2), z);
    CHECK(q == Eigen::VectorXd::Constant(2, 1.5));
    CHECK_THROWS_AS(adam_step<double>(q, Eigen::VectorXd::Zero(3), z), std::invalid_argument);
  }

  TEST_CASE("soft update") {
    Mlp<double> a({2, 2}), b({2, 2});
    a.parameters().setConstant(1.0);
    b.parameters().setConstant(3.0);
    soft_update(a, b, 1.0);
    CHECK(a.parameters() == Eigen::VectorXd::Constant(6, 1.0));
    soft_update(a, b, 0.75);
    CHECK(a.parameters().isApproxToConstant(1.5));
  }

  TEST_CASE("replay buffer FIFO") {
    ReplayBuffer<int> buf(4);
    for (int i = 0; i < 5; ++i) buf.push(i);
    CHECK(buf.size() == 4);
    std::vector<int> held(buf.storage().begin(), buf.storage().end());
    std::sort(held.begin(), held.end());
    CHECK(held == std::vector<int>{1, 2, 3, 4});
    Rng rng(1);
    CHECK_THROWS_AS(buf.sample_indices(5, rng), std::length_error);
    CHECK_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
  }

  TEST_CASE("replay samples are distinct") {
    ReplayBuffer<int> buf(1000);
    for (int i = 0; i < 1000; ++i) buf.push(i);
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      auto idx = buf.sample_indices(128, rng);
      std::sort(idx.begin(), idx.end());
      CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    }
  }

  TEST_CASE("replay sampling is uniform") {
    // 1e5 single draws over 50 slots; chi-square with 49 dof.
    ReplayBuffer<int> buf(50);
    for (int i = 0; i < 50; ++i) buf.push(i);
    Rng rng(5);
    std::vector<int> counts(50, 0);
    const int draws = 100000;
    for (int t = 0; t < draws / 10; ++t) {
      for (Index i : buf.sample_indices(10, rng)) ++counts[static_cast<std::size_t>(i)];
    }
    const double expected = draws / 50.0;
    double chi2 = 0.0;
    for (int c : counts) {
      chi2 += (c - expected) * (c - expected) / expected;
      CHECK(std::abs(c - expected) < 3.0 * std::sqrt(expected));
    }
    CHECK(chi2 < 85.0);  // 99.9th percentile of chi^2(49) is about 85.4
  }

  TEST_CASE("checkpoint round trip") {
    auto net = Mlp<double>::with_hidden(3, 4, 2, 2);
    Rng rng(6);
    net.initialize(rng);
    const auto doc = checkpoint_to_json(mlp_arrays(net, "x"));
    CHECK(doc["version"] == kCheckpointVersion);
    auto copy = Mlp<double>::with_hidden(3, 4, 2, 2);
    load_mlp_arrays(copy, checkpoint_from_json(doc), "x");
    CHECK(copy.parameters() == net.parameters());
    CHECK(checkpoint_to_json(mlp_arrays(copy, "x")) == doc);

    auto other = Mlp<double>::with_hidden(4, 4, 2, 2);
    CHECK_THROWS_AS(load_mlp_arrays(other, checkpoint_from_json(doc), "x"), std::invalid_argument);
    auto bad = doc;
    bad["version"] = 99;
    CHECK_THROWS_AS(checkpoint_from_json(bad), std::invalid_argument);
  }

  TEST_CASE("training math is reproducible") {
    const auto run = [] {
      auto net = Mlp<double>::with_hidden(3, 8, 2, 1);
      Rng rng(7);
      net.initialize(rng);
      AdamState<double> s(net.parameter_count(), 1e-2);
      for (int t = 0; t < 50; ++t) {
        const Matrix x = Matrix::NullaryExpr(3, 16, [&] { return standard_normal(rng); });
        Mlp<double>::Tape tape;
        const Matrix y = net.forward(x, tape);
        Eigen::VectorXd g;
        net.backward(tape, y - x.colwise().sum(), g);
        adam_step<double>(net.parameters(), g, s);
      }
      return net.parameters();
    };
    CHECK(run() == run());
  }
}
