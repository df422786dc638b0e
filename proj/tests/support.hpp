#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "uavwpcn/core_types.hpp"
#include "uavwpcn/rng.hpp"

namespace testsupport {

// Central finite difference of `loss` with respect to params(i).
inline double central_difference(Eigen::VectorXd& params, Eigen::Index i, const std::function<double()>& loss,
                                 double h = 1e-6) {
  const double saved = params(i);
  params(i) = saved + h;
  const double up = loss();
  params(i) = saved - h;
  const double down = loss();
  params(i) = saved;
  return (up - down) / (2.0 * h);
}

struct GradCheck {
  int checked = 0;
  double worst = 0.0;
};

// Relative error |a - n| / max(|a| + |n|, floor) over `count` random coordinates.
// ReLU kinks make a handful of coordinates unreliable; those whose
// one-sided differences disagree are skipped and not counted.
inline GradCheck check_gradient(Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
                                const std::function<double()>& loss, int count, uavwpcn::Rng& rng,
                                double floor = 1e-6) {
  GradCheck out;
  const double h = 1e-6;
  const auto n = params.size();
  for (int tries = 0; out.checked < count && tries < 20 * count; ++tries) {
    const auto i = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    const double base = loss();
    const double saved = params(i);
    params(i) = saved + h;
    const double up = loss();
    params(i) = saved - h;
    const double down = loss();
    params(i) = saved;
    const double fwd = (up - base) / h;
    const double bwd = (base - down) / h;
    if (std::abs(fwd - bwd) > 1e-3 * std::max({std::abs(fwd), std::abs(bwd), floor})) continue;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic(i) - numeric) / std::max(std::abs(analytic(i)) + std::abs(numeric), floor);
    out.worst = std::max(out.worst, err);
    ++out.checked;
  }
  return out;
}

// Small world used across environment and orchestrator tests.
inline uavwpcn::WorldConfig tiny_world(Eigen::Index uavs = 2, Eigen::Index wns = 3, Eigen::Index horizon = 5) {
  uavwpcn::WorldConfig c;
  c.area_width_m = 60.0;
  c.area_height_m = 60.0;
  c.num_uavs = uavs;
  c.num_wns = wns;
  c.horizon = horizon;
  c.learning.hidden_width = 8;
  c.learning.hidden_layers = 2;
  c.learning.batch_size = 4;
  c.learning.replay_capacity = 256;
  return c;
}

}  // namespace testsupport
