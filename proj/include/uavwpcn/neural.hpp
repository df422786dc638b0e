#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "uavwpcn/core_types.hpp"

namespace uavwpcn {

// Fully connected network with ReLU hidden layers and a linear output layer.
// All parameters live in one contiguous vector; layer l stores its weight
// (out x in, column-major) followed by its bias. Batches are column-major:
// one sample per column.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Tape {
    std::vector<Matrix> inputs;  // activation entering each layer
  };

  Mlp() = default;

  explicit Mlp(std::vector<Index> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("an MLP needs at least input and output widths");
    Index offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l] < 1 || widths_[l + 1] < 1) throw std::invalid_argument("layer widths must be positive");
      offsets_.push_back(offset);
      offset += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }
    params_ = Vector::Zero(offset);
  }

  static Mlp with_hidden(Index input, Index hidden_width, Index hidden_layers, Index output) {
    std::vector<Index> widths{input};
    for (Index i = 0; i < hidden_layers; ++i) widths.push_back(hidden_width);
    widths.push_back(output);
    return Mlp(std::move(widths));
  }

  const std::vector<Index>& widths() const { return widths_; }
  Index input_size() const { return widths_.front(); }
  Index output_size() const { return widths_.back(); }
  Index num_layers() const { return static_cast<Index>(offsets_.size()); }
  Index parameter_count() const { return params_.size(); }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  Eigen::Map<Matrix> weight(Index l) {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<const Matrix> weight(Index l) const {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<Vector> bias(Index l) {
    return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
  }
  Eigen::Map<const Vector> bias(Index l) const {
    return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
  }

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  template <typename Gen>
  void initialize(Gen& rng) {
    for (Index l = 0; l < num_layers(); ++l) {
      const Scalar bound = Scalar(1) / std::sqrt(Scalar(widths_[l]));
      std::uniform_real_distribution<Scalar> dist(-bound, bound);
      auto w = weight(l);
      for (Index j = 0; j < w.cols(); ++j)
        for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
      auto b = bias(l);
      for (Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
    }
  }

  Matrix forward(const Eigen::Ref<const Matrix>& x) const {
    check_input(x);
    Matrix h = x;
    for (Index l = 0; l < num_layers(); ++l) {
      Matrix z = weight(l) * h;
      z.colwise() += bias(l);
      h = l + 1 < num_layers() ? Matrix(z.cwiseMax(Scalar(0))) : std::move(z);
    }
    return h;
  }

  Matrix forward(const Eigen::Ref<const Matrix>& x, Tape& tape) const {
    check_input(x);
    tape.inputs.resize(static_cast<std::size_t>(num_layers()));
    tape.inputs[0] = x;
    Matrix z;
    for (Index l = 0; l < num_layers(); ++l) {
      z = weight(l) * tape.inputs[static_cast<std::size_t>(l)];
      z.colwise() += bias(l);
      if (l + 1 < num_layers()) tape.inputs[static_cast<std::size_t>(l + 1)] = z.cwiseMax(Scalar(0));
    }
    return z;
  }

  // Accumulates dL/dparams into `grad` and returns dL/dinput.
  Matrix backward(const Tape& tape, const Eigen::Ref<const Matrix>& grad_out, Vector& grad) const {
    if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
    if (grad_out.rows() != output_size()) throw std::invalid_argument("output gradient width mismatch");
    Matrix g = grad_out;
    for (Index l = num_layers() - 1; l >= 0; --l) {
      const Matrix& in = tape.inputs[static_cast<std::size_t>(l)];
      Eigen::Map<Matrix>(grad.data() + offsets_[l], widths_[l + 1], widths_[l]).noalias() += g * in.transpose();
      Eigen::Map<Vector>(grad.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]) +=
          g.rowwise().sum();
      Matrix g_in = weight(l).transpose() * g;
      if (l > 0) g_in.array() *= (in.array() > Scalar(0)).template cast<Scalar>();
      g = std::move(g_in);
    }
    return g;
  }

 private:
  void check_input(const Eigen::Ref<const Matrix>& x) const {
    if (x.rows() != input_size()) {
      throw std::invalid_argument("input width " + std::to_string(x.rows()) + " does not match network input " +
                                  std::to_string(input_size()));
    }
  }

  std::vector<Index> widths_;
  std::vector<Index> offsets_;
  Vector params_;
};

template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector m;
  Vector v;
  Index step = 0;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  AdamState() = default;
  AdamState(Index size, Scalar learning_rate) : m(Vector::Zero(size)), v(Vector::Zero(size)), lr(learning_rate) {}
};

// Adam with bias correction.
template <typename Scalar>
void adam_step(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> params,
               const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& grads, AdamState<Scalar>& s) {
  if (params.size() != grads.size() || s.m.size() != params.size()) {
    throw std::invalid_argument("Adam shapes do not match");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (Scalar(1) - s.beta1) * grads;
  s.v = s.beta2 * s.v + (Scalar(1) - s.beta2) * grads.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(s.beta1, Scalar(s.step));
  const Scalar c2 = Scalar(1) - std::pow(s.beta2, Scalar(s.step));
  params.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

// target <- keep * target + (1 - keep) * source
template <typename Scalar>
void soft_update(Mlp<Scalar>& target, const Mlp<Scalar>& source, Scalar keep) {
  target.parameters() = keep * target.parameters() + (Scalar(1) - keep) * source.parameters();
}

// Fixed-capacity FIFO ring with uniform sampling without replacement.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(Index capacity = 131072) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(T item) {
    if (size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[static_cast<std::size_t>(next_)] = std::move(item);
    }
    next_ = (next_ + 1) % capacity_;
  }

  Index size() const { return static_cast<Index>(items_.size()); }
  Index capacity() const { return capacity_; }
  Index next_slot() const { return next_; }

  // Storage order, not insertion order, once the ring has wrapped.
  const T& operator[](Index i) const { return items_[static_cast<std::size_t>(i)]; }
  const std::vector<T>& storage() const { return items_; }

  // Rebuilds a buffer from a snapshot.
  void restore(std::vector<T> items, Index next) {
    if (static_cast<Index>(items.size()) > capacity_ || next < 0 || next >= capacity_) {
      throw std::invalid_argument("replay snapshot does not fit the buffer");
    }
    items_ = std::move(items);
    next_ = next;
  }

  // Floyd's algorithm: `batch` distinct indices, each subset equally likely.
  template <typename Gen>
  std::vector<Index> sample_indices(Index batch, Gen& rng) const {
    const Index n = size();
    if (batch > n) {
      throw std::length_error("cannot sample " + std::to_string(batch) + " items from a buffer of " +
                              std::to_string(n));
    }
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(batch));
    std::unordered_set<Index> chosen;
    for (Index j = n - batch; j < n; ++j) {
      const Index t = std::uniform_int_distribution<Index>(0, j)(rng);
      if (chosen.insert(t).second) {
        out.push_back(t);
      } else {
        chosen.insert(j);
        out.push_back(j);
      }
    }
    return out;
  }

 private:
  Index capacity_;
  Index next_ = 0;
  std::vector<T> items_;
};

// Checkpoint documents: named arrays with shape headers.
inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<Index> shape;
  std::vector<double> data;
};

nlohmann::json checkpoint_to_json(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> checkpoint_from_json(const nlohmann::json& doc);

std::vector<NamedArray> mlp_arrays(const Mlp<double>& net, const std::string& prefix);
// Loads parameters into `net`; throws std::invalid_argument on any shape mismatch.
void load_mlp_arrays(Mlp<double>& net, const std::vector<NamedArray>& arrays, const std::string& prefix);

}  // namespace uavwpcn
