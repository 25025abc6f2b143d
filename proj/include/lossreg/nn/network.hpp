#pragma once

// Dense feedforward network with exact reverse-mode gradients.
//
// Topology: input -> [Linear -> ReLU -> Dropout] * hidden -> Linear -> head.
// The head is softmax for cross-entropy nets and identity for MSE nets.
// Parameters are stored as a flat list W0, b0, W1, b1, ... so optimizers and
// gradient checkers can walk them uniformly. Weights are (fan_in x fan_out)
// and activations are row-per-sample.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "lossreg/core.hpp"

namespace lossreg::nn {

enum class LossKind { cross_entropy, mse };

inline const char* to_string(LossKind kind) {
  return kind == LossKind::cross_entropy ? "cross_entropy" : "mse";
}

struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  LossKind loss = LossKind::mse;
  double dropout_rate = 0.0;  // 0 disables dropout
  double l2_lambda = 0.0;     // 0 disables the weight penalty

  void validate() const {
    if (input_dim < 1 || output_dim < 1)
      throw DomainError("network dimensions must be >= 1");
    for (auto h : hidden_dims)
      if (h < 1) throw DomainError("hidden widths must be >= 1");
    if (loss == LossKind::cross_entropy && output_dim < 2)
      throw DomainError("cross-entropy networks need at least 2 outputs");
    if (loss == LossKind::mse && output_dim != 1)
      throw DomainError("mse networks have exactly 1 output");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw DomainError("dropout rate must lie in [0, 1)");
    if (!(l2_lambda >= 0.0)) throw DomainError("l2 lambda must be >= 0");
  }
};

/// Class indices for cross-entropy nets, real targets for MSE nets.
template <typename Scalar>
using Targets = std::variant<LabelBatch, Vector<Scalar>>;

template <typename Scalar>
using Gradients = std::vector<Matrix<Scalar>>;

template <typename Scalar = double>
class Network {
 public:
  using MatrixType = Matrix<Scalar>;

  /// All parameters zero.
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t fan_in = spec_.input_dim;
    auto add_layer = [&](std::size_t fan_out) {
      params_.push_back(MatrixType::Zero(fan_in, fan_out));
      params_.push_back(MatrixType::Zero(1, fan_out));
      fan_in = fan_out;
    };
    for (auto h : spec_.hidden_dims) add_layer(h);
    add_layer(spec_.output_dim);
  }

  /// He-style uniform weights in +-sqrt(6 / fan_in), zero biases.
  static Network initialized(NetworkSpec spec, Rng& rng) {
    Network net(std::move(spec));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto& w = net.params_[2 * l];
      const double bound = std::sqrt(6.0 / static_cast<double>(w.rows()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(dist(rng));
    }
    return net;
  }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return params_.size() / 2; }

  const MatrixType& weight(std::size_t layer) const { return params_[2 * layer]; }
  const MatrixType& bias(std::size_t layer) const { return params_[2 * layer + 1]; }
  MatrixType& weight(std::size_t layer) {
    ++version_;
    return params_[2 * layer];
  }
  MatrixType& bias(std::size_t layer) {
    ++version_;
    return params_[2 * layer + 1];
  }

  const std::vector<MatrixType>& parameters() const { return params_; }
  /// Mutable access invalidates every outstanding forward cache.
  std::vector<MatrixType>& mutable_parameters() {
    ++version_;
    return params_;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
  }

  std::uint64_t version() const { return version_; }

 private:
  NetworkSpec spec_;
  std::vector<MatrixType> params_;
  std::uint64_t version_ = 0;
};

/// Everything backward needs, plus the network output.
template <typename Scalar>
struct ForwardCache {
  // inputs[l] is what layer l consumed (post-ReLU, post-dropout for l > 0)
  std::vector<Matrix<Scalar>> inputs;
  // pre-activations of the hidden layers
  std::vector<Matrix<Scalar>> hidden_pre;
  // scaled keep-masks (0 or 1/keep); empty when dropout was inactive
  std::vector<Matrix<Scalar>> masks;
  Matrix<Scalar> logits;
  /// Softmax probabilities (cross-entropy) or raw predictions (mse).
  Matrix<Scalar> output;
  LossKind loss = LossKind::mse;
  std::uint64_t network_version = 0;
};

namespace detail {

template <typename Scalar>
void softmax_rows(const Matrix<Scalar>& logits, Matrix<Scalar>& out) {
  out.resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar mx = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
}

template <typename Scalar>
void check_finite(const Matrix<Scalar>& m, const char* what) {
  if (!m.allFinite()) throw DomainError(fmt::format("non-finite values in {}", what));
}

}  // namespace detail

/// Runs the network on a row-per-sample batch. `rng` is required exactly
/// when dropout is active and `train_mode` is set; dropout uses inverted
/// scaling so evaluation needs no correction.
template <typename Scalar>
ForwardCache<Scalar> forward(const Network<Scalar>& net, const Matrix<Scalar>& x, bool train_mode,
                             Rng* rng = nullptr) {
  const auto& spec = net.spec();
  if (static_cast<std::size_t>(x.cols()) != spec.input_dim)
    throw ShapeError(fmt::format("input has {} columns, network expects {}", x.cols(), spec.input_dim));
  const bool dropout = train_mode && spec.dropout_rate > 0.0;
  if (dropout && rng == nullptr) throw ContractError("dropout in train mode requires an rng");

  ForwardCache<Scalar> cache;
  cache.loss = spec.loss;
  cache.network_version = net.version();
  cache.inputs.reserve(net.num_layers());
  cache.inputs.push_back(x);

  const Scalar keep = static_cast<Scalar>(1.0 - spec.dropout_rate);
  std::bernoulli_distribution keep_dist(1.0 - spec.dropout_rate);
  for (std::size_t l = 0; l + 1 < net.num_layers(); ++l) {
    Matrix<Scalar> z = cache.inputs.back() * net.weight(l);
    z.rowwise() += net.bias(l).row(0);
    Matrix<Scalar> a = z.cwiseMax(Scalar(0));
    if (dropout) {
      Matrix<Scalar> mask(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = keep_dist(*rng) ? Scalar(1) / keep : Scalar(0);
      a.array() *= mask.array();
      cache.masks.push_back(std::move(mask));
    }
    cache.hidden_pre.push_back(std::move(z));
    cache.inputs.push_back(std::move(a));
  }
  const std::size_t last = net.num_layers() - 1;
  cache.logits = cache.inputs.back() * net.weight(last);
  cache.logits.rowwise() += net.bias(last).row(0);
  if (spec.loss == LossKind::cross_entropy)
    detail::softmax_rows(cache.logits, cache.output);
  else
    cache.output = cache.logits;
  detail::check_finite(cache.output, "network output");
  return cache;
}

/// Evaluation-mode prediction.
template <typename Scalar>
Matrix<Scalar> predict(const Network<Scalar>& net, const Matrix<Scalar>& x) {
  return forward(net, x, false).output;
}

namespace detail {

template <typename Scalar>
void check_targets(const Matrix<Scalar>& yhat, const Targets<Scalar>& targets, LossKind kind) {
  if (kind == LossKind::cross_entropy) {
    const auto* labels = std::get_if<LabelBatch>(&targets);
    if (labels == nullptr) throw ShapeError("cross-entropy loss needs class labels");
    if (static_cast<Eigen::Index>(labels->size()) != yhat.rows())
      throw ShapeError(fmt::format("{} labels for {} predictions", labels->size(), yhat.rows()));
    for (int c : labels->classes)
      if (c < 0 || c >= yhat.cols())
        throw DomainError(fmt::format("class index {} outside [0, {})", c, yhat.cols()));
  } else {
    const auto* values = std::get_if<Vector<Scalar>>(&targets);
    if (values == nullptr) throw ShapeError("mse loss needs real-valued targets");
    if (yhat.cols() != 1 || values->size() != yhat.rows())
      throw ShapeError(fmt::format("{} targets for {}x{} predictions", values->size(), yhat.rows(),
                                   yhat.cols()));
  }
}

}  // namespace detail

/// Mean loss over the batch: (1/N) sum (yhat - y)^2 for mse, the mean
/// negative log-probability of the true class for cross-entropy.
template <typename Scalar>
Scalar loss(const Matrix<Scalar>& yhat, const Targets<Scalar>& targets, LossKind kind) {
  detail::check_targets(yhat, targets, kind);
  const auto n = static_cast<Scalar>(yhat.rows());
  if (yhat.rows() == 0) return Scalar(0);
  if (kind == LossKind::mse) {
    const auto& y = std::get<Vector<Scalar>>(targets);
    return (yhat.col(0) - y).squaredNorm() / n;
  }
  const auto& labels = std::get<LabelBatch>(targets);
  Scalar total = 0;
  for (Eigen::Index r = 0; r < yhat.rows(); ++r) {
    const Scalar p = std::max(yhat(r, labels.classes[static_cast<std::size_t>(r)]),
                              std::numeric_limits<Scalar>::min());
    total -= std::log(p);
  }
  return total / n;
}

/// lambda * sum of squared weights (biases excluded).
template <typename Scalar>
Scalar l2_penalty(const Network<Scalar>& net) {
  Scalar total = 0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) total += net.weight(l).squaredNorm();
  return static_cast<Scalar>(net.spec().l2_lambda) * total;
}

/// Data loss plus weight penalty, evaluated without dropout.
template <typename Scalar>
Scalar objective(const Network<Scalar>& net, const Matrix<Scalar>& x, const Targets<Scalar>& targets) {
  return loss(predict(net, x), targets, net.spec().loss) + l2_penalty(net);
}

/// Propagates dE/d(logits) back through the net. With `with_l2`, each weight
/// gradient also gains the 2*lambda*W term of the penalty.
template <typename Scalar>
Gradients<Scalar> backward_from_logits(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                                       Matrix<Scalar> delta, bool with_l2) {
  if (cache.network_version != net.version())
    throw ContractError("forward cache is stale: parameters changed since the forward pass");
  if (cache.inputs.size() != net.num_layers() || delta.rows() != cache.output.rows() ||
      delta.cols() != cache.logits.cols())
    throw ContractError("forward cache does not match this network");

  Gradients<Scalar> grads(net.parameters().size());
  const Scalar two_lambda = static_cast<Scalar>(2.0 * net.spec().l2_lambda);
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    grads[2 * l].noalias() = cache.inputs[l].transpose() * delta;
    if (with_l2 && two_lambda != Scalar(0)) grads[2 * l] += two_lambda * net.weight(l);
    grads[2 * l + 1] = delta.colwise().sum();
    if (l == 0) break;
    Matrix<Scalar> upstream = delta * net.weight(l).transpose();
    const auto& z = cache.hidden_pre[l - 1];
    upstream.array() *= (z.array() > Scalar(0)).template cast<Scalar>();
    if (!cache.masks.empty()) upstream.array() *= cache.masks[l - 1].array();
    delta = std::move(upstream);
  }
  return grads;
}

/// Exact gradient of loss(forward(x), targets) + l2_penalty with respect to
/// every parameter, in parameter order.
template <typename Scalar>
Gradients<Scalar> backward(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                           const Targets<Scalar>& targets) {
  if (cache.loss != net.spec().loss) throw ContractError("forward cache was produced for another loss");
  detail::check_targets(cache.output, targets, cache.loss);
  const auto n = static_cast<Scalar>(cache.output.rows());
  Matrix<Scalar> delta;
  if (cache.loss == LossKind::mse) {
    const auto& y = std::get<Vector<Scalar>>(targets);
    delta = (Scalar(2) / n) * (cache.output.col(0) - y);
  } else {
    const auto& labels = std::get<LabelBatch>(targets);
    delta = cache.output;
    for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels.classes[static_cast<std::size_t>(r)]) -= 1;
    delta /= n;
  }
  auto grads = backward_from_logits(net, cache, std::move(delta), true);
  for (const auto& g : grads) detail::check_finite(g, "gradient");
  return grads;
}

}  // namespace lossreg::nn
