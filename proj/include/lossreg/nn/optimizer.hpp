#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "lossreg/nn/network.hpp"

namespace lossreg::nn {

enum class OptimizerKind { sgd_momentum, adam };

template <typename Scalar = double>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t steps = 0;
  // velocity (sgd) or first moment (adam)
  std::vector<Matrix<Scalar>> first;
  // second moment (adam only)
  std::vector<Matrix<Scalar>> second;

  static OptimizerState sgd(double lr, double momentum = 0.9) {
    OptimizerState s;
    s.kind = OptimizerKind::sgd_momentum;
    s.learning_rate = lr;
    s.momentum = momentum;
    return s;
  }
  static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    OptimizerState s;
    s.kind = OptimizerKind::adam;
    s.learning_rate = lr;
    s.adam_beta1 = beta1;
    s.adam_beta2 = beta2;
    s.adam_eps = eps;
    return s;
  }
};

/// One update of `params` in place. Moment buffers are created (zeroed) on the
/// first call and must stay shape-congruent afterwards.
///   sgd:  v <- mu v + g;  p <- p - lr v
///   adam: bias-corrected first/second moments
template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, std::vector<Matrix<Scalar>>& params,
                    const Gradients<Scalar>& grads) {
  if (params.size() != grads.size()) throw ShapeError("parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
      throw ShapeError(fmt::format("gradient {} shape does not match its parameter", i));

  auto init = [&](std::vector<Matrix<Scalar>>& buffers) {
    if (buffers.empty()) {
      buffers.reserve(params.size());
      for (const auto& p : params) buffers.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
    } else if (buffers.size() != params.size()) {
      throw ShapeError("optimizer buffers were built for a different parameter set");
    }
  };
  init(state.first);
  ++state.steps;
  const auto lr = static_cast<Scalar>(state.learning_rate);

  if (state.kind == OptimizerKind::sgd_momentum) {
    const auto mu = static_cast<Scalar>(state.momentum);
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first[i] = mu * state.first[i] + grads[i];
      params[i] -= lr * state.first[i];
    }
    return;
  }

  init(state.second);
  const auto b1 = static_cast<Scalar>(state.adam_beta1);
  const auto b2 = static_cast<Scalar>(state.adam_beta2);
  const auto eps = static_cast<Scalar>(state.adam_eps);
  const auto t = static_cast<Scalar>(state.steps);
  const Scalar c1 = Scalar(1) - std::pow(b1, t);
  const Scalar c2 = Scalar(1) - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.first[i] = b1 * state.first[i] + (Scalar(1) - b1) * grads[i];
    state.second[i] = b2 * state.second[i] + (Scalar(1) - b2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -=
        lr * (state.first[i].array() / c1) / ((state.second[i].array() / c2).sqrt() + eps);
  }
}

template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, Network<Scalar>& net, const Gradients<Scalar>& grads) {
  optimizer_step(state, net.mutable_parameters(), grads);
}

inline constexpr std::array<std::size_t, 3> kDecayEpochs = {40, 60, 80};

/// Step decay: base_lr * 0.1 per threshold in {40, 60, 80} already reached.
inline double lr_at_epoch(double base_lr, std::size_t epoch) {
  double lr = base_lr;
  for (auto threshold : kDecayEpochs)
    if (epoch >= threshold) lr *= 0.1;
  return lr;
}

}  // namespace lossreg::nn
