#pragma once

// Checks that training on disturbed targets y + eps shifts the MSE gradient by
// exactly -(2/N) sum_i eps_i * d(yhat_i)/d(theta).

#include <algorithm>

#include "lossreg/nn/network.hpp"

namespace lossreg::nn {

/// d(yhat_i)/d(theta) for one sample of a cached forward pass.
template <typename Scalar>
Gradients<Scalar> prediction_jacobian_row(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                                          Eigen::Index sample) {
  Matrix<Scalar> seed = Matrix<Scalar>::Zero(cache.output.rows(), 1);
  seed(sample, 0) = Scalar(1);
  return backward_from_logits(net, cache, std::move(seed), false);
}

/// Largest elementwise gap between the gradient of the disturbed loss computed
/// directly and the same gradient assembled from the clean gradient plus the
/// per-sample noise correction. Evaluated without dropout.
template <typename Scalar>
Scalar verify_gradient_identity(const Network<Scalar>& net, const Matrix<Scalar>& x, const Vector<Scalar>& y,
                                const Vector<Scalar>& noise) {
  if (net.spec().loss != LossKind::mse)
    throw UnsupportedError("gradient identity is defined for mse networks only");
  if (noise.size() != y.size()) throw ShapeError("noise and target lengths differ");

  const auto cache = forward(net, x, false);
  const Vector<Scalar> disturbed = y + noise;
  const auto direct = backward(net, cache, Targets<Scalar>{disturbed});
  auto assembled = backward(net, cache, Targets<Scalar>{y});

  const auto n = static_cast<Scalar>(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (noise(i) == Scalar(0)) continue;
    const auto jac = prediction_jacobian_row(net, cache, i);
    const Scalar coeff = Scalar(2) / n * noise(i);
    for (std::size_t k = 0; k < assembled.size(); ++k) assembled[k] -= coeff * jac[k];
  }

  Scalar worst = 0;
  for (std::size_t k = 0; k < assembled.size(); ++k)
    worst = std::max(worst, (direct[k] - assembled[k]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace lossreg::nn
