#pragma once

// Differentiable primitives over the tape. Every op validates shapes eagerly and
// records a closure computing exact input gradients.

#include "iso/autodiff/tape.hpp"
#include "iso/common/rng.hpp"

namespace iso::ad {

enum class BatchNormMode {
  train,   ///< batch statistics; running statistics updated
  eval,    ///< running statistics; gradients reach gamma and beta
  frozen,  ///< running statistics; no gradient into gamma, beta or statistics
};

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(std::size_t n = 0)
      : running_mean(Shape{n}, T{0}), running_var(Shape{n}, T{1}) {}
};

/// x[B,n] * weight[n,m] + bias[m]
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);
template <typename T>
Var<T> matmul(Var<T> x, Var<T> weight);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
/// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope);
template <typename T>
Var<T> sigmoid(Var<T> x);
template <typename T>
Var<T> log(Var<T> x);
/// log(sigmoid(x)), stable for large |x|.
template <typename T>
Var<T> log_sigmoid(Var<T> x);

/// Inverted dropout. Identity when `train` is false or p == 0.
template <typename T>
Var<T> dropout(Var<T> x, T p, bool train, Rng& rng);

template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormState<T>& state, BatchNormMode mode);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
template <typename T>
Var<T> sum_squares(Var<T> x);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
/// Each row of x[B,n] repeated k times consecutively: out[b*k + i] = x[b].
template <typename T>
Var<T> repeat_rows(Var<T> x, std::size_t k);

/// Gradient-free copy of v's value as a new constant on the same tape.
template <typename T>
Var<T> detach(Var<T> v) {
  return v.tape->constant(v.value());
}

}  // namespace iso::ad
