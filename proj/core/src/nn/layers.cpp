#include "iso/nn/layers.hpp"

#include <cmath>

namespace iso::nn {

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out)
    : weight(ad::Tensor<T>::matrix(in, out)), bias(ad::Shape{out}, T{0}) {
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, Rng& rng) : Linear(in, out) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(in));
  for (auto& w : weight.data()) w = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T>
ad::Var<T> Linear<T>::forward(ad::Tape<T>& tape, ad::Var<T> x) {
  return ad::linear(x, tape.leaf(weight), tape.leaf(bias));
}

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t width, const LayerHyper& hyper)
    : gamma(ad::Shape{width}, T{1}), beta(ad::Shape{width}, T{0}), state(width) {
  gamma.set_requires_grad(true);
  beta.set_requires_grad(true);
  state.momentum = static_cast<T>(hyper.bn_momentum);
  state.eps = static_cast<T>(hyper.bn_eps);
}

template <typename T>
ad::Var<T> BatchNorm<T>::forward(ad::Tape<T>& tape, ad::Var<T> x, ad::BatchNormMode mode) {
  return ad::batchnorm(x, tape.leaf(gamma), tape.leaf(beta), state, mode);
}

template <typename T>
ResidualBlock<T>::ResidualBlock(std::size_t width, bool with_bn, const LayerHyper& hyper)
    : fc1_(width, width), fc2_(width, width),
      slope_(static_cast<T>(hyper.slope)), dropout_(static_cast<T>(hyper.dropout)) {
  if (with_bn) {
    bn1_.emplace(width, hyper);
    bn2_.emplace(width, hyper);
  }
}

template <typename T>
ResidualBlock<T>::ResidualBlock(std::size_t width, bool with_bn, const LayerHyper& hyper, Rng& rng)
    : fc1_(width, width, rng), fc2_(width, width, rng),
      slope_(static_cast<T>(hyper.slope)), dropout_(static_cast<T>(hyper.dropout)) {
  if (with_bn) {
    bn1_.emplace(width, hyper);
    bn2_.emplace(width, hyper);
  }
}

template <typename T>
ad::Var<T> ResidualBlock<T>::stage(ad::Tape<T>& tape, ad::Var<T> x, Linear<T>& fc,
                                   std::optional<BatchNorm<T>>& bn, const ForwardContext<T>& ctx) {
  ad::Var<T> y = fc.forward(tape, x);
  if (bn) y = bn->forward(tape, y, ctx.bn);
  y = ad::leaky_relu(y, slope_);
  if (ctx.dropout) {
    if (!ctx.rng) throw ConfigError("dropout in train mode needs a generator");
    y = ad::dropout(y, dropout_, true, *ctx.rng);
  }
  return y;
}

template <typename T>
ad::Var<T> ResidualBlock<T>::forward(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx) {
  ad::Var<T> y = stage(tape, x, fc1_, bn1_, ctx);
  y = stage(tape, y, fc2_, bn2_, ctx);
  return ad::add(x, y);
}

template class Linear<float>;
template class Linear<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace iso::nn
