#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iso/autodiff/ops.hpp"
#include "iso/common/rng.hpp"

namespace iso::nn {

enum class TensorRole { weight, bias, bn_affine, bn_stat };

inline bool is_trainable(TensorRole r) { return r != TensorRole::bn_stat; }

template <typename T>
struct ParamRef {
  std::string name;
  ad::Tensor<T>* tensor = nullptr;
  TensorRole role = TensorRole::weight;
};

template <typename T>
struct ConstParamRef {
  std::string name;
  const ad::Tensor<T>* tensor = nullptr;
  TensorRole role = TensorRole::weight;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;
template <typename T>
using ConstParamList = std::vector<ConstParamRef<T>>;

/// Hyper-parameters shared by every residual block of a network.
struct LayerHyper {
  double slope = 0.01;
  double dropout = 0.5;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
};

/// How a forward pass treats batchnorm and dropout.
template <typename T>
struct ForwardContext {
  ad::BatchNormMode bn = ad::BatchNormMode::eval;
  bool dropout = false;
  Rng* rng = nullptr;

  static ForwardContext train(Rng& r) { return {ad::BatchNormMode::train, true, &r}; }
  static ForwardContext eval() { return {ad::BatchNormMode::eval, false, nullptr}; }
  /// Inference-stage optimization: dropout off, batchnorm frozen unless told otherwise.
  static ForwardContext adapt(bool freeze_bn = true) {
    return {freeze_bn ? ad::BatchNormMode::frozen : ad::BatchNormMode::eval, false, nullptr};
  }
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  /// Zero-mean normal weights with variance 2 / fan_in, zero bias.
  Linear(std::size_t in, std::size_t out, Rng& rng);
  Linear(std::size_t in, std::size_t out);

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> x);

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".weight", self.weight, TensorRole::weight);
    f(prefix + ".bias", self.bias, TensorRole::bias);
  }

  ad::Tensor<T> weight;
  ad::Tensor<T> bias;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t width, const LayerHyper& hyper);

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> x, ad::BatchNormMode mode);

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".gamma", self.gamma, TensorRole::bn_affine);
    f(prefix + ".beta", self.beta, TensorRole::bn_affine);
    f(prefix + ".running_mean", self.state.running_mean, TensorRole::bn_stat);
    f(prefix + ".running_var", self.state.running_var, TensorRole::bn_stat);
  }

  ad::Tensor<T> gamma;
  ad::Tensor<T> beta;
  ad::BatchNormState<T> state;
};

/// Two (linear, batchnorm, leaky ReLU, dropout) stages plus an identity skip.
/// Without batchnorm the block holds no normalization state.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(std::size_t width, bool with_bn, const LayerHyper& hyper, Rng& rng);
  ResidualBlock(std::size_t width, bool with_bn, const LayerHyper& hyper);

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx);

  bool has_batchnorm() const noexcept { return bn1_.has_value(); }

  template <typename Self, typename F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    Linear<T>::visit(self.fc1_, prefix + "/fc1", f);
    if (self.bn1_) BatchNorm<T>::visit(*self.bn1_, prefix + "/bn1", f);
    Linear<T>::visit(self.fc2_, prefix + "/fc2", f);
    if (self.bn2_) BatchNorm<T>::visit(*self.bn2_, prefix + "/bn2", f);
  }

 private:
  ad::Var<T> stage(ad::Tape<T>& tape, ad::Var<T> x, Linear<T>& fc, std::optional<BatchNorm<T>>& bn,
                   const ForwardContext<T>& ctx);

  Linear<T> fc1_, fc2_;
  std::optional<BatchNorm<T>> bn1_, bn2_;
  T slope_ = T(0.01);
  T dropout_ = T(0.5);
};

/// Gathers every tensor of a network into a flat list, optionally filtered by role.
template <typename T, typename Net>
ParamList<T> collect_params(Net& net, bool trainable_only = false) {
  ParamList<T> out;
  net.visit_tensors([&](const std::string& name, ad::Tensor<T>& t, TensorRole role) {
    if (!trainable_only || is_trainable(role)) out.push_back({name, &t, role});
  });
  return out;
}

template <typename T, typename Net>
ConstParamList<T> collect_params_const(const Net& net) {
  ConstParamList<T> out;
  net.visit_tensors([&](const std::string& name, const ad::Tensor<T>& t, TensorRole role) {
    out.push_back({name, &t, role});
  });
  return out;
}

/// Number of trainable scalars (weights, biases, batchnorm affine).
template <typename T, typename Net>
std::size_t parameter_count(const Net& net) {
  std::size_t n = 0;
  net.visit_tensors([&](const std::string&, const ad::Tensor<T>& t, TensorRole role) {
    if (is_trainable(role)) n += t.size();
  });
  return n;
}

}  // namespace iso::nn
