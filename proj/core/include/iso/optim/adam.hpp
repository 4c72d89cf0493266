#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iso/nn/layers.hpp"

namespace iso::optim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  /// Plain gradient descent instead of Adam.
  bool sgd = false;

  void validate() const;
};

/// Exponential decay: initial * gamma^epoch.
struct LrSchedule {
  double initial = 2e-4;
  double gamma = 0.96;

  void validate() const;
  double at(int epoch) const;
};

double lr_at(const LrSchedule& schedule, int epoch);

/// One bias-corrected Adam update of a single tensor. `step` is the 1-based step index.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::uint64_t step, double lr, const AdamConfig& cfg);

/// Adam over a fixed list of parameter tensors; reads and clears their gradients.
template <typename T>
class Adam {
 public:
  Adam(nn::ParamList<T> params, AdamConfig config = {});

  /// Applies one update with learning rate `lr` using each tensor's grad buffer.
  /// Tensors without a gradient are treated as having a zero gradient.
  void step(double lr);
  void zero_grad();
  /// Forgets moments and the step counter.
  void reset();

  std::uint64_t steps() const noexcept { return step_; }
  const nn::ParamList<T>& params() const noexcept { return params_; }
  const AdamConfig& config() const noexcept { return config_; }

  /// Moments as named tensors ("<param>.m", "<param>.v").
  std::vector<std::pair<std::string, ad::Tensor<T>>> export_state() const;
  void import_state(const std::vector<std::pair<std::string, ad::Tensor<T>>>& state, std::uint64_t steps);

 private:
  nn::ParamList<T> params_;
  AdamConfig config_;
  std::vector<std::vector<T>> m_, v_;
  std::uint64_t step_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace iso::optim
