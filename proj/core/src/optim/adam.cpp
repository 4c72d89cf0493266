#include "iso/optim/adam.hpp"

#include <cmath>

namespace iso::optim {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam.beta1 must lie in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam.beta2 must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("adam.eps must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("adam.clip_norm must be >= 0");
}

void LrSchedule::validate() const {
  if (!(initial > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("lr decay gamma must lie in (0,1]");
}

double LrSchedule::at(int epoch) const {
  if (epoch < 0) throw ConfigError("epoch must be >= 0");
  return initial * std::pow(gamma, epoch);
}

double lr_at(const LrSchedule& schedule, int epoch) { return schedule.at(epoch); }

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::uint64_t step, double lr, const AdamConfig& cfg) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw ShapeError("adam_update: buffer sizes disagree");
  if (step == 0) throw ConfigError("adam_update: step index starts at 1");
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  const T step_size = static_cast<T>(lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(cfg.eps);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = tb1 * m[i] + (T(1) - tb1) * g;
    v[i] = tb2 * v[i] + (T(1) - tb2) * g * g;
    param[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
  }
}

template <typename T>
Adam<T>::Adam(nn::ParamList<T> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  config_.validate();
  reset();
}

template <typename T>
void Adam<T>::reset() {
  m_.assign(params_.size(), {});
  v_.assign(params_.size(), {});
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].tensor->size(), T{0});
    v_[i].assign(params_[i].tensor->size(), T{0});
  }
  step_ = 0;
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.tensor->zero_grad();
}

template <typename T>
void Adam<T>::step(double lr) {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  ++step_;
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto& p : params_)
      for (T g : p.tensor->grad_view()) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  std::vector<T> scratch;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Tensor<T>& t = *params_[i].tensor;
    std::span<const T> g = t.grad_view();
    if (g.empty() || clip != 1.0) {
      scratch.assign(t.size(), T{0});
      for (std::size_t k = 0; k < g.size(); ++k) scratch[k] = static_cast<T>(g[k] * clip);
      g = scratch;
    }
    if (config_.sgd) {
      auto d = t.data();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] -= static_cast<T>(lr) * g[k];
    } else {
      adam_update<T>(t.data(), g, m_[i], v_[i], step_, lr, config_);
    }
  }
}

template <typename T>
std::vector<std::pair<std::string, ad::Tensor<T>>> Adam<T>::export_state() const {
  std::vector<std::pair<std::string, ad::Tensor<T>>> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& shape = params_[i].tensor->shape();
    out.emplace_back(params_[i].name + ".m", ad::Tensor<T>(shape, m_[i]));
    out.emplace_back(params_[i].name + ".v", ad::Tensor<T>(shape, v_[i]));
  }
  return out;
}

template <typename T>
void Adam<T>::import_state(const std::vector<std::pair<std::string, ad::Tensor<T>>>& state,
                           std::uint64_t steps) {
  auto lookup = [&](const std::string& name) -> const ad::Tensor<T>& {
    for (const auto& [n, t] : state)
      if (n == name) return t;
    throw CompatibilityError("optimizer state lacks '" + name + "'");
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& m = lookup(params_[i].name + ".m");
    const auto& v = lookup(params_[i].name + ".v");
    if (m.size() != m_[i].size() || v.size() != v_[i].size())
      throw CompatibilityError("optimizer state shape mismatch for '" + params_[i].name + "'");
    m_[i].assign(m.data().begin(), m.data().end());
    v_[i].assign(v.data().begin(), v.data().end());
  }
  step_ = steps;
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, std::uint64_t, double, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, std::uint64_t, double, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace iso::optim
