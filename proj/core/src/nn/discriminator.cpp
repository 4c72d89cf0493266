#include "iso/nn/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iso::nn {

void DiscriminatorConfig::validate() const {
  if (joints < 2) throw ConfigError("disc.joints must be >= 2");
  if (width < 1) throw ConfigError("disc.width must be >= 1");
  if (blocks < 0) throw ConfigError("disc.blocks must be >= 0");
  if (!(hyper.slope > 0.0 && hyper.slope < 1.0)) throw ConfigError("leaky slope must lie in (0,1)");
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config) : config_(config) {
  config_.validate();
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config, std::uint64_t seed)
    : Discriminator(config) {
  const auto w = static_cast<std::size_t>(config_.width);
  Rng rng(seed);
  input_ = Linear<T>(static_cast<std::size_t>(2 * config_.joints), w, rng);
  for (int i = 0; i < config_.blocks; ++i) blocks_.emplace_back(w, false, config_.hyper, rng);
  output_ = Linear<T>(w, 1, rng);
}

template <typename T>
Discriminator<T> Discriminator<T>::zeros(const DiscriminatorConfig& config) {
  Discriminator d(config);
  const auto w = static_cast<std::size_t>(d.config_.width);
  d.input_ = Linear<T>(static_cast<std::size_t>(2 * d.config_.joints), w);
  for (int i = 0; i < d.config_.blocks; ++i) d.blocks_.emplace_back(w, false, d.config_.hyper);
  d.output_ = Linear<T>(w, 1);
  return d;
}

template <typename T>
ad::Var<T> Discriminator<T>::logits(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx) {
  const auto& xv = x.value();
  if (xv.rank() != 2 || xv.cols() != static_cast<std::size_t>(2 * config_.joints))
    throw ShapeError("discriminator input must be B x " + std::to_string(2 * config_.joints) +
                     ", got " + ad::to_string(xv.shape()));
  ad::Var<T> h = ad::leaky_relu(input_.forward(tape, x), static_cast<T>(config_.hyper.slope));
  for (auto& b : blocks_) h = b.forward(tape, h, ctx);
  return output_.forward(tape, h);
}

template <typename T>
ad::Tensor<T> Discriminator<T>::scores(const ad::Tensor<T>& x) const {
  auto& self = const_cast<Discriminator&>(*this);
  ad::Tape<T> tape;
  ad::Tensor<T> out = self.logits(tape, tape.constant(x), ForwardContext<T>::eval()).value();
  constexpr T lo = std::numeric_limits<T>::epsilon();
  for (auto& v : out.data()) {
    const T s = v >= 0 ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
    v = std::clamp(s, lo, T(1) - lo);
  }
  return out;
}

template <typename T>
void Discriminator<T>::set_trainable(bool on) {
  visit_tensors([on](const std::string&, ad::Tensor<T>& t, TensorRole role) {
    if (is_trainable(role)) t.set_requires_grad(on);
  });
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace iso::nn
