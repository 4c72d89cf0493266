#include "iso/nn/lifter.hpp"

#include "iso/common/error.hpp"

namespace iso::nn {

void LifterConfig::validate() const {
  if (joints < 2) throw ConfigError("lifter.joints must be >= 2");
  if (width < 1) throw ConfigError("lifter.width must be >= 1");
  if (shared_blocks < 0 || head_blocks < 0) throw ConfigError("block counts must be >= 0");
  if (!(mm_per_unit > 0.0)) throw ConfigError("lifter.mm_per_unit must be positive");
  if (!(hyper.slope > 0.0 && hyper.slope < 1.0)) throw ConfigError("leaky slope must lie in (0,1)");
  if (!(hyper.dropout >= 0.0 && hyper.dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
}

template <typename T>
Lifter<T>::Lifter(const LifterConfig& config) : config_(config) {
  config_.validate();
}

template <typename T>
typename Lifter<T>::HeadNet Lifter<T>::make_head(Rng* rng) const {
  const auto w = static_cast<std::size_t>(config_.width);
  HeadNet h;
  for (int i = 0; i < config_.head_blocks; ++i)
    h.blocks.push_back(rng ? ResidualBlock<T>(w, true, config_.hyper, *rng)
                           : ResidualBlock<T>(w, true, config_.hyper));
  const auto out = static_cast<std::size_t>(config_.output_dim());
  h.output = rng ? Linear<T>(w, out, *rng) : Linear<T>(w, out);
  return h;
}

template <typename T>
Lifter<T>::Lifter(const LifterConfig& config, std::uint64_t seed) : Lifter(config) {
  const auto w = static_cast<std::size_t>(config_.width);
  Rng rng(seed);
  input_ = Linear<T>(static_cast<std::size_t>(config_.input_dim()), w, rng);
  for (int i = 0; i < config_.shared_blocks; ++i) shared_.emplace_back(w, true, config_.hyper, rng);
  fsl_ = make_head(&rng);
  if (config_.ssl_head) {
    Rng ssl_rng(derive_seed(seed, 0x55u));
    ssl_ = make_head(&ssl_rng);
  }
}

template <typename T>
Lifter<T> Lifter<T>::zeros(const LifterConfig& config) {
  Lifter net(config);
  const auto w = static_cast<std::size_t>(net.config_.width);
  net.input_ = Linear<T>(static_cast<std::size_t>(net.config_.input_dim()), w);
  for (int i = 0; i < net.config_.shared_blocks; ++i) net.shared_.emplace_back(w, true, net.config_.hyper);
  net.fsl_ = net.make_head(nullptr);
  if (net.config_.ssl_head) net.ssl_ = net.make_head(nullptr);
  return net;
}

template <typename T>
ad::Var<T> Lifter<T>::features(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx) {
  const auto& xv = x.value();
  if (xv.rank() != 2 || xv.cols() != static_cast<std::size_t>(config_.input_dim()))
    throw ShapeError("lifter input must be B x " + std::to_string(config_.input_dim()) + ", got " +
                     ad::to_string(xv.shape()));
  ad::Var<T> h = ad::leaky_relu(input_.forward(tape, x), static_cast<T>(config_.hyper.slope));
  for (auto& b : shared_) h = b.forward(tape, h, ctx);
  return h;
}

template <typename T>
ad::Var<T> Lifter<T>::head(ad::Tape<T>& tape, ad::Var<T> h, Head which, const ForwardContext<T>& ctx) {
  if (which == Head::ssl && !config_.ssl_head) throw CompatibilityError("network has no SSL head");
  HeadNet& net = which == Head::fsl ? fsl_ : ssl_;
  for (auto& b : net.blocks) h = b.forward(tape, h, ctx);
  return net.output.forward(tape, h);
}

template <typename T>
ad::Var<T> Lifter<T>::forward(ad::Tape<T>& tape, ad::Var<T> x, Head which, const ForwardContext<T>& ctx) {
  return head(tape, features(tape, x, ctx), which, ctx);
}

template <typename T>
ad::Tensor<T> Lifter<T>::predict_mm(const ad::Tensor<T>& x, Head which) const {
  // An eval-mode forward pass without backward never writes to the network.
  auto& self = const_cast<Lifter&>(*this);
  ad::Tape<T> tape;
  ad::Var<T> out = self.forward(tape, tape.constant(x), which, ForwardContext<T>::eval());
  ad::Tensor<T> y = out.value();
  const auto s = static_cast<T>(config_.mm_per_unit);
  for (auto& v : y.data()) v *= s;
  return y;
}

template <typename T>
void Lifter<T>::set_trainable(unsigned groups, bool on) {
  visit_tensors(
      [on](const std::string&, ad::Tensor<T>& t, TensorRole role) {
        if (is_trainable(role)) t.set_requires_grad(on);
      },
      groups);
}

template class Lifter<float>;
template class Lifter<double>;

}  // namespace iso::nn
