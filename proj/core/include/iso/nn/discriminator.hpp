#pragma once

#include <cstdint>
#include <vector>

#include "iso/nn/layers.hpp"

namespace iso::nn {

struct DiscriminatorConfig {
  int joints = 16;
  int width = 1024;
  int blocks = 3;
  LayerHyper hyper;

  void validate() const;
};

/// Real/fake classifier over flattened 2D poses. Residual blocks carry no batchnorm.
template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed);
  static Discriminator zeros(const DiscriminatorConfig& config);

  const DiscriminatorConfig& config() const noexcept { return config_; }

  /// x: B x 2J  ->  B x 1 pre-sigmoid scores.
  ad::Var<T> logits(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx);
  /// Eval-mode probabilities, kept strictly inside (0, 1).
  ad::Tensor<T> scores(const ad::Tensor<T>& x) const;

  template <typename F>
  void visit_tensors(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit_tensors(F&& f) const {
    visit_impl(*this, f);
  }

  void set_trainable(bool on);

  template <typename U>
  Discriminator<U> cast() const;

 private:
  explicit Discriminator(const DiscriminatorConfig& config);

  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    Linear<T>::visit(self.input_, "disc/input", f);
    for (std::size_t i = 0; i < self.blocks_.size(); ++i)
      ResidualBlock<T>::visit(self.blocks_[i], "disc/block" + std::to_string(i), f);
    Linear<T>::visit(self.output_, "disc/output", f);
  }

  DiscriminatorConfig config_;
  Linear<T> input_;
  std::vector<ResidualBlock<T>> blocks_;
  Linear<T> output_;
};

template <typename T>
template <typename U>
Discriminator<U> Discriminator<T>::cast() const {
  Discriminator<U> out = Discriminator<U>::zeros(config_);
  std::vector<const ad::Tensor<T>*> from;
  visit_tensors([&](const std::string&, const ad::Tensor<T>& t, TensorRole) { from.push_back(&t); });
  std::size_t i = 0;
  out.visit_tensors([&](const std::string&, ad::Tensor<U>& t, TensorRole) {
    const auto s = from[i++]->data();
    std::copy(s.begin(), s.end(), t.data().begin());
  });
  return out;
}

extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace iso::nn
