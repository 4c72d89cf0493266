#pragma once

#include <cstdint>
#include <vector>

#include "iso/nn/layers.hpp"

namespace iso::nn {

/// Architecture of the two-headed lifting network.
struct LifterConfig {
  int joints = 16;
  int width = 1024;
  /// Residual blocks in the shared extractor (the split point between shared and head layers).
  int shared_blocks = 3;
  int head_blocks = 1;
  bool ssl_head = true;
  /// Millimetres per network output unit. Losses see native units, predictions are in mm.
  double mm_per_unit = 1000.0;
  LayerHyper hyper;

  void validate() const;
  int input_dim() const { return 2 * joints; }
  int output_dim() const { return 3 * joints; }
};

enum class Head { fsl, ssl };

/// Parameter groups; bit flags so that several can be selected at once.
enum Group : unsigned {
  kShared = 1u,
  kFslHead = 2u,
  kSslHead = 4u,
  kAllGroups = 7u,
};

template <typename T>
class Lifter {
 public:
  /// Weights drawn from `seed`; the SSL head uses a derived stream so that the
  /// shared extractor and FSL head do not depend on whether it exists.
  Lifter(const LifterConfig& config, std::uint64_t seed);
  /// All-zero weights; used as a target for loading and casting.
  static Lifter zeros(const LifterConfig& config);

  const LifterConfig& config() const noexcept { return config_; }
  bool has_ssl_head() const noexcept { return config_.ssl_head; }

  /// x: B x 2J  ->  B x width
  ad::Var<T> features(ad::Tape<T>& tape, ad::Var<T> x, const ForwardContext<T>& ctx);
  /// h: B x width  ->  B x 3J (native units)
  ad::Var<T> head(ad::Tape<T>& tape, ad::Var<T> h, Head which, const ForwardContext<T>& ctx);
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> x, Head which, const ForwardContext<T>& ctx);

  /// Eval-mode forward in millimetres. Parameters are only read.
  ad::Tensor<T> predict_mm(const ad::Tensor<T>& x, Head which = Head::fsl) const;

  /// Calls f(name, tensor, role) for every tensor of the selected groups.
  template <typename F>
  void visit_tensors(F&& f, unsigned groups = kAllGroups) {
    visit_impl(*this, f, groups);
  }
  template <typename F>
  void visit_tensors(F&& f, unsigned groups = kAllGroups) const {
    visit_impl(*this, f, groups);
  }

  /// Toggles requires_grad on every trainable tensor of the selected groups.
  void set_trainable(unsigned groups, bool on);

  template <typename U>
  Lifter<U> cast() const;

 private:
  struct HeadNet {
    std::vector<ResidualBlock<T>> blocks;
    Linear<T> output;
  };

  explicit Lifter(const LifterConfig& config);
  HeadNet make_head(Rng* rng) const;

  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f, unsigned groups) {
    if (groups & kShared) {
      Linear<T>::visit(self.input_, "shared/input", f);
      for (std::size_t i = 0; i < self.shared_.size(); ++i)
        ResidualBlock<T>::visit(self.shared_[i], "shared/block" + std::to_string(i), f);
    }
    auto visit_head = [&](auto& h, const std::string& prefix) {
      for (std::size_t i = 0; i < h.blocks.size(); ++i)
        ResidualBlock<T>::visit(h.blocks[i], prefix + "/block" + std::to_string(i), f);
      Linear<T>::visit(h.output, prefix + "/output", f);
    };
    if (groups & kFslHead) visit_head(self.fsl_, "fsl_head");
    if ((groups & kSslHead) && self.config_.ssl_head) visit_head(self.ssl_, "ssl_head");
  }

  LifterConfig config_;
  Linear<T> input_;
  std::vector<ResidualBlock<T>> shared_;
  HeadNet fsl_;
  HeadNet ssl_;
};

/// Copies every tensor value of `src` into `dst` by visit order. Shapes must agree.
template <typename T, typename U, typename NetSrc, typename NetDst>
void copy_tensors(const NetSrc& src, NetDst& dst) {
  std::vector<const ad::Tensor<T>*> from;
  src.visit_tensors([&](const std::string&, const ad::Tensor<T>& t, TensorRole) { from.push_back(&t); });
  std::size_t i = 0;
  dst.visit_tensors([&](const std::string& name, ad::Tensor<U>& t, TensorRole) {
    if (i >= from.size() || from[i]->shape() != t.shape())
      throw ShapeError("tensor layout mismatch at '" + name + "'");
    const auto s = from[i++]->data();
    std::copy(s.begin(), s.end(), t.data().begin());
  });
  if (i != from.size()) throw ShapeError("tensor count mismatch while copying networks");
}

template <typename T>
template <typename U>
Lifter<U> Lifter<T>::cast() const {
  Lifter<U> out = Lifter<U>::zeros(config_);
  copy_tensors<T, U>(*this, out);
  return out;
}

extern template class Lifter<float>;
extern template class Lifter<double>;

}  // namespace iso::nn
