#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "iso/autodiff/tensor.hpp"

namespace iso::ad {

template <typename T>
class Tape;

/// Handle to a node recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape->requires_grad(*this); }
};

/// Records primitive operations in execution order and replays them backwards.
///
/// Leaves registered with `leaf()` refer to externally owned tensors (network
/// parameters); their gradients accumulate into the tensor's own grad buffer,
/// so calling backward() twice without zeroing doubles them. Intermediate
/// gradients live on the tape and are reset at the start of each backward().
template <typename T>
class Tape {
 public:
  /// Receives d(loss)/d(output) and scatters it into the inputs via grad_of().
  using BackwardFn = std::function<void(Tape&, std::span<const T>)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  Var<T> leaf(Tensor<T>& external) {
    Node n;
    n.external = &external;
    n.requires_grad = external.requires_grad();
    return push_node(std::move(n));
  }

  Var<T> constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    return push_node(std::move(n));
  }

  /// Records an op output. `backward` is dropped when no input needs a gradient.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(backward);
    return push_node(std::move(n));
  }

  const Tensor<T>& value(Var<T> v) const {
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.owned;
  }
  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

  /// Gradient accumulator for `v`; valid only inside a backward pass.
  std::span<T> grad_of(Var<T> v) {
    Node& n = nodes_[v.id];
    if (n.external) return n.external->grad();
    if (n.grad.empty()) n.grad.assign(n.owned.size(), T{0});
    return n.grad;
  }

  void backward(Var<T> loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    Tensor<T>* external = nullptr;
    bool requires_grad = false;
    Buffer<T> grad;
    BackwardFn backward;
  };

  Var<T> push_node(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace iso::ad
