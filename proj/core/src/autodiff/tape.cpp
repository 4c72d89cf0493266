#include "iso/autodiff/tape.hpp"

namespace iso::ad {

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ConfigError("backward: loss belongs to a different tape");
  const Tensor<T>& lv = value(loss);
  if (lv.size() != 1)
    throw ConfigError("backward: loss must be a scalar node, got shape " + to_string(lv.shape()));
  for (Node& n : nodes_) n.grad.clear();
  if (!nodes_[loss.id].requires_grad) return;

  grad_of(loss)[0] += T{1};
  for (std::int64_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backward || n.grad.empty()) continue;
    // Move out so the callee may grow other nodes' buffers without invalidating the span.
    Buffer<T> g = std::move(n.grad);
    n.backward(*this, std::span<const T>(g));
    n.grad = std::move(g);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace iso::ad
