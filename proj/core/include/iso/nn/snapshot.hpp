#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iso/nn/layers.hpp"

namespace iso::nn {

/// Owned copy of every tensor of a network (parameters and running statistics).
template <typename T>
class ParamSnapshot {
 public:
  ParamSnapshot() = default;

  template <typename Net>
  static ParamSnapshot capture(const Net& net) {
    ParamSnapshot s;
    net.visit_tensors([&](const std::string& name, const ad::Tensor<T>& t, TensorRole) {
      s.entries_.emplace_back(name, ad::Tensor<T>(t.shape(), t.storage()));
    });
    return s;
  }

  /// Overwrites values in place; names and shapes must match exactly.
  template <typename Net>
  void restore(Net& net) const {
    std::size_t i = 0;
    net.visit_tensors([&](const std::string& name, ad::Tensor<T>& t, TensorRole) {
      if (i >= entries_.size() || entries_[i].first != name || entries_[i].second.shape() != t.shape())
        throw CompatibilityError("snapshot does not match network at '" + name + "'");
      const auto src = entries_[i++].second.data();
      std::copy(src.begin(), src.end(), t.data().begin());
    });
    if (i != entries_.size()) throw CompatibilityError("snapshot has more tensors than the network");
  }

  const std::vector<std::pair<std::string, ad::Tensor<T>>>& entries() const noexcept { return entries_; }
  std::uint64_t hash() const;

 private:
  std::vector<std::pair<std::string, ad::Tensor<T>>> entries_;
};

template <typename T, typename Net>
ParamSnapshot<T> snapshot_params(const Net& net) {
  return ParamSnapshot<T>::template capture<Net>(net);
}

template <typename T, typename Net>
void restore_params(Net& net, const ParamSnapshot<T>& snap) {
  snap.restore(net);
}

/// FNV-1a over raw bytes; cheap fingerprint for state-change checks.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull);

/// Fingerprint of every tensor value of a network, in visit order.
template <typename T, typename Net>
std::uint64_t params_hash(const Net& net) {
  std::uint64_t h = 1469598103934665603ull;
  net.visit_tensors([&](const std::string&, const ad::Tensor<T>& t, TensorRole) {
    h = fnv1a(t.data().data(), t.size() * sizeof(T), h);
  });
  return h;
}

extern template class ParamSnapshot<float>;
extern template class ParamSnapshot<double>;

}  // namespace iso::nn
