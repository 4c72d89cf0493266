#include "iso/nn/snapshot.hpp"

namespace iso::nn {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
std::uint64_t ParamSnapshot<T>::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [name, t] : entries_) h = fnv1a(t.data().data(), t.size() * sizeof(T), h);
  return h;
}

template class ParamSnapshot<float>;
template class ParamSnapshot<double>;

}  // namespace iso::nn
