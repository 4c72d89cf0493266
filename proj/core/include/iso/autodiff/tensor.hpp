#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iso/common/error.hpp"

namespace iso::ad {

/// Dimensions of a tensor of rank 0, 1 or 2.
using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& s);

/// Cache-line aligned allocator. Vectorized kernels peel unaligned heads, so
/// buffers at arbitrary addresses would make float reductions depend on the heap.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

/// Dense row-major tensor holding values and an optional gradient buffer.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : shape_{0}, data_() {}
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {
    check_rank();
  }
  Tensor(Shape shape, std::span<const T> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_rank();
    if (element_count(shape_) != data_.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
  }

  Tensor(Shape shape, const std::vector<T>& data) : Tensor(std::move(shape), std::span<const T>(data)) {}
  Tensor(Shape shape, std::initializer_list<T> data)
      : Tensor(std::move(shape), std::span<const T>(data.begin(), data.size())) {}

  static Tensor scalar(T v) { return Tensor(Shape{}, {v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) {
    return Tensor(Shape{rows, cols}, fill);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  /// Leading dimension for rank 2, 1 otherwise.
  std::size_t rows() const noexcept { return shape_.size() == 2 ? shape_[0] : 1; }
  /// Trailing dimension for rank >= 1.
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  /// Copy of the values.
  std::vector<T> storage() const { return {data_.begin(), data_.end()}; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
  T item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
    return data_[0];
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) noexcept { requires_grad_ = on; }

  bool has_grad() const noexcept { return !grad_.empty(); }
  /// Gradient buffer, allocated as zeros on first access.
  std::span<T> grad() {
    if (grad_.empty()) grad_.assign(data_.size(), T{0});
    return grad_;
  }
  std::span<const T> grad_view() const noexcept { return grad_; }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), T{0}); }
  void clear_grad() { grad_.clear(); }

  void reshape(Shape s) {
    if (element_count(s) != data_.size())
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(s));
    shape_ = std::move(s);
    check_rank();
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    Tensor<U> t(shape_, out);
    t.set_requires_grad(requires_grad_);
    return t;
  }

  /// Values equal bit-for-bit (gradients are not compared).
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_rank() const {
    if (shape_.size() > 2) throw ShapeError("tensors are limited to rank 2, got " + to_string(shape_));
  }

  Shape shape_;
  Buffer<T> data_;
  Buffer<T> grad_;
  bool requires_grad_ = false;
};

inline std::string to_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace iso::ad
