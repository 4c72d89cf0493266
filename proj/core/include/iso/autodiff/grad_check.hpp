#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iso/autodiff/tape.hpp"

namespace iso::ad {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor = nullptr;
};

/// Builds a fresh graph on the given tape and returns the scalar loss.
template <typename T>
using LossBuilder = std::function<Var<T>(Tape<T>&)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  bool compared = true;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> entries;

  const GradCheckEntry* find(const std::string& name) const;
};

struct GradCheckOptions {
  double step = 1e-6;
  /// Elements compared per tensor; 0 compares all. Larger tensors use an even stride.
  std::size_t max_per_tensor = 0;
  /// Tensors listed here are reported (analytic magnitude) but excluded from comparison.
  std::vector<std::string> report_only;
};

/// Compares reverse-mode gradients against central differences of the same
/// function. Returns max |a - n| / max(|a|, |n|, 1e-8).
template <typename T>
GradCheckResult grad_check(const LossBuilder<T>& fn, std::span<const NamedTensor<T>> params,
                           const GradCheckOptions& options = {});

/// Analytic gradients from the 32-bit engine against central differences of a
/// 64-bit twin of the same function (identical parameter names and order).
GradCheckResult grad_check_mixed(const LossBuilder<float>& fn32,
                                 std::span<const NamedTensor<float>> params32,
                                 const LossBuilder<double>& fn64,
                                 std::span<const NamedTensor<double>> params64,
                                 const GradCheckOptions& options = {});

}  // namespace iso::ad
