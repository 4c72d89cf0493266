#include "iso/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace iso::ad {
namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t max_count) {
  std::vector<std::size_t> idx;
  if (max_count == 0 || n <= max_count) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  const double stride = static_cast<double>(n) / static_cast<double>(max_count);
  for (std::size_t k = 0; k < max_count; ++k) idx.push_back(static_cast<std::size_t>(k * stride));
  return idx;
}

double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

template <typename T>
double evaluate(const LossBuilder<T>& fn) {
  Tape<T> tape;
  return static_cast<double>(fn(tape).value().item());
}

template <typename T>
std::vector<std::vector<double>> analytic_gradients(const LossBuilder<T>& fn,
                                                    std::span<const NamedTensor<T>> params) {
  for (const auto& p : params) p.tensor->clear_grad();
  {
    Tape<T> tape;
    Var<T> loss = fn(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> out;
  for (const auto& p : params) {
    std::vector<double> g(p.tensor->size(), 0.0);
    const auto view = p.tensor->grad_view();
    for (std::size_t i = 0; i < view.size(); ++i) g[i] = static_cast<double>(view[i]);
    out.push_back(std::move(g));
  }
  return out;
}

template <typename T>
double numeric_gradient(const LossBuilder<T>& fn, Tensor<T>& t, std::size_t i, double step) {
  const T saved = t[i];
  t[i] = static_cast<T>(static_cast<double>(saved) + step);
  const double up = evaluate(fn);
  t[i] = static_cast<T>(static_cast<double>(saved) - step);
  const double down = evaluate(fn);
  t[i] = saved;
  return (up - down) / (2.0 * step);
}

bool is_report_only(const GradCheckOptions& o, const std::string& name) {
  return std::find(o.report_only.begin(), o.report_only.end(), name) != o.report_only.end();
}

template <typename TA, typename TN>
GradCheckResult compare(const std::vector<std::vector<double>>& analytic,
                        std::span<const NamedTensor<TA>> names, const LossBuilder<TN>& fn_numeric,
                        std::span<const NamedTensor<TN>> params_numeric, const GradCheckOptions& o) {
  GradCheckResult result;
  for (std::size_t p = 0; p < names.size(); ++p) {
    GradCheckEntry e;
    e.name = names[p].name;
    for (double v : analytic[p]) e.max_abs_analytic = std::max(e.max_abs_analytic, std::abs(v));
    e.compared = !is_report_only(o, e.name);
    if (e.compared) {
      for (std::size_t i : sample_indices(analytic[p].size(), o.max_per_tensor)) {
        const double num = numeric_gradient(fn_numeric, *params_numeric[p].tensor, i, o.step);
        e.max_rel_error = std::max(e.max_rel_error, rel_error(analytic[p][i], num));
      }
      result.max_rel_error = std::max(result.max_rel_error, e.max_rel_error);
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace

const GradCheckEntry* GradCheckResult::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

template <typename T>
GradCheckResult grad_check(const LossBuilder<T>& fn, std::span<const NamedTensor<T>> params,
                           const GradCheckOptions& options) {
  const auto analytic = analytic_gradients(fn, params);
  return compare<T, T>(analytic, params, fn, params, options);
}

GradCheckResult grad_check_mixed(const LossBuilder<float>& fn32,
                                 std::span<const NamedTensor<float>> params32,
                                 const LossBuilder<double>& fn64,
                                 std::span<const NamedTensor<double>> params64,
                                 const GradCheckOptions& options) {
  if (params32.size() != params64.size())
    throw ConfigError("grad_check_mixed: parameter lists differ in length");
  for (std::size_t i = 0; i < params32.size(); ++i)
    if (params32[i].name != params64[i].name || params32[i].tensor->shape() != params64[i].tensor->shape())
      throw ConfigError("grad_check_mixed: parameter '" + params32[i].name + "' has no 64-bit twin");
  const auto analytic = analytic_gradients(fn32, params32);
  return compare<float, double>(analytic, params32, fn64, params64, options);
}

template GradCheckResult grad_check(const LossBuilder<float>&, std::span<const NamedTensor<float>>,
                                    const GradCheckOptions&);
template GradCheckResult grad_check(const LossBuilder<double>&, std::span<const NamedTensor<double>>,
                                    const GradCheckOptions&);

}  // namespace iso::ad
