#include "iso/autodiff/ops.hpp"

#include <cmath>

#include <Eigen/Core>

namespace iso::ad {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
CMapMat<T> as_mat(const Tensor<T>& t) {
  return CMapMat<T>(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
MapMat<T> as_mat(std::span<T> s, std::size_t rows, std::size_t cols) {
  return MapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
CMapMat<T> as_mat(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return CMapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

template <typename T>
void same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape != b.tape) throw ConfigError(std::string(op) + ": operands recorded on different tapes");
}

template <typename T>
void require_matrix(const Tensor<T>& t, const char* op, const char* operand) {
  require(t.rank() == 2, std::string(op) + ": operand '" + operand + "' must be rank 2, got " +
                             to_string(t.shape()));
}

template <typename T, typename F>
Var<T> unary_elementwise(Var<T> x, T (*fwd)(T), F dfdx) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x, dfdx](Tape<T>& tape, std::span<const T> g) {
                          const Tensor<T>& xv = tape.value(x);
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i]);
                        });
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> x, Var<T> weight) {
  same_tape(x, weight, "matmul");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  require_matrix(xv, "linear", "x");
  require_matrix(wv, "linear", "weight");
  require(xv.cols() == wv.rows(), "linear: inner dimensions disagree: x is " + to_string(xv.shape()) +
                                      ", weight is " + to_string(wv.shape()));
  const std::size_t b = xv.rows(), n = xv.cols(), m = wv.cols();
  Tensor<T> out = Tensor<T>::matrix(b, m);
  as_mat(out.data(), b, m).noalias() = as_mat(xv) * as_mat(wv);
  const bool rg = x.requires_grad() || weight.requires_grad();
  return x.tape->record(std::move(out), rg, [x, weight, b, n, m](Tape<T>& tape, std::span<const T> g) {
    const auto gm = as_mat(g, b, m);
    if (x.requires_grad())
      as_mat(tape.grad_of(x), b, n).noalias() += gm * as_mat(tape.value(weight)).transpose();
    if (weight.requires_grad())
      as_mat(tape.grad_of(weight), n, m).noalias() += as_mat(tape.value(x)).transpose() * gm;
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  same_tape(x, weight, "linear");
  same_tape(x, bias, "linear");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  const Tensor<T>& bv = bias.value();
  require_matrix(xv, "linear", "x");
  require_matrix(wv, "linear", "weight");
  require(xv.cols() == wv.rows(), "linear: inner dimensions disagree: x is " + to_string(xv.shape()) +
                                      ", weight is " + to_string(wv.shape()));
  require(bv.rank() == 1 && bv.size() == wv.cols(),
          "linear: operand 'bias' has shape " + to_string(bv.shape()) + ", expected [" +
              std::to_string(wv.cols()) + "]");
  const std::size_t b = xv.rows(), n = xv.cols(), m = wv.cols();
  Tensor<T> out = Tensor<T>::matrix(b, m);
  auto om = as_mat(out.data(), b, m);
  om.noalias() = as_mat(xv) * as_mat(wv);
  om.rowwise() += as_mat(bv.data(), 1, m).row(0);
  const bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  return x.tape->record(std::move(out), rg, [x, weight, bias, b, n, m](Tape<T>& tape, std::span<const T> g) {
    const auto gm = as_mat(g, b, m);
    if (tape.requires_grad(x))
      as_mat(tape.grad_of(x), b, n).noalias() += gm * as_mat(tape.value(weight)).transpose();
    if (tape.requires_grad(weight))
      as_mat(tape.grad_of(weight), n, m).noalias() += as_mat(tape.value(x)).transpose() * gm;
    if (tape.requires_grad(bias)) as_mat(tape.grad_of(bias), 1, m) += gm.colwise().sum();
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  same_tape(a, b, "add");
  require(a.shape() == b.shape(),
          "add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), a.requires_grad() || b.requires_grad(),
                        [a, b](Tape<T>& tape, std::span<const T> g) {
                          for (Var<T> v : {a, b}) {
                            if (!tape.requires_grad(v)) continue;
                            auto gv = tape.grad_of(v);
                            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
                          }
                        });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  same_tape(a, b, "sub");
  require(a.shape() == b.shape(),
          "sub: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(std::move(out), a.requires_grad() || b.requires_grad(),
                        [a, b](Tape<T>& tape, std::span<const T> g) {
                          if (tape.requires_grad(a)) {
                            auto ga = tape.grad_of(a);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                          }
                          if (tape.requires_grad(b)) {
                            auto gb = tape.grad_of(b);
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                          }
                        });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  same_tape(a, b, "mul");
  require(a.shape() == b.shape(),
          "mul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(std::move(out), a.requires_grad() || b.requires_grad(),
                        [a, b](Tape<T>& tape, std::span<const T> g) {
                          const auto& av = tape.value(a);
                          const auto& bv = tape.value(b);
                          if (tape.requires_grad(a)) {
                            auto ga = tape.grad_of(a);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                          }
                          if (tape.requires_grad(b)) {
                            auto gb = tape.grad_of(b);
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                          }
                        });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return a.tape->record(std::move(out), a.requires_grad(),
                        [a, factor](Tape<T>& tape, std::span<const T> g) {
                          auto ga = tape.grad_of(a);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
                        });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
  if (!(slope > T{0} && slope < T{1})) throw ConfigError("leaky_relu: slope must lie in (0,1)");
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T{0} ? xv[i] : slope * xv[i];
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x, slope](Tape<T>& tape, std::span<const T> g) {
                          const auto& xv = tape.value(x);
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < g.size(); ++i)
                            gx[i] += xv[i] > T{0} ? g[i] : slope * g[i];
                        });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = T{1} / (T{1} + std::exp(-xv[i]));
  std::vector<T> y = x.requires_grad() ? out.storage() : std::vector<T>{};
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x, y = std::move(y)](Tape<T>& tape, std::span<const T> g) {
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T{1} - y[i]);
                        });
}

template <typename T>
Var<T> log(Var<T> x) {
  for (T v : x.value().data())
    if (!(v > T{0})) throw DomainError("log: non-positive argument");
  return unary_elementwise<T>(
      x, +[](T v) { return std::log(v); }, [](T v) { return T{1} / v; });
}

template <typename T>
Var<T> log_sigmoid(Var<T> x) {
  return unary_elementwise<T>(
      x,
      +[](T v) {
        // -softplus(-v)
        return v >= T{0} ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
      },
      [](T v) {
        // d/dv log(sigmoid(v)) = sigmoid(-v)
        return v >= T{0} ? std::exp(-v) / (T{1} + std::exp(-v)) : T{1} / (T{1} + std::exp(v));
      });
}

template <typename T>
Var<T> dropout(Var<T> x, T p, bool train, Rng& rng) {
  if (!(p >= T{0} && p < T{1})) throw ConfigError("dropout: p must lie in [0,1)");
  if (!train || p == T{0}) return x;
  const Tensor<T>& xv = x.value();
  const T keep_scale = T{1} / (T{1} - p);
  std::vector<T> mask(xv.size());
  for (auto& m : mask) m = rng.uniform() < static_cast<double>(p) ? T{0} : keep_scale;
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x, mask = std::move(mask)](Tape<T>& tape, std::span<const T> g) {
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                        });
}

template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormState<T>& state, BatchNormMode mode) {
  const Tensor<T>& xv = x.value();
  require_matrix(xv, "batchnorm", "x");
  const std::size_t b = xv.rows(), n = xv.cols();
  require(gamma.value().size() == n && beta.value().size() == n &&
              state.running_mean.size() == n && state.running_var.size() == n,
          "batchnorm: parameter width does not match input " + to_string(xv.shape()));
  if (mode == BatchNormMode::train && b < 2)
    throw ConfigError("batchnorm: degenerate batch of size " + std::to_string(b) + " in train mode");

  std::vector<T> mu(n), inv_std(n);
  if (mode == BatchNormMode::train) {
    for (std::size_t j = 0; j < n; ++j) {
      T s = 0;
      for (std::size_t i = 0; i < b; ++i) s += xv.at(i, j);
      mu[j] = s / static_cast<T>(b);
      T v = 0;
      for (std::size_t i = 0; i < b; ++i) {
        const T d = xv.at(i, j) - mu[j];
        v += d * d;
      }
      const T biased = v / static_cast<T>(b);
      inv_std[j] = T{1} / std::sqrt(biased + state.eps);
      const T unbiased = v / static_cast<T>(b - 1);
      state.running_mean[j] = (T{1} - state.momentum) * state.running_mean[j] + state.momentum * mu[j];
      state.running_var[j] = (T{1} - state.momentum) * state.running_var[j] + state.momentum * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      mu[j] = state.running_mean[j];
      inv_std[j] = T{1} / std::sqrt(state.running_var[j] + state.eps);
    }
  }

  const auto& gv = gamma.value();
  const auto& bev = beta.value();
  Tensor<T> xhat(xv.shape());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (xv.at(i, j) - mu[j]) * inv_std[j];
      xhat.at(i, j) = h;
      out.at(i, j) = gv[j] * h + bev[j];
    }

  const bool affine_grad = mode != BatchNormMode::frozen;
  const bool rg = x.requires_grad() ||
                  (affine_grad && (gamma.requires_grad() || beta.requires_grad()));
  return x.tape->record(
      std::move(out), rg,
      [x, gamma, beta, mode, b, n, affine_grad, inv_std = std::move(inv_std),
       xhat = std::move(xhat)](Tape<T>& tape, std::span<const T> g) {
        const auto& gv = tape.value(gamma);
        std::vector<T> sum_g(n, T{0}), sum_gx(n, T{0});
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            sum_g[j] += g[i * n + j];
            sum_gx[j] += g[i * n + j] * xhat.at(i, j);
          }
        if (affine_grad && tape.requires_grad(gamma)) {
          auto gg = tape.grad_of(gamma);
          for (std::size_t j = 0; j < n; ++j) gg[j] += sum_gx[j];
        }
        if (affine_grad && tape.requires_grad(beta)) {
          auto gb = tape.grad_of(beta);
          for (std::size_t j = 0; j < n; ++j) gb[j] += sum_g[j];
        }
        if (!tape.requires_grad(x)) return;
        auto gx = tape.grad_of(x);
        if (mode == BatchNormMode::train) {
          const T inv_b = T{1} / static_cast<T>(b);
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const T gij = g[i * n + j];
              gx[i * n + j] += gv[j] * inv_std[j] * inv_b *
                               (static_cast<T>(b) * gij - sum_g[j] - xhat.at(i, j) * sum_gx[j]);
            }
        } else {
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * gv[j] * inv_std[j];
        }
      });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T s = 0;
  for (T v : x.value().data()) s += v;
  return x.tape->record(Tensor<T>::scalar(s), x.requires_grad(),
                        [x](Tape<T>& tape, std::span<const T> g) {
                          auto gx = tape.grad_of(x);
                          for (auto& v : gx) v += g[0];
                        });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), T{1} / static_cast<T>(count));
}

template <typename T>
Var<T> sum_squares(Var<T> x) {
  T s = 0;
  for (T v : x.value().data()) s += v * v;
  return x.tape->record(Tensor<T>::scalar(s), x.requires_grad(),
                        [x](Tape<T>& tape, std::span<const T> g) {
                          const auto& xv = tape.value(x);
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += T{2} * xv[i] * g[0];
                        });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value();
  out.reshape(std::move(shape));
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x](Tape<T>& tape, std::span<const T> g) {
                          auto gx = tape.grad_of(x);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                        });
}

template <typename T>
Var<T> repeat_rows(Var<T> x, std::size_t k) {
  const Tensor<T>& xv = x.value();
  require_matrix(xv, "repeat_rows", "x");
  if (k == 0) throw ConfigError("repeat_rows: k must be positive");
  if (k == 1) return x;
  const std::size_t b = xv.rows(), n = xv.cols();
  Tensor<T> out = Tensor<T>::matrix(b * k, n);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t i = 0; i < k; ++i)
      std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(r * n), n,
                  out.data().begin() + static_cast<std::ptrdiff_t>((r * k + i) * n));
  return x.tape->record(std::move(out), x.requires_grad(),
                        [x, b, n, k](Tape<T>& tape, std::span<const T> g) {
                          auto gx = tape.grad_of(x);
                          for (std::size_t r = 0; r < b; ++r)
                            for (std::size_t i = 0; i < k; ++i)
                              for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[(r * k + i) * n + c];
                        });
}

#define ISO_INSTANTIATE_OPS(T)                                                              \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                           \
  template Var<T> matmul(Var<T>, Var<T>);                                                   \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> sub(Var<T>, Var<T>);                                                      \
  template Var<T> mul(Var<T>, Var<T>);                                                      \
  template Var<T> scale(Var<T>, T);                                                         \
  template Var<T> leaky_relu(Var<T>, T);                                                    \
  template Var<T> sigmoid(Var<T>);                                                          \
  template Var<T> log(Var<T>);                                                              \
  template Var<T> log_sigmoid(Var<T>);                                                      \
  template Var<T> dropout(Var<T>, T, bool, Rng&);                                           \
  template Var<T> batchnorm(Var<T>, Var<T>, Var<T>, BatchNormState<T>&, BatchNormMode);     \
  template Var<T> sum(Var<T>);                                                              \
  template Var<T> mean(Var<T>);                                                             \
  template Var<T> sum_squares(Var<T>);                                                      \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> repeat_rows(Var<T>, std::size_t);

ISO_INSTANTIATE_OPS(float)
ISO_INSTANTIATE_OPS(double)

}  // namespace iso::ad
