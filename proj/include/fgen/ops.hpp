#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgen/graph.hpp"
#include "fgen/rng.hpp"
#include "fgen/tensor.hpp"

namespace fgen {

namespace kernel {

// Fixed-order dot product with eight independent partial sums.
template <class S>
S dot(const S* a, const S* b, std::size_t n) {
  S acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  S tail{};
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// y += alpha * x
template <class S>
void axpy(S alpha, const S* x, S* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace kernel

template <class S>
void check_same_graph(Var<S> a, Var<S> b, const char* op) {
  if (a.graph != b.graph) throw std::logic_error(std::string(op) + ": operands from different graphs");
}

// [p x q] * [q x r] -> [p x r]; a rank-1 right operand [q] yields [p].
template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  check_same_graph(a, b, "matmul");
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || (B.rank() != 1 && B.rank() != 2))
    throw std::invalid_argument("matmul: expected [p x q] * [q x r] or [q], got " + shape_str(A.shape()) +
                                " * " + shape_str(B.shape()));
  const std::size_t p = A.dim(0), q = A.dim(1);
  const std::size_t r = B.rank() == 2 ? B.dim(1) : 1;
  if (B.dim(0) != q)
    throw std::invalid_argument("matmul: inner dimensions differ, " + shape_str(A.shape()) + " * " +
                                shape_str(B.shape()));
  Tensor<S> C(B.rank() == 2 ? Shape{p, r} : Shape{p});
  if (r == 1) {
    for (std::size_t i = 0; i < p; ++i) C[i] = kernel::dot(A.ptr() + i * q, B.ptr(), q);
  } else {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = 0; k < q; ++k) kernel::axpy(A[i * q + k], B.ptr() + k * r, C.ptr() + i * r, r);
  }
  return a.graph->record("matmul", std::move(C), {a.id, b.id}, [p, q, r](Graph<S>& g, std::size_t self) {
    const auto ia = g.input(self, 0), ib = g.input(self, 1);
    const auto& dC = g.grad(self);
    const auto& A = g.value(ia);
    const auto& B = g.value(ib);
    if (g.requires_grad(ia)) {
      auto& dA = g.grad(ia);
      if (r == 1) {
        for (std::size_t i = 0; i < p; ++i) kernel::axpy(dC[i], B.ptr(), dA.ptr() + i * q, q);
      } else {
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t k = 0; k < q; ++k) dA[i * q + k] += kernel::dot(dC.ptr() + i * r, B.ptr() + k * r, r);
      }
    }
    if (g.requires_grad(ib)) {
      auto& dB = g.grad(ib);
      if (r == 1) {
        for (std::size_t i = 0; i < p; ++i) kernel::axpy(dC[i], A.ptr() + i * q, dB.ptr(), q);
      } else {
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t k = 0; k < q; ++k) kernel::axpy(A[i * q + k], dC.ptr() + i * r, dB.ptr() + k * r, r);
      }
    }
  });
}

namespace detail {

template <class S>
Var<S> elementwise_sum(Var<S> a, Var<S> b, const char* op) {
  check_same_graph(a, b, op);
  require_same_shape(a.shape(), b.shape(), op);
  Tensor<S> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return a.graph->record(op, std::move(out), {a.id, b.id}, [](Graph<S>& g, std::size_t self) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto in = g.input(self, k);
      if (!g.requires_grad(in)) continue;
      auto& d = g.grad(in);
      const auto& up = g.grad(self);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i];
    }
  });
}

}  // namespace detail

template <class S>
Var<S> add(Var<S> a, Var<S> b) {
  return detail::elementwise_sum(a, b, "add");
}

// Elementwise sum of two branch outputs; the upstream gradient passes to
// both operands unchanged.
template <class S>
Var<S> sum_merge(Var<S> a, Var<S> b) {
  return detail::elementwise_sum(a, b, "sum_merge");
}

template <class S>
Var<S> hadamard(Var<S> a, Var<S> b) {
  check_same_graph(a, b, "hadamard");
  require_same_shape(a.shape(), b.shape(), "hadamard");
  Tensor<S> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return a.graph->record("hadamard", std::move(out), {a.id, b.id}, [](Graph<S>& g, std::size_t self) {
    const auto ia = g.input(self, 0), ib = g.input(self, 1);
    const auto& up = g.grad(self);
    if (g.requires_grad(ia)) {
      auto& d = g.grad(ia);
      const auto& B = g.value(ib);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * B[i];
    }
    if (g.requires_grad(ib)) {
      auto& d = g.grad(ib);
      const auto& A = g.value(ia);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * A[i];
    }
  });
}

template <class S>
Var<S> scale(Var<S> x, S c) {
  Tensor<S> out = x.value();
  for (auto& v : out.data()) v *= c;
  return x.graph->record("scale", std::move(out), {x.id}, [c](Graph<S>& g, std::size_t self) {
    auto& d = g.grad(g.input(self, 0));
    const auto& up = g.grad(self);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * up[i];
  });
}

template <class S>
Var<S> sum(Var<S> x) {
  S total{};
  for (auto v : x.value().data()) total += v;
  return x.graph->record("sum", Tensor<S>::scalar(total), {x.id}, [](Graph<S>& g, std::size_t self) {
    auto& d = g.grad(g.input(self, 0));
    const S up = g.grad(self)[0];
    for (auto& v : d.data()) v += up;
  });
}

template <class S>
Var<S> reshape(Var<S> x, Shape shape) {
  return x.graph->record("reshape", x.value().reshaped(std::move(shape)), {x.id},
                         [](Graph<S>& g, std::size_t self) {
                           auto& d = g.grad(g.input(self, 0));
                           const auto& up = g.grad(self);
                           for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i];
                         });
}

template <class S>
Var<S> flatten(Var<S> x) {
  return reshape(x, Shape{x.value().size()});
}

// out[i] = x[index[i]], reshaped to `shape`; backward scatter-adds.
template <class S>
Var<S> gather(Var<S> x, std::vector<std::size_t> index, Shape shape) {
  if (index.size() != shape_size(shape)) throw std::invalid_argument("gather: index count does not match shape");
  const auto& X = x.value();
  std::vector<S> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= X.size()) throw std::out_of_range("gather: index out of range");
    out[i] = X[index[i]];
  }
  return x.graph->record("gather", Tensor<S>(std::move(shape), std::move(out)), {x.id},
                         [index = std::move(index)](Graph<S>& g, std::size_t self) {
                           auto& d = g.grad(g.input(self, 0));
                           const auto& up = g.grad(self);
                           for (std::size_t i = 0; i < index.size(); ++i) d[index[i]] += up[i];
                         });
}

enum class Activation { None, Sigmoid, Tanh, Relu };

inline const char* activation_name(Activation k) {
  switch (k) {
    case Activation::None: return "identity";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

// Elementwise nonlinearity. relu'(0) is taken as 0.
template <class S>
Var<S> activation(Activation kind, Var<S> x) {
  if (kind == Activation::None) return x;
  Tensor<S> y = x.value();
  for (auto& v : y.data()) {
    switch (kind) {
      case Activation::Sigmoid: v = S{1} / (S{1} + std::exp(-v)); break;
      case Activation::Tanh: v = std::tanh(v); break;
      case Activation::Relu: v = v > S{0} ? v : S{0}; break;
      case Activation::None: break;
    }
  }
  return x.graph->record(activation_name(kind), std::move(y), {x.id}, [kind](Graph<S>& g, std::size_t self) {
    auto& d = g.grad(g.input(self, 0));
    const auto& y = g.value(self);
    const auto& up = g.grad(self);
    for (std::size_t i = 0; i < d.size(); ++i) {
      S local{};
      switch (kind) {
        case Activation::Sigmoid: local = y[i] * (S{1} - y[i]); break;
        case Activation::Tanh: local = S{1} - y[i] * y[i]; break;
        case Activation::Relu: local = y[i] > S{0} ? S{1} : S{0}; break;
        case Activation::None: local = S{1}; break;
      }
      d[i] += up[i] * local;
    }
  });
}

template <class S>
Var<S> sigmoid(Var<S> x) {
  return activation(Activation::Sigmoid, x);
}
template <class S>
Var<S> tanh(Var<S> x) {
  return activation(Activation::Tanh, x);
}
template <class S>
Var<S> relu(Var<S> x) {
  return activation(Activation::Relu, x);
}

// Valid, stride-1 1-D cross-correlation: x [C_in x L], kernels
// [C_out x C_in x k], bias [C_out] -> [C_out x (L - k + 1)].
template <class S>
Var<S> conv1d(Var<S> x, Var<S> kernels, Var<S> bias) {
  const auto& X = x.value();
  const auto& K = kernels.value();
  const auto& B = bias.value();
  if (X.rank() != 2 || K.rank() != 3 || B.rank() != 1)
    throw std::invalid_argument("conv1d: expected x [C x L], kernels [O x C x k], bias [O]");
  const std::size_t cin = X.dim(0), len = X.dim(1), cout = K.dim(0), k = K.dim(2);
  if (K.dim(1) != cin || B.dim(0) != cout)
    throw std::invalid_argument("conv1d: channel mismatch between input " + shape_str(X.shape()) +
                                " and kernels " + shape_str(K.shape()));
  if (k > len) throw std::invalid_argument("conv1d: kernel longer than input");
  const std::size_t lout = len - k + 1;
  Tensor<S> Y({cout, lout});
  for (std::size_t o = 0; o < cout; ++o) {
    S* y = Y.ptr() + o * lout;
    for (std::size_t t = 0; t < lout; ++t) y[t] = B[o];
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t j = 0; j < k; ++j) kernel::axpy(K[(o * cin + c) * k + j], X.ptr() + c * len + j, y, lout);
  }
  return x.graph->record(
      "conv1d", std::move(Y), {x.id, kernels.id, bias.id}, [cin, len, cout, k, lout](Graph<S>& g, std::size_t self) {
        const auto ix = g.input(self, 0), ik = g.input(self, 1), ib = g.input(self, 2);
        const auto& dY = g.grad(self);
        const auto& X = g.value(ix);
        const auto& K = g.value(ik);
        if (g.requires_grad(ik)) {
          auto& dK = g.grad(ik);
          for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t c = 0; c < cin; ++c)
              for (std::size_t j = 0; j < k; ++j)
                dK[(o * cin + c) * k + j] += kernel::dot(dY.ptr() + o * lout, X.ptr() + c * len + j, lout);
        }
        if (g.requires_grad(ib)) {
          auto& dB = g.grad(ib);
          for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t t = 0; t < lout; ++t) dB[o] += dY[o * lout + t];
        }
        if (g.requires_grad(ix)) {
          auto& dX = g.grad(ix);
          for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t c = 0; c < cin; ++c)
              for (std::size_t j = 0; j < k; ++j)
                kernel::axpy(K[(o * cin + c) * k + j], dY.ptr() + o * lout, dX.ptr() + c * len + j, lout);
        }
      });
}

// Valid, stride-1 2-D cross-correlation: x [C_in x H x W], kernels
// [C_out x C_in x kh x kw], bias [C_out] -> [C_out x H' x W'].
template <class S>
Var<S> conv2d(Var<S> x, Var<S> kernels, Var<S> bias) {
  const auto& X = x.value();
  const auto& K = kernels.value();
  const auto& B = bias.value();
  if (X.rank() != 3 || K.rank() != 4 || B.rank() != 1)
    throw std::invalid_argument("conv2d: expected x [C x H x W], kernels [O x C x kh x kw], bias [O]");
  const std::size_t cin = X.dim(0), h = X.dim(1), w = X.dim(2);
  const std::size_t cout = K.dim(0), kh = K.dim(2), kw = K.dim(3);
  if (K.dim(1) != cin || B.dim(0) != cout)
    throw std::invalid_argument("conv2d: channel mismatch between input " + shape_str(X.shape()) +
                                " and kernels " + shape_str(K.shape()));
  if (kh > h || kw > w) throw std::invalid_argument("conv2d: kernel exceeds input extent");
  const std::size_t ho = h - kh + 1, wo = w - kw + 1;
  Tensor<S> Y({cout, ho, wo});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < ho * wo; ++i) Y[o * ho * wo + i] = B[o];
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t a = 0; a < kh; ++a)
        for (std::size_t b = 0; b < kw; ++b) {
          const S kv = K[((o * cin + c) * kh + a) * kw + b];
          for (std::size_t r = 0; r < ho; ++r)
            kernel::axpy(kv, X.ptr() + (c * h + r + a) * w + b, Y.ptr() + (o * ho + r) * wo, wo);
        }
  }
  return x.graph->record("conv2d", std::move(Y), {x.id, kernels.id, bias.id},
                         [cin, h, w, cout, kh, kw, ho, wo](Graph<S>& g, std::size_t self) {
                           const auto ix = g.input(self, 0), ik = g.input(self, 1), ib = g.input(self, 2);
                           const auto& dY = g.grad(self);
                           const auto& X = g.value(ix);
                           const auto& K = g.value(ik);
                           if (g.requires_grad(ik)) {
                             auto& dK = g.grad(ik);
                             for (std::size_t o = 0; o < cout; ++o)
                               for (std::size_t c = 0; c < cin; ++c)
                                 for (std::size_t a = 0; a < kh; ++a)
                                   for (std::size_t b = 0; b < kw; ++b) {
                                     S acc{};
                                     for (std::size_t r = 0; r < ho; ++r)
                                       acc += kernel::dot(dY.ptr() + (o * ho + r) * wo,
                                                          X.ptr() + (c * h + r + a) * w + b, wo);
                                     dK[((o * cin + c) * kh + a) * kw + b] += acc;
                                   }
                           }
                           if (g.requires_grad(ib)) {
                             auto& dB = g.grad(ib);
                             for (std::size_t o = 0; o < cout; ++o)
                               for (std::size_t i = 0; i < ho * wo; ++i) dB[o] += dY[o * ho * wo + i];
                           }
                           if (g.requires_grad(ix)) {
                             auto& dX = g.grad(ix);
                             for (std::size_t o = 0; o < cout; ++o)
                               for (std::size_t c = 0; c < cin; ++c)
                                 for (std::size_t a = 0; a < kh; ++a)
                                   for (std::size_t b = 0; b < kw; ++b) {
                                     const S kv = K[((o * cin + c) * kh + a) * kw + b];
                                     for (std::size_t r = 0; r < ho; ++r)
                                       kernel::axpy(kv, dY.ptr() + (o * ho + r) * wo,
                                                    dX.ptr() + (c * h + r + a) * w + b, wo);
                                   }
                           }
                         });
}

// Non-overlapping max pooling (stride = window) over the last two axes of a
// rank-2 [H x W] or rank-3 [C x H x W] tensor. Partial windows at the edges
// are dropped. The gradient goes to the first maximum in row-major window
// order.
template <class S>
Var<S> maxpool(Var<S> x, std::size_t wh, std::size_t ww) {
  const auto& X = x.value();
  if (X.rank() != 2 && X.rank() != 3) throw std::invalid_argument("maxpool: expected rank 2 or 3 input");
  if (wh == 0 || ww == 0) throw std::invalid_argument("maxpool: window must be positive");
  const std::size_t channels = X.rank() == 3 ? X.dim(0) : 1;
  const std::size_t h = X.dim(X.rank() - 2), w = X.dim(X.rank() - 1);
  if (wh > h || ww > w)
    throw std::invalid_argument("maxpool: window " + std::to_string(wh) + "x" + std::to_string(ww) +
                                " larger than input " + shape_str(X.shape()));
  const std::size_t ho = h / wh, wo = w / ww;
  Shape out_shape = X.rank() == 3 ? Shape{channels, ho, wo} : Shape{ho, wo};
  Tensor<S> Y(out_shape);
  std::vector<std::size_t> argmax(Y.size());
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t r = 0; r < ho; ++r)
      for (std::size_t q = 0; q < wo; ++q) {
        std::size_t best = (c * h + r * wh) * w + q * ww;
        for (std::size_t a = 0; a < wh; ++a)
          for (std::size_t b = 0; b < ww; ++b) {
            const std::size_t idx = (c * h + r * wh + a) * w + q * ww + b;
            if (X[idx] > X[best]) best = idx;
          }
        const std::size_t o = (c * ho + r) * wo + q;
        Y[o] = X[best];
        argmax[o] = best;
      }
  return x.graph->record("maxpool", std::move(Y), {x.id},
                         [argmax = std::move(argmax)](Graph<S>& g, std::size_t self) {
                           auto& d = g.grad(g.input(self, 0));
                           const auto& up = g.grad(self);
                           for (std::size_t o = 0; o < argmax.size(); ++o) d[argmax[o]] += up[o];
                         });
}

// Inverted dropout. Eval mode and p_drop == 0 are the identity (no node is
// recorded). The mask, already scaled by 1/(1-p), is reused in backward.
template <class S>
Var<S> dropout(Var<S> x, double p_drop, Mode mode, Rng& rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw std::invalid_argument("dropout: probability must be in [0, 1)");
  if (mode == Mode::Eval || p_drop == 0.0) return x;
  const S keep_scale = static_cast<S>(1.0 / (1.0 - p_drop));
  Tensor<S> y = x.value();
  std::vector<S> mask(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask[i] = rng.uniform() < p_drop ? S{0} : keep_scale;
    y[i] *= mask[i];
  }
  return x.graph->record("dropout", std::move(y), {x.id}, [mask = std::move(mask)](Graph<S>& g, std::size_t self) {
    auto& d = g.grad(g.input(self, 0));
    const auto& up = g.grad(self);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * mask[i];
  });
}

// Mean over all elements of (pred - target)^2.
template <class S>
Var<S> mse_loss(Var<S> pred, Var<S> target) {
  check_same_graph(pred, target, "mse_loss");
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  const auto& P = pred.value();
  const auto& T = target.value();
  S acc{};
  for (std::size_t i = 0; i < P.size(); ++i) {
    const S e = P[i] - T[i];
    acc += e * e;
  }
  const S count = static_cast<S>(P.size());
  return pred.graph->record("mse_loss", Tensor<S>::scalar(acc / count), {pred.id, target.id},
                            [count](Graph<S>& g, std::size_t self) {
                              const auto ip = g.input(self, 0), it = g.input(self, 1);
                              const S up = g.grad(self)[0];
                              const auto& P = g.value(ip);
                              const auto& T = g.value(it);
                              const S c = S{2} * up / count;
                              if (g.requires_grad(ip)) {
                                auto& d = g.grad(ip);
                                for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * (P[i] - T[i]);
                              }
                              if (g.requires_grad(it)) {
                                auto& d = g.grad(it);
                                for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c * (P[i] - T[i]);
                              }
                            });
}

// lambda * sum of squared entries over the given leaves; gradient 2*lambda*w.
template <class S>
Var<S> l2_penalty(Graph<S>& g, std::span<const Var<S>> params, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("l2_penalty: lambda must be nonnegative");
  const S lam = static_cast<S>(lambda);
  S acc{};
  std::vector<std::size_t> ids;
  for (const auto& p : params) {
    S sq{};
    for (auto v : p.value().data()) sq += v * v;
    acc += sq;
    ids.push_back(p.id);
  }
  return g.record("l2_penalty", Tensor<S>::scalar(lam * acc), std::move(ids), [lam](Graph<S>& gr, std::size_t self) {
    const S c = S{2} * lam * gr.grad(self)[0];
    for (std::size_t k = 0; k < gr.input_count(self); ++k) {
      const auto in = gr.input(self, k);
      if (!gr.requires_grad(in)) continue;
      auto& d = gr.grad(in);
      const auto& w = gr.value(in);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * w[i];
    }
  });
}

}  // namespace fgen
