#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "fgen/graph.hpp"
#include "fgen/ops.hpp"
#include "fgen/rng.hpp"

namespace fgen {

// Gate order used for every per-gate array below.
enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "c"};

// Indices into a ParameterSet for one LSTM layer: W_g [H x D_in],
// U_g [H x H], b_g [H] per gate.
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::array<std::size_t, 4> W{}, U{}, b{};

  std::size_t element_count() const { return 4 * (hidden * input_dim + hidden * hidden + hidden); }
};

template <class S>
LstmParams add_lstm_params(ParameterSet<S>& ps, const std::string& prefix, std::size_t input_dim,
                           std::size_t hidden) {
  LstmParams l{input_dim, hidden, {}, {}, {}};
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string gate = kGateNames[g];
    l.W[g] = ps.size();
    ps.add(prefix + ".W_" + gate, Tensor<S>({hidden, input_dim}));
    l.U[g] = ps.size();
    ps.add(prefix + ".U_" + gate, Tensor<S>({hidden, hidden}));
    l.b[g] = ps.size();
    ps.add(prefix + ".b_" + gate, Tensor<S>({hidden}));
  }
  return l;
}

struct DenseParams {
  std::size_t W = 0, b = 0;
};

template <class S>
DenseParams add_dense_params(ParameterSet<S>& ps, const std::string& prefix, std::size_t in, std::size_t out) {
  DenseParams d;
  d.W = ps.size();
  ps.add(prefix + ".W", Tensor<S>({out, in}), /*decay=*/true);
  d.b = ps.size();
  ps.add(prefix + ".b", Tensor<S>({out}));
  return d;
}

// Dropout applied to the LSTM input and to the recurrent h before the affine
// maps. Masks are drawn per call, i.e. per timestep.
struct LstmDropout {
  double input = 0.0;
  double recurrent = 0.0;
  Mode mode = Mode::Eval;
  Rng* rng = nullptr;
};

template <class S>
struct LstmState {
  Var<S> h, c;
};

// One step of a vanilla LSTM:
//   i, f, o = sigmoid(W x + U h + b),  c~ = tanh(W_c x + U_c h + b_c)
//   c' = f * c + i * c~,  h' = o * tanh(c')
template <class S>
LstmState<S> lstm_cell_step(Graph<S>& g, ParameterSet<S>& ps, const LstmParams& l, Var<S> x, LstmState<S> state,
                            const LstmDropout& drop = {}) {
  if (x.value().rank() != 1 || x.value().size() != l.input_dim)
    throw std::invalid_argument("lstm_cell_step: input " + shape_str(x.shape()) + ", expected [" +
                                std::to_string(l.input_dim) + "]");
  if (state.h.value().size() != l.hidden || state.c.value().size() != l.hidden)
    throw std::invalid_argument("lstm_cell_step: state size does not match hidden size " +
                                std::to_string(l.hidden));
  Var<S> xin = x;
  Var<S> hin = state.h;
  if (drop.mode == Mode::Train && (drop.input > 0.0 || drop.recurrent > 0.0)) {
    if (!drop.rng) throw std::logic_error("lstm_cell_step: train-mode dropout needs an rng");
    xin = dropout(x, drop.input, drop.mode, *drop.rng);
    hin = dropout(state.h, drop.recurrent, drop.mode, *drop.rng);
  }
  auto pre = [&](std::size_t gate) {
    auto wx = matmul(g.parameter(ps.at(l.W[gate])), xin);
    auto uh = matmul(g.parameter(ps.at(l.U[gate])), hin);
    return add(add(wx, uh), g.parameter(ps.at(l.b[gate])));
  };
  auto i = sigmoid(pre(kInput));
  auto f = sigmoid(pre(kForget));
  auto o = sigmoid(pre(kOutput));
  auto cand = tanh(pre(kCandidate));
  auto c_next = add(hadamard(f, state.c), hadamard(i, cand));
  auto h_next = hadamard(o, tanh(c_next));
  for (auto v : h_next.value().data())
    if (!(std::abs(v) <= S{1})) throw std::logic_error("lstm_cell_step: |h| exceeded 1");
  return {h_next, c_next};
}

// activation(W x + b)
template <class S>
Var<S> dense(Graph<S>& g, ParameterSet<S>& ps, const DenseParams& d, Var<S> x, Activation kind) {
  auto y = add(matmul(g.parameter(ps.at(d.W)), x), g.parameter(ps.at(d.b)));
  return activation(kind, y);
}

}  // namespace fgen
