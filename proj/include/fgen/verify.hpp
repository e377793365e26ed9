#pragma once

// Independent oracles and the self-verification suites behind the
// `gradcheck` and `selftest` commands.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fgen/checkpoint.hpp"
#include "fgen/fft.hpp"
#include "fgen/gradcheck.hpp"
#include "fgen/models.hpp"
#include "fgen/ops.hpp"
#include "fgen/spectral.hpp"
#include "fgen/training.hpp"

namespace fgen::verify {

// O(n^2) DFT by direct summation; sign = -1 forward, +1 inverse (unscaled).
inline std::vector<Complex> naive_dft(std::span<const Complex> x, double sign = -1.0) {
  const std::size_t n = x.size();
  std::vector<Complex> roots(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    roots[k] = {std::cos(a), std::sin(a)};
  }
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) acc += x[j] * roots[(j * k) % n];
    out[k] = acc;
  }
  return out;
}

inline double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// The five LSTM equations for H = 1, D_in = 1, evaluated in plain doubles.
struct ScalarLstm {
  double Wi, Wf, Wo, Wc, Ui, Uf, Uo, Uc, bi, bf, bo, bc;

  std::pair<double, double> step(double x, double h, double c) const {
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double i = sig(Wi * x + Ui * h + bi);
    const double f = sig(Wf * x + Uf * h + bf);
    const double o = sig(Wo * x + Uo * h + bo);
    const double g = std::tanh(Wc * x + Uc * h + bc);
    const double c2 = f * c + i * g;
    return {o * std::tanh(c2), c2};
  }
};

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

inline CheckOutcome outcome(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, value < threshold};
}

namespace detail {

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, for relu checks.
inline Tensor<double> away_from_zero(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) {
    const double m = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

// Projects a non-scalar output onto fixed random weights so every output
// entry contributes to the loss.
inline Var<double> project(Graph<double>& g, Var<double> y, const Tensor<double>& w) {
  return sum(hadamard(y, g.constant(w)));
}

}  // namespace detail

struct PrimitiveCase {
  std::string name;
  ParameterSet<double> params;
  std::function<Var<double>(Graph<double>&, ParameterSet<double>&)> build;
};

inline std::vector<PrimitiveCase> primitive_cases(std::uint64_t seed = 7) {
  using detail::project;
  using detail::random_tensor;
  Rng rng(seed);
  std::vector<PrimitiveCase> cases;
  auto leaf = [](Graph<double>& g, ParameterSet<double>& ps, const char* n) { return g.parameter(ps[n]); };

  {
    PrimitiveCase c{"matmul", {}, {}};
    c.params.add("a", random_tensor({3, 4}, rng));
    c.params.add("b", random_tensor({4, 2}, rng));
    auto w = random_tensor({3, 2}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      return project(g, matmul(leaf(g, ps, "a"), leaf(g, ps, "b")), w);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"matvec", {}, {}};
    c.params.add("a", random_tensor({5, 3}, rng));
    c.params.add("x", random_tensor({3}, rng));
    auto w = random_tensor({5}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      return project(g, matmul(leaf(g, ps, "a"), leaf(g, ps, "x")), w);
    };
    cases.push_back(std::move(c));
  }
  for (auto kind : {Activation::Sigmoid, Activation::Tanh, Activation::Relu}) {
    PrimitiveCase c{activation_name(kind), {}, {}};
    c.params.add("x", kind == Activation::Relu ? detail::away_from_zero({6}, rng) : random_tensor({6}, rng, -2, 2));
    auto w = random_tensor({6}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      return project(g, activation(kind, leaf(g, ps, "x")), w);
    };
    cases.push_back(std::move(c));
  }
  for (const char* op : {"add", "hadamard", "sum_merge"}) {
    PrimitiveCase c{op, {}, {}};
    c.params.add("a", random_tensor({5}, rng));
    c.params.add("b", random_tensor({5}, rng));
    auto w = random_tensor({5}, rng);
    const std::string name = op;
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      auto a = leaf(g, ps, "a");
      auto b = leaf(g, ps, "b");
      auto y = name == "add" ? add(a, b) : name == "hadamard" ? hadamard(a, b) : sum_merge(a, b);
      return project(g, y, w);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"conv1d", {}, {}};
    c.params.add("x", random_tensor({2, 9}, rng));
    c.params.add("k", random_tensor({3, 2, 3}, rng));
    c.params.add("b", random_tensor({3}, rng));
    auto w = random_tensor({3, 7}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      return project(g, conv1d(leaf(g, ps, "x"), leaf(g, ps, "k"), leaf(g, ps, "b")), w);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"conv2d", {}, {}};
    c.params.add("x", random_tensor({2, 4, 5}, rng));
    c.params.add("k", random_tensor({3, 2, 2, 3}, rng));
    c.params.add("b", random_tensor({3}, rng));
    auto w = random_tensor({3, 3, 3}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      return project(g, conv2d(leaf(g, ps, "x"), leaf(g, ps, "k"), leaf(g, ps, "b")), w);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"maxpool", {}, {}};
    c.params.add("x", random_tensor({2, 4, 6}, rng));
    auto w = random_tensor({2, 2, 3}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) { return project(g, maxpool(leaf(g, ps, "x"), 2, 2), w); };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"dropout(train)", {}, {}};
    c.params.add("x", random_tensor({20}, rng));
    auto w = random_tensor({20}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      Rng mask_rng(99);
      return project(g, dropout(leaf(g, ps, "x"), 0.5, Mode::Train, mask_rng), w);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"mse_loss", {}, {}};
    c.params.add("p", random_tensor({7}, rng));
    auto target = random_tensor({7}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) { return mse_loss(leaf(g, ps, "p"), g.constant(target)); };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"l2_penalty", {}, {}};
    c.params.add("u", random_tensor({3, 2}, rng));
    c.params.add("v", random_tensor({4}, rng));
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      std::vector<Var<double>> leaves = {leaf(g, ps, "u"), leaf(g, ps, "v")};
      return l2_penalty(g, std::span<const Var<double>>(leaves), 0.3);
    };
    cases.push_back(std::move(c));
  }
  {
    PrimitiveCase c{"gather/reshape/scale", {}, {}};
    c.params.add("x", random_tensor({6}, rng));
    auto w = random_tensor({2, 3}, rng);
    c.build = [=](Graph<double>& g, ParameterSet<double>& ps) {
      auto y = gather(leaf(g, ps, "x"), {5, 0, 3, 3, 1, 2}, Shape{6});
      return project(g, reshape(scale(y, 1.5), Shape{2, 3}), w);
    };
    cases.push_back(std::move(c));
  }
  return cases;
}

inline std::vector<CheckOutcome> primitive_gradchecks(double tol = 1e-6) {
  std::vector<CheckOutcome> out;
  Rng rng(11);
  for (auto& c : primitive_cases()) {
    auto& ps = c.params;
    auto r = grad_check([&](Graph<double>& g) { return c.build(g, ps); }, ps, rng, 1000);
    out.push_back(outcome("primitive " + c.name, r.max_rel_error, tol));
  }
  return out;
}

// Tiny configuration of a variant used by the composite checks.
inline ArchitectureConfig tiny_config(Variant v, std::size_t n = 8, std::size_t hidden = 8) {
  ArchitectureConfig a;
  a.variant = v;
  a.frame_size = n;
  a.hidden = hidden;
  a.frames_per_step = v == Variant::Conv2dLstm ? 3 : 1;
  a.seed = 5;
  return a;
}

inline Sequence<double> random_sequence(std::size_t steps, std::size_t dim, Rng& rng, double amp = 0.5) {
  Sequence<double> s;
  for (std::size_t t = 0; t <= steps; ++t) s.frames.push_back(detail::random_tensor({dim}, rng, -amp, amp));
  return s;
}

// Gradient of one train-mode sequence loss (MSE + L2, dropout disabled) of a
// tiny model against central differences.
inline GradCheckResult model_gradcheck(Variant v, std::size_t timesteps = 3, std::size_t max_coords = 600) {
  Model<double> model(tiny_config(v));
  model.set_dropout({0.0, 0.0});
  Rng data_rng(21);
  auto seq = random_sequence(timesteps, model.config().dim(), data_rng);
  Rng check_rng(31);
  return grad_check(
      [&](Graph<double>&) {
        Rng unused(0);
        return sequence_loss(model, seq, Mode::Train, unused, 1e-4).total;
      },
      model.params(), check_rng, max_coords);
}

inline std::vector<CheckOutcome> model_gradchecks(double tol = 1e-4) {
  std::vector<CheckOutcome> out;
  for (auto v : kAllVariants) {
    auto r = model_gradcheck(v);
    out.push_back(outcome(std::string("model ") + variant_name(v) + " (worst " + r.worst + ")", r.max_rel_error, tol));
  }
  return out;
}

inline std::vector<CheckOutcome> gradcheck_suite() {
  auto out = primitive_gradchecks();
  for (auto& o : model_gradchecks()) out.push_back(std::move(o));
  return out;
}

inline double lstm_scalar_oracle_error(std::uint64_t seed = 3, std::size_t steps = 6) {
  ParameterSet<double> ps;
  auto layer = add_lstm_params(ps, "lstm", 1, 1);
  Rng rng(seed);
  for (auto& p : ps) p.value[0] = rng.uniform(-1.5, 1.5);
  const auto v = [&](const char* name) { return ps[name].value[0]; };
  ScalarLstm oracle{v("lstm.W_i"), v("lstm.W_f"), v("lstm.W_o"), v("lstm.W_c"), v("lstm.U_i"), v("lstm.U_f"),
                    v("lstm.U_o"), v("lstm.U_c"), v("lstm.b_i"), v("lstm.b_f"), v("lstm.b_o"), v("lstm.b_c")};
  double h = 0.0, c = 0.0, err = 0.0;
  Graph<double> g;
  LstmState<double> st{g.constant(Tensor<double>({1})), g.constant(Tensor<double>({1}))};
  for (std::size_t t = 0; t < steps; ++t) {
    const double x = rng.uniform(-1, 1);
    st = lstm_cell_step(g, ps, layer, g.constant(Tensor<double>::scalar(x)), st);
    std::tie(h, c) = oracle.step(x, h, c);
    err = std::max({err, std::abs(st.h.value()[0] - h), std::abs(st.c.value()[0] - c)});
  }
  return err;
}

inline std::vector<CheckOutcome> selftest_suite() {
  std::vector<CheckOutcome> out;
  Rng rng(17);
  for (std::size_t n : {3u, 5u, 8u, 12u, 64u, 100u, 1000u}) {
    std::vector<double> frame(n);
    for (auto& v : frame) v = rng.uniform(-1, 1);
    const std::vector<Complex> cx(frame.begin(), frame.end());
    const auto fast = dft_forward(frame);
    const auto slow = naive_dft(cx);
    out.push_back(outcome("dft vs naive n=" + std::to_string(n), max_abs_diff(fast, slow), 1e-8 * n));
    const auto back = dft_inverse(fast);
    double rt = 0.0;
    for (std::size_t j = 0; j < n; ++j) rt = std::max(rt, std::abs(back.samples[j] - frame[j]));
    out.push_back(outcome("dft round trip n=" + std::to_string(n), rt, 1e-9));
  }
  {
    const std::size_t n = 50;
    std::vector<double> v(2 * n);
    for (auto& x : v) x = rng.uniform(-1, 1);
    const auto again = pack(unpack(v, n), n);
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) e = std::max(e, std::abs(again[i] - v[i]));
    out.push_back(outcome("pack/unpack bijection", e, 1e-12));
  }
  out.push_back(outcome("lstm scalar oracle", lstm_scalar_oracle_error(), 1e-12));
  {
    Model<float> m(tiny_config(Variant::Bilinear));
    TrainingConfig tc;
    auto st = fresh_trainer_state(m, tc);
    st.rng.next();
    const auto ck = make_checkpoint(m, tc, st);
    const auto path = (std::filesystem::temp_directory_path() / "fgen_selftest.fgn").string();
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path);
    std::filesystem::remove(path);
    const bool same = back.params == ck.params && back.accumulators == ck.accumulators && back.rng == ck.rng &&
                      back.epoch == ck.epoch;
    out.push_back(outcome("checkpoint round trip", same ? 0.0 : 1.0, 0.5));
  }
  return out;
}

inline bool print_outcomes(const std::vector<CheckOutcome>& checks, std::FILE* f = stdout) {
  bool ok = true;
  for (const auto& c : checks) {
    std::fprintf(f, "%s  %-48s %.3e (< %.1e)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold);
    ok = ok && c.pass;
  }
  return ok;
}

}  // namespace fgen::verify
