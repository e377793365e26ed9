#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgen/graph.hpp"
#include "fgen/lstm.hpp"
#include "fgen/ops.hpp"
#include "fgen/rng.hpp"

namespace fgen {

enum class Variant { Base, FcLstm, Conv1dLstm, Conv2dLstm, Stacked, Bilinear };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::Base,       Variant::FcLstm,  Variant::Conv1dLstm,
                                                        Variant::Conv2dLstm, Variant::Stacked, Variant::Bilinear};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::FcLstm: return "fc_lstm";
    case Variant::Conv1dLstm: return "conv1d_lstm";
    case Variant::Conv2dLstm: return "conv2d_lstm";
    case Variant::Stacked: return "stacked";
    case Variant::Bilinear: return "bilinear";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (auto v : kAllVariants)
    if (s == variant_name(v)) return v;
  throw std::invalid_argument("unknown architecture '" + s +
                              "' (expected base, fc_lstm, conv1d_lstm, conv2d_lstm, stacked or bilinear)");
}

struct ArchitectureConfig {
  Variant variant = Variant::Base;
  std::size_t frame_size = 4000;  // n; packed dimension D = 2n
  int sample_rate = 16000;
  std::size_t hidden = 2048;
  std::size_t conv_filters = 12;
  std::size_t conv_kernel = 3;
  std::size_t pool = 2;
  std::size_t frames_per_step = 1;  // K, Conv2dLstm only
  std::uint64_t seed = 0;

  std::size_t dim() const { return 2 * frame_size; }
  std::size_t input_dim() const { return frames_per_step * dim(); }

  // Convolution kernel extent [rows, cols]. For Conv2dLstm the row extent is
  // capped at K so that short frame stacks remain valid.
  std::array<std::size_t, 2> conv2d_kernel() const {
    return {std::min(conv_kernel, frames_per_step), conv_kernel};
  }
  std::array<std::size_t, 2> conv2d_pool() const {
    const std::size_t rows = frames_per_step - conv2d_kernel()[0] + 1;
    return {std::min(pool, rows), pool};
  }

  // Width of the vector fed to the (first) LSTM.
  std::size_t lstm_input_dim() const {
    switch (variant) {
      case Variant::Base:
      case Variant::Stacked: return dim();
      case Variant::FcLstm:
      case Variant::Bilinear: return hidden;
      case Variant::Conv1dLstm: return conv_filters * ((dim() - conv_kernel + 1) / pool);
      case Variant::Conv2dLstm: {
        const auto [kh, kw] = conv2d_kernel();
        const auto [ph, pw] = conv2d_pool();
        return conv_filters * ((frames_per_step - kh + 1) / ph) * ((frame_size - kw + 1) / pw);
      }
    }
    return 0;
  }

  void validate() const {
    if (frame_size < 2) throw std::invalid_argument("frame size must be at least 2");
    if (hidden == 0) throw std::invalid_argument("hidden size must be positive");
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    if (frames_per_step == 0) throw std::invalid_argument("frames per step (K) must be at least 1");
    if (variant != Variant::Conv2dLstm && frames_per_step != 1)
      throw std::invalid_argument(std::string(variant_name(variant)) + " requires frames per step K == 1");
    if (variant == Variant::Conv1dLstm || variant == Variant::Conv2dLstm) {
      if (conv_filters == 0 || conv_kernel == 0 || pool == 0)
        throw std::invalid_argument("convolution filters, kernel and pool must be positive");
      const std::size_t width = variant == Variant::Conv1dLstm ? dim() : frame_size;
      if (conv_kernel > width) throw std::invalid_argument("convolution kernel exceeds the input width");
      if ((width - conv_kernel + 1) / pool == 0) throw std::invalid_argument("pooling window exceeds the conv output");
    }
  }
};

// Independent closed form for the number of trainable scalars.
inline std::size_t parameter_count_formula(const ArchitectureConfig& c) {
  const std::size_t H = c.hidden, D = c.dim();
  auto lstm = [H](std::size_t din) { return 4 * (H * din + H * H + H); };
  auto dense = [](std::size_t in, std::size_t out) { return out * in + out; };
  switch (c.variant) {
    case Variant::Base: return lstm(D) + dense(H, D);
    case Variant::FcLstm: return dense(D, H) + lstm(H) + dense(H, D);
    case Variant::Conv1dLstm:
      return c.conv_filters * c.conv_kernel + c.conv_filters + lstm(c.lstm_input_dim()) + dense(H, D);
    case Variant::Conv2dLstm: {
      const auto [kh, kw] = c.conv2d_kernel();
      return c.conv_filters * 2 * kh * kw + c.conv_filters + lstm(c.lstm_input_dim()) + dense(H, D);
    }
    case Variant::Stacked: return lstm(D) + lstm(H) + dense(H, D);
    case Variant::Bilinear: return dense(D, H) + 2 * lstm(H) + dense(H, D);
  }
  return 0;
}

// Glorot-uniform weights, zero biases, forget-gate biases set to 1.
template <class S>
void init_params(ParameterSet<S>& ps, Rng& rng) {
  for (auto& p : ps) {
    const auto& shape = p.value.shape();
    const auto dot = p.name.rfind('.');
    const std::string leaf = p.name.substr(dot + 1);
    if (shape.size() == 1) {
      p.value.fill(leaf == "b_f" ? S{1} : S{0});
      continue;
    }
    std::size_t fan_in, fan_out;
    if (shape.size() == 2) {
      fan_out = shape[0];
      fan_in = shape[1];
    } else {
      std::size_t receptive = 1;
      for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
      fan_out = shape[0] * receptive;
      fan_in = shape[1] * receptive;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : p.value.data()) v = static_cast<S>(rng.uniform(-limit, limit));
  }
}

struct DropoutRates {
  double lstm = 0.0;   // LSTM input and recurrent
  double dense = 0.0;  // after the relu FC frontend
};

// One architecture variant with its parameters and the recurrent state of
// the current unroll. The model owns the graph it records onto; reset_state()
// starts a fresh graph with zero state.
template <class S>
class Model {
 public:
  explicit Model(ArchitectureConfig config) : config_(config) {
    config_.validate();
    layout();
    Rng rng(config_.seed);
    init_params(params_, rng);
  }

  Model(const Model& other) : config_(other.config_), params_(other.params_), layers_(other.layers_), dense_(other.dense_), conv_(other.conv_), dropout_(other.dropout_) {}

  Model& operator=(const Model&) = delete;

  const ArchitectureConfig& config() const { return config_; }
  ParameterSet<S>& params() { return params_; }
  const ParameterSet<S>& params() const { return params_; }
  Graph<S>& graph() { return graph_; }

  std::size_t parameter_count() const { return params_.element_count(); }

  void set_dropout(DropoutRates r) { dropout_ = r; }
  DropoutRates dropout_rates() const { return dropout_; }

  void reset_state() {
    graph_.clear();
    state_.clear();
    for (std::size_t i = 0; i < layers_.size(); ++i)
      state_.push_back({graph_.constant(Tensor<S>({config_.hidden}), "state_h"),
                        graph_.constant(Tensor<S>({config_.hidden}), "state_c")});
    ready_ = true;
  }

  // Replaces the recorded history by constants holding the current state.
  // Only meaningful when no gradient through earlier steps is needed.
  void detach_state() {
    require_ready();
    std::vector<std::pair<Tensor<S>, Tensor<S>>> values;
    for (auto& s : state_) values.emplace_back(s.h.value(), s.c.value());
    graph_.clear();
    state_.clear();
    for (auto& [h, c] : values) state_.push_back({graph_.constant(h, "state_h"), graph_.constant(c, "state_c")});
  }

  // h and c of every LSTM layer, in layer order.
  std::vector<std::pair<Tensor<S>, Tensor<S>>> state_values() const {
    std::vector<std::pair<Tensor<S>, Tensor<S>>> out;
    for (const auto& s : state_) out.emplace_back(s.h.value(), s.c.value());
    return out;
  }

  // Input for timestep t of a frame sequence. Conv2dLstm stacks frames
  // t-K+1 .. t (zeros before the start of the sequence).
  Tensor<S> input_at(std::span<const Tensor<S>> frames, std::size_t t) const {
    const std::size_t K = config_.frames_per_step;
    const std::size_t D = config_.dim();
    if (K == 1) return frames[t];
    std::vector<S> out(K * D, S{0});
    for (std::size_t j = 0; j < K; ++j) {
      if (t + 1 + j < K) continue;
      const auto& f = frames[t + 1 + j - K];
      std::copy(f.data().begin(), f.data().end(), out.begin() + static_cast<std::ptrdiff_t>(j * D));
    }
    return Tensor<S>::vector(std::move(out));
  }

  // One forward step; advances the recurrent state and returns the packed
  // prediction of the next frame (length D).
  Var<S> step(Var<S> x, Mode mode, Rng& rng) {
    require_ready();
    if (x.graph != &graph_) throw std::logic_error("model step: input is not on the model graph");
    if (x.value().rank() != 1 || x.value().size() != config_.input_dim())
      throw std::invalid_argument("model step: input " + shape_str(x.shape()) + ", expected [" +
                                  std::to_string(config_.input_dim()) + "]");
    const LstmDropout ld{dropout_.lstm, dropout_.lstm, mode, &rng};
    auto& g = graph_;
    Var<S> z = x;
    switch (config_.variant) {
      case Variant::Base:
      case Variant::Stacked: break;
      case Variant::FcLstm:
      case Variant::Bilinear:
        z = dropout(dense(g, params_, dense_[0], x, Activation::Relu), dropout_.dense, mode, rng);
        break;
      case Variant::Conv1dLstm: {
        auto img = reshape(x, Shape{1, config_.dim()});
        auto y = conv1d(img, g.parameter(params_.at(conv_.W)), g.parameter(params_.at(conv_.b)));
        z = flatten(maxpool(y, 1, config_.pool));
        break;
      }
      case Variant::Conv2dLstm: {
        auto img = gather(x, conv2d_layout(), Shape{2, config_.frames_per_step, config_.frame_size});
        auto y = conv2d(img, g.parameter(params_.at(conv_.W)), g.parameter(params_.at(conv_.b)));
        const auto [ph, pw] = config_.conv2d_pool();
        z = flatten(maxpool(y, ph, pw));
        break;
      }
    }
    Var<S> top;
    if (config_.variant == Variant::Stacked) {
      state_[0] = lstm_cell_step(g, params_, layers_[0], z, state_[0], ld);
      state_[1] = lstm_cell_step(g, params_, layers_[1], state_[0].h, state_[1], ld);
      top = state_[1].h;
    } else if (config_.variant == Variant::Bilinear) {
      state_[0] = lstm_cell_step(g, params_, layers_[0], z, state_[0], ld);
      state_[1] = lstm_cell_step(g, params_, layers_[1], z, state_[1], ld);
      top = sum_merge(state_[0].h, state_[1].h);
    } else {
      state_[0] = lstm_cell_step(g, params_, layers_[0], z, state_[0], ld);
      top = state_[0].h;
    }
    return dense(g, params_, dense_.back(), top, Activation::None);
  }

  Tensor<S> step(const Tensor<S>& x, Mode mode, Rng& rng) {
    require_ready();
    return step(graph_.constant(x, "input"), mode, rng).value();
  }

  // Leaves of parameters included in the L2 penalty, on the current graph.
  std::vector<Var<S>> decay_leaves() {
    std::vector<Var<S>> out;
    for (auto& p : params_)
      if (p.decay) out.push_back(graph_.parameter(p));
    return out;
  }

  // Swaps the two LSTM branches of a Bilinear model (parameters and state).
  void swap_bilinear_branches() {
    if (config_.variant != Variant::Bilinear) throw std::logic_error("swap_bilinear_branches on non-bilinear model");
    auto swap_values = [this](std::size_t a, std::size_t b) { std::swap(params_.at(a).value, params_.at(b).value); };
    for (std::size_t g = 0; g < 4; ++g) {
      swap_values(layers_[0].W[g], layers_[1].W[g]);
      swap_values(layers_[0].U[g], layers_[1].U[g]);
      swap_values(layers_[0].b[g], layers_[1].b[g]);
    }
    if (state_.size() == 2) std::swap(state_[0], state_[1]);
  }

 private:
  void require_ready() const {
    if (!ready_) throw std::logic_error("model step before reset_state");
  }

  void layout() {
    const std::size_t H = config_.hidden, D = config_.dim();
    switch (config_.variant) {
      case Variant::Base:
        layers_.push_back(add_lstm_params(params_, "lstm", D, H));
        dense_.push_back(add_dense_params(params_, "proj", H, D));
        break;
      case Variant::FcLstm:
        dense_.push_back(add_dense_params(params_, "fc", D, H));
        layers_.push_back(add_lstm_params(params_, "lstm", H, H));
        dense_.push_back(add_dense_params(params_, "proj", H, D));
        break;
      case Variant::Conv1dLstm:
        conv_.W = params_.size();
        params_.add("conv.K", Tensor<S>({config_.conv_filters, 1, config_.conv_kernel}));
        conv_.b = params_.size();
        params_.add("conv.b", Tensor<S>({config_.conv_filters}));
        layers_.push_back(add_lstm_params(params_, "lstm", config_.lstm_input_dim(), H));
        dense_.push_back(add_dense_params(params_, "proj", H, D));
        break;
      case Variant::Conv2dLstm: {
        const auto [kh, kw] = config_.conv2d_kernel();
        conv_.W = params_.size();
        params_.add("conv.K", Tensor<S>({config_.conv_filters, 2, kh, kw}));
        conv_.b = params_.size();
        params_.add("conv.b", Tensor<S>({config_.conv_filters}));
        layers_.push_back(add_lstm_params(params_, "lstm", config_.lstm_input_dim(), H));
        dense_.push_back(add_dense_params(params_, "proj", H, D));
        break;
      }
      case Variant::Stacked:
        layers_.push_back(add_lstm_params(params_, "lstm1", D, H));
        layers_.push_back(add_lstm_params(params_, "lstm2", H, H));
        dense_.push_back(add_dense_params(params_, "proj", H, D));
        break;
      case Variant::Bilinear:
        dense_.push_back(add_dense_params(params_, "fc", D, H));
        layers_.push_back(add_lstm_params(params_, "lstm_a", H, H));
        layers_.push_back(add_lstm_params(params_, "lstm_b", H, H));
        dense_.push_back(add_dense_params(params_, "head", H, D));
        break;
    }
  }

  // Maps K stacked packed frames [K][re(n), im(n)] to a [2][K][n] image:
  // channel 0 holds real parts, channel 1 imaginary parts.
  std::vector<std::size_t> conv2d_layout() const {
    const std::size_t K = config_.frames_per_step, n = config_.frame_size;
    std::vector<std::size_t> idx(2 * K * n);
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t r = 0; r < K; ++r)
        for (std::size_t k = 0; k < n; ++k) idx[(ch * K + r) * n + k] = r * 2 * n + ch * n + k;
    return idx;
  }

  ArchitectureConfig config_;
  ParameterSet<S> params_;
  std::vector<LstmParams> layers_;
  std::vector<DenseParams> dense_;  // frontend (if any) first, output layer last
  DenseParams conv_;
  DropoutRates dropout_;
  Graph<S> graph_;
  std::vector<LstmState<S>> state_;
  bool ready_ = false;
};

template <class S = float>
Model<S> build_model(const ArchitectureConfig& config) {
  return Model<S>(config);
}

}  // namespace fgen
