#pragma once

#include <algorithm>
#include <chrono>
#include <exception>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fgen/audio_io.hpp"
#include "fgen/models.hpp"
#include "fgen/ops.hpp"
#include "fgen/optim.hpp"
#include "fgen/rng.hpp"
#include "fgen/spectral.hpp"

namespace fgen {

// T+1 consecutive packed frames. Step t feeds frame t and is scored against
// frame t+1, so targets are the inputs shifted by one by construction.
template <class S>
struct Sequence {
  std::vector<Tensor<S>> frames;

  std::size_t steps() const { return frames.size() - 1; }
  const Tensor<S>& input(std::size_t t) const { return frames[t]; }
  const Tensor<S>& target(std::size_t t) const { return frames[t + 1]; }
  std::span<const Tensor<S>> inputs() const { return {frames.data(), steps()}; }
};

template <class S>
struct Dataset {
  FrameSpec spec;
  std::size_t timesteps = 0;
  std::vector<Sequence<S>> sequences;

  std::size_t size() const { return sequences.size(); }
};

inline std::size_t sequence_count(std::size_t frames, std::size_t timesteps, std::size_t stride) {
  if (frames < timesteps + 1) return 0;
  return (frames - timesteps - 1) / stride + 1;
}

// Windows of T+1 frames starting every `stride` frames (T+1 by default,
// i.e. non-overlapping); the remainder of each clip is dropped.
template <class S>
void append_sequences(Dataset<S>& ds, const FeatureSequence& features, std::size_t stride = 0) {
  const std::size_t window = ds.timesteps + 1;
  if (stride == 0) stride = window;
  if (features.spec.frame_size != ds.spec.frame_size || features.spec.sample_rate != ds.spec.sample_rate)
    throw std::invalid_argument("feature frame spec differs from dataset frame spec");
  for (std::size_t start = 0; start + window <= features.size(); start += stride) {
    Sequence<S> seq;
    for (std::size_t t = 0; t < window; ++t)
      seq.frames.push_back(Tensor<S>::template from<double>(features.vectors[start + t]));
    ds.sequences.push_back(std::move(seq));
  }
}

template <class S = float>
Dataset<S> build_dataset(std::span<const FeatureSequence> features, const FrameSpec& spec, std::size_t timesteps,
                         std::size_t stride = 0) {
  if (timesteps == 0) throw std::invalid_argument("timesteps must be at least 1");
  Dataset<S> ds{spec, timesteps, {}};
  for (const auto& f : features) append_sequences(ds, f, stride);
  if (ds.sequences.empty()) throw std::invalid_argument("dataset is empty: no clip holds T+1 frames");
  return ds;
}

template <class S = float>
Dataset<S> build_dataset(std::span<const AudioClip> clips, const FrameSpec& spec, std::size_t timesteps,
                         std::size_t stride = 0) {
  std::vector<FeatureSequence> features;
  for (const auto& c : clips)
    if (c.samples.size() >= spec.frame_size) features.push_back(featurize_clip(c, spec));
  return build_dataset<S>(std::span<const FeatureSequence>(features), spec, timesteps, stride);
}

struct TrainingConfig {
  std::size_t timesteps = 40;
  double learning_rate = 1e-4;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double dropout_lstm = 0.5;
  double dropout_dense = 0.2;
  double l2_lambda = 1e-4;
  std::uint64_t epochs = 2000;
  std::size_t batch_size = 8;
  std::vector<std::uint64_t> checkpoint_epochs = {1200, 1500, 1800, 2100};
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  std::size_t stride = 0;  // 0 means T+1
  std::size_t threads = 1;
  bool record_wall_clock = true;

  RmsPropConfig optimizer() const { return {learning_rate, rmsprop_decay, rmsprop_epsilon}; }
  DropoutRates dropout() const { return {dropout_lstm, dropout_dense}; }

  void validate() const {
    if (timesteps == 0) throw std::invalid_argument("timesteps must be at least 1");
    if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw std::invalid_argument("rmsprop decay must be in [0, 1)");
    if (!(rmsprop_epsilon > 0.0)) throw std::invalid_argument("rmsprop epsilon must be positive");
    for (double p : {dropout_lstm, dropout_dense})
      if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probabilities must be in [0, 1)");
    if (!(l2_lambda >= 0.0)) throw std::invalid_argument("l2 lambda must be nonnegative");
    if (clip_norm < 0.0) throw std::invalid_argument("clip norm must be nonnegative");
    if (threads == 0) throw std::invalid_argument("threads must be at least 1");
  }
};

template <class S>
struct SequenceLoss {
  Var<S> total;
  double data = 0.0;  // mean per-step MSE
  double value = 0.0;  // data + L2 (train mode only)
};

// Teacher-forced unroll over one sequence from a fresh state: the dataset
// frame is fed at every step, never a prediction. Loss is the mean over the
// T steps of the per-step MSE, plus lambda * sum w^2 in train mode.
template <class S>
SequenceLoss<S> sequence_loss(Model<S>& model, const Sequence<S>& seq, Mode mode, Rng& rng, double l2_lambda) {
  model.reset_state();
  auto& g = model.graph();
  const std::size_t T = seq.steps();
  if (T == 0) throw std::invalid_argument("sequence_loss: sequence has no steps");
  Var<S> acc;
  for (std::size_t t = 0; t < T; ++t) {
    if (seq.frames[t].size() != model.config().dim())
      throw std::invalid_argument("sequence_loss: frame dimension does not match the model");
    auto x = g.constant(model.input_at(seq.inputs(), t), "input");
    auto pred = model.step(x, mode, rng);
    auto err = mse_loss(pred, g.constant(seq.target(t), "target"));
    acc = t == 0 ? err : add(acc, err);
  }
  SequenceLoss<S> out;
  out.total = T == 1 ? acc : scale(acc, static_cast<S>(1.0 / static_cast<double>(T)));
  out.data = static_cast<double>(out.total.value().item());
  if (mode == Mode::Train && l2_lambda > 0.0) {
    const auto leaves = model.decay_leaves();
    out.total = add(out.total, l2_penalty(g, std::span<const Var<S>>(leaves), l2_lambda));
  }
  out.value = static_cast<double>(out.total.value().item());
  return out;
}

struct EpochRecord {
  std::uint64_t epoch = 0;
  double data_loss = 0.0;
  double total_loss = 0.0;
  double seconds = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// Everything needed to continue a run: epochs completed, optimizer
// accumulators and the run RNG.
template <class S>
struct TrainerState {
  std::uint64_t epoch = 0;
  RmsProp<S> optimizer;
  Rng rng;
};

template <class S>
TrainerState<S> fresh_trainer_state(const Model<S>& model, const TrainingConfig& cfg) {
  return {0, RmsProp<S>(model.params()), Rng(cfg.seed)};
}

template <class S>
struct TrainingSinks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(std::uint64_t epoch, const Model<S>&, const TrainerState<S>&)> on_checkpoint;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class S>
void add_into(ParameterSet<S>& dst, const std::vector<Tensor<S>>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    auto& d = dst.at(k).grad;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[k][i];
  }
}

}  // namespace detail

// Runs epochs state.epoch+1 .. cfg.epochs. Each epoch shuffles the sequences
// with the run RNG, then for every batch averages the per-sequence gradients
// and applies one RMSProp step. Every sequence gets its own dropout RNG drawn
// from the run RNG, so results do not depend on cfg.threads beyond the order
// of the final gradient reduction (fixed by sequence index).
template <class S>
std::vector<EpochRecord> train(Model<S>& model, const Dataset<S>& data, const TrainingConfig& cfg,
                               TrainerState<S>& state, const TrainingSinks<S>& sinks = {}) {
  cfg.validate();
  if (data.sequences.empty()) throw TrainingError("cannot train on an empty dataset");
  model.set_dropout(cfg.dropout());
  auto& params = model.params();
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::vector<EpochRecord> log;

  const std::size_t workers = std::min(cfg.threads, cfg.batch_size);
  std::vector<Model<S>> replicas;
  if (workers > 1)
    for (std::size_t w = 0; w < workers; ++w) replicas.emplace_back(model);

  auto is_checkpoint = [&](std::uint64_t e) {
    return std::find(cfg.checkpoint_epochs.begin(), cfg.checkpoint_epochs.end(), e) != cfg.checkpoint_epochs.end();
  };

  for (std::uint64_t epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    state.rng.shuffle(std::span<std::size_t>(order));
    double data_sum = 0.0, total_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      const S weight = static_cast<S>(1.0 / static_cast<double>(count));
      std::vector<std::uint64_t> seeds(count);
      for (auto& s : seeds) s = state.rng.next();
      std::vector<SequenceLoss<S>> losses(count);
      auto where = [&] {
        return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index);
      };
      try {
        params.zero_grad();
        if (workers <= 1) {
          for (std::size_t b = 0; b < count; ++b) {
            Rng rng(seeds[b]);
            losses[b] = sequence_loss(model, data.sequences[order[start + b]], Mode::Train, rng, cfg.l2_lambda);
            model.graph().backward(losses[b].total, weight);
          }
        } else {
          std::vector<std::vector<Tensor<S>>> grads(count);
          std::vector<std::exception_ptr> errors(workers);
          std::vector<std::thread> pool;
          for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
              try {
                auto& replica = replicas[w];
                for (std::size_t k = 0; k < params.size(); ++k) replica.params().at(k).value = params.at(k).value;
                for (std::size_t b = w; b < count; b += workers) {
                  replica.params().zero_grad();
                  Rng rng(seeds[b]);
                  losses[b] = sequence_loss(replica, data.sequences[order[start + b]], Mode::Train, rng, cfg.l2_lambda);
                  replica.graph().backward(losses[b].total, weight);
                  for (const auto& p : replica.params()) grads[b].push_back(p.grad);
                  replica.reset_state();
                }
              } catch (...) {
                errors[w] = std::current_exception();
              }
            });
          }
          for (auto& t : pool) t.join();
          for (auto& e : errors)
            if (e) std::rethrow_exception(e);
          for (std::size_t b = 0; b < count; ++b) detail::add_into(params, grads[b]);
        }
      } catch (const NonFiniteError& e) {
        throw TrainingError("non-finite value at " + where() + ": " + e.what());
      }
      for (const auto& l : losses) {
        if (!std::isfinite(l.value)) throw TrainingError("non-finite loss at " + where());
        data_sum += l.data;
        total_sum += l.value;
      }
      if (cfg.clip_norm > 0.0) clip_grad_norm(params, cfg.clip_norm);
      state.optimizer.step(params, cfg.optimizer());
    }
    state.epoch = epoch;
    EpochRecord rec{epoch, data_sum / static_cast<double>(n), total_sum / static_cast<double>(n), 0.0};
    if (cfg.record_wall_clock)
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(rec);
    if (sinks.on_epoch) sinks.on_epoch(rec);
    if (sinks.on_checkpoint && is_checkpoint(epoch) && epoch != cfg.epochs) sinks.on_checkpoint(epoch, model, state);
  }
  model.reset_state();
  if (sinks.on_checkpoint) sinks.on_checkpoint(state.epoch, model, state);
  return log;
}

template <class S>
std::vector<EpochRecord> train(Model<S>& model, const Dataset<S>& data, const TrainingConfig& cfg,
                               const TrainingSinks<S>& sinks = {}) {
  auto state = fresh_trainer_state(model, cfg);
  return train(model, data, cfg, state, sinks);
}

}  // namespace fgen
