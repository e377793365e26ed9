#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgen/audio_io.hpp"
#include "fgen/models.hpp"
#include "fgen/spectral.hpp"

namespace fgen {

enum class GenerationMode { Window, FreeRun };

inline GenerationMode parse_generation_mode(const std::string& s) {
  if (s == "window") return GenerationMode::Window;
  if (s == "free_run") return GenerationMode::FreeRun;
  throw std::invalid_argument("unknown generation mode '" + s + "' (expected window or free_run)");
}

// Continues `seed` by `frames` predicted frames; the result is seed followed
// by the generated frames.
//
// Window mode re-runs the model from a zero state over the most recent
// `timesteps` frames for every new frame, so each prediction sees a full
// context. Free-run mode reads the seed once and then feeds every
// prediction straight back as the next input.
template <class S>
std::vector<Tensor<S>> generate(Model<S>& model, std::vector<Tensor<S>> seed, std::size_t frames,
                                GenerationMode mode, std::size_t timesteps) {
  const std::size_t D = model.config().dim();
  for (const auto& f : seed)
    if (f.size() != D) throw std::invalid_argument("generate: seed frame dimension does not match the model");
  Rng unused(0);
  if (mode == GenerationMode::Window) {
    if (timesteps == 0) throw std::invalid_argument("generate: timesteps must be at least 1");
    if (seed.size() < timesteps)
      throw std::invalid_argument("generate: window mode needs a seed of at least " + std::to_string(timesteps) +
                                  " frames, got " + std::to_string(seed.size()));
    auto& work = seed;
    for (std::size_t m = 0; m < frames; ++m) {
      model.reset_state();
      std::span<const Tensor<S>> window(work.data() + work.size() - timesteps, timesteps);
      Tensor<S> y;
      for (std::size_t t = 0; t < timesteps; ++t) y = model.step(model.input_at(window, t), Mode::Eval, unused);
      work.push_back(std::move(y));
    }
    model.reset_state();
    return work;
  }
  if (seed.empty()) throw std::invalid_argument("generate: free-run mode needs at least one seed frame");
  auto& work = seed;
  const std::size_t seed_len = work.size();
  model.reset_state();
  Tensor<S> y;
  for (std::size_t t = 0; t < seed_len; ++t) {
    y = model.step(model.input_at(work, t), Mode::Eval, unused);
    model.detach_state();
  }
  for (std::size_t m = 0; m < frames; ++m) {
    work.push_back(y);
    if (m + 1 == frames) break;
    y = model.step(model.input_at(work, work.size() - 1), Mode::Eval, unused);
    model.detach_state();
  }
  model.reset_state();
  return work;
}

template <class S>
FeatureSequence to_features(std::span<const Tensor<S>> frames, const FrameSpec& spec) {
  FeatureSequence f{spec, {}};
  for (const auto& t : frames) f.vectors.emplace_back(t.data().begin(), t.data().end());
  return f;
}

template <class S>
std::vector<Tensor<S>> to_tensors(const FeatureSequence& f) {
  std::vector<Tensor<S>> out;
  for (const auto& v : f.vectors) out.push_back(Tensor<S>::template from<double>(v));
  return out;
}

struct SynthesisReport {
  std::size_t samples = 0;
  double peak = 0.0;
  double imaginary_residue = 0.0;
  std::size_t clamped = 0;
};

// Inverse-DFT reconstruction written as a mono PCM-16 WAV.
inline SynthesisReport synthesize(const FeatureSequence& features, const std::string& out_path) {
  auto r = reconstruct_clip_detailed(features);
  SynthesisReport rep;
  rep.samples = r.clip.samples.size();
  rep.imaginary_residue = r.imaginary_residue;
  rep.clamped = r.clamped;
  for (double s : r.clip.samples) {
    if (!std::isfinite(s)) throw std::runtime_error("synthesize: non-finite sample");
    rep.peak = std::max(rep.peak, std::abs(s));
  }
  write_wav(out_path, r.clip);
  return rep;
}

}  // namespace fgen
