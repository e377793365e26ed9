#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgen/audio_io.hpp"
#include "fgen/fft.hpp"

namespace fgen {

// Frame geometry: n samples per frame, packed vectors of dimension 2n.
struct FrameSpec {
  std::size_t frame_size = 4000;
  int sample_rate = 16000;

  std::size_t dim() const { return 2 * frame_size; }
  double frame_seconds() const { return static_cast<double>(frame_size) / sample_rate; }

  void validate() const {
    if (frame_size < 2) throw std::invalid_argument("frame size must be at least 2");
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  }
};

using Spectrum = std::vector<Complex>;

// Ordered packed frequency vectors, each of length spec.dim().
struct FeatureSequence {
  FrameSpec spec;
  std::vector<std::vector<double>> vectors;

  std::size_t size() const { return vectors.size(); }
};

// Real part of an inverse DFT plus the magnitude of what was discarded.
struct InverseDft {
  std::vector<double> samples;
  double imaginary_residue = 0.0;  // sum of |Im| over the frame
};

namespace detail {

inline const FftPlan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

}  // namespace detail

// Non-overlapping windows of n samples; a trailing partial window is dropped.
inline std::vector<std::vector<double>> frame_signal(std::span<const double> samples,
                                                     std::size_t n) {
  if (n < 2) throw std::invalid_argument("frame size must be at least 2");
  std::vector<std::vector<double>> frames;
  frames.reserve(samples.size() / n);
  for (std::size_t off = 0; off + n <= samples.size(); off += n)
    frames.emplace_back(samples.begin() + off, samples.begin() + off + n);
  return frames;
}

inline Spectrum dft_forward(std::span<const double> frame) {
  std::vector<Complex> x(frame.begin(), frame.end());
  return detail::plan_for(x.size()).forward(x);
}

inline InverseDft dft_inverse(std::span<const Complex> spectrum) {
  const std::size_t n = spectrum.size();
  const auto raw = detail::plan_for(n).backward(spectrum);
  InverseDft out;
  out.samples.resize(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.samples[j] = raw[j].real() * scale;
    out.imaginary_residue += std::abs(raw[j].imag() * scale);
  }
  return out;
}

// Real block then imaginary block, both scaled by 1/n.
inline std::vector<double> pack(std::span<const Complex> spectrum, std::size_t n) {
  if (spectrum.size() != n) throw std::invalid_argument("spectrum length does not match frame size");
  std::vector<double> v(2 * n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = spectrum[k].real() * scale;
    v[n + k] = spectrum[k].imag() * scale;
  }
  return v;
}

inline Spectrum unpack(std::span<const double> vector, std::size_t n) {
  if (vector.size() != 2 * n)
    throw std::invalid_argument("packed vector has length " + std::to_string(vector.size()) +
                                ", expected " + std::to_string(2 * n));
  Spectrum s(n);
  const double scale = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) s[k] = {vector[k] * scale, vector[n + k] * scale};
  return s;
}

inline FeatureSequence featurize_clip(const AudioClip& clip, const FrameSpec& spec) {
  spec.validate();
  if (clip.sample_rate != spec.sample_rate)
    throw std::invalid_argument("clip sample rate " + std::to_string(clip.sample_rate) +
                                " differs from frame spec rate " +
                                std::to_string(spec.sample_rate) + "; resample first");
  if (clip.samples.size() < spec.frame_size)
    throw std::invalid_argument("clip is shorter than one frame");
  FeatureSequence out{spec, {}};
  for (const auto& frame : frame_signal(clip.samples, spec.frame_size))
    out.vectors.push_back(pack(dft_forward(frame), spec.frame_size));
  return out;
}

struct Reconstruction {
  AudioClip clip;
  double imaginary_residue = 0.0;
  std::size_t clamped = 0;
};

inline Reconstruction reconstruct_clip_detailed(const FeatureSequence& features) {
  const std::size_t n = features.spec.frame_size;
  Reconstruction r;
  r.clip.sample_rate = features.spec.sample_rate;
  r.clip.samples.reserve(features.size() * n);
  for (const auto& v : features.vectors) {
    auto inv = dft_inverse(unpack(v, n));
    r.imaginary_residue += inv.imaginary_residue;
    for (double s : inv.samples) {
      if (s > 1.0 || s < -1.0) ++r.clamped;
      r.clip.samples.push_back(std::clamp(s, -1.0, 1.0));
    }
  }
  return r;
}

inline AudioClip reconstruct_clip(const FeatureSequence& features) {
  return reconstruct_clip_detailed(features).clip;
}

// Binary PGM: one column per frame, rows are bins 0..n/2 with bin 0 at the
// bottom. Pixels are log(1+|X|) scaled so the loudest bin maps to 255.
inline std::string spectrogram_pgm(const AudioClip& clip, const FrameSpec& spec) {
  spec.validate();
  if (clip.sample_rate != spec.sample_rate)
    throw std::invalid_argument("clip sample rate differs from frame spec rate");
  const auto frames = frame_signal(clip.samples, spec.frame_size);
  if (frames.empty()) throw std::invalid_argument("clip is shorter than one frame");
  const std::size_t width = frames.size();
  const std::size_t height = spec.frame_size / 2 + 1;
  std::vector<double> mag(width * height);
  double peak = 0.0;
  for (std::size_t x = 0; x < width; ++x) {
    const auto s = dft_forward(frames[x]);
    for (std::size_t k = 0; k < height; ++k) {
      const double m = std::log1p(std::abs(s[k]));
      mag[k * width + x] = m;
      peak = std::max(peak, m);
    }
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + width * height);
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t k = height - 1 - row;
    for (std::size_t x = 0; x < width; ++x) {
      const double v = peak > 0.0 ? 255.0 * mag[k * width + x] / peak : 0.0;
      out[header + row * width + x] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v)));
    }
  }
  return out;
}

}  // namespace fgen
