#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgen/binio.hpp"

namespace fgen {

// Mono waveform, samples normalized to [-1, 1].
struct AudioClip {
  int sample_rate = 16000;
  std::vector<double> samples;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct WavError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::int16_t quantize_pcm16(double s) {
  s = std::clamp(s, -1.0, 1.0);
  const double q = std::round(s * 32768.0);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

}  // namespace detail

// Reads a RIFF/WAVE PCM-16 file with one or two channels. Stereo is mixed
// down by averaging; unknown chunks are skipped.
inline AudioClip read_wav(const std::string& path) {
  std::vector<char> raw;
  try {
    raw = binio::read_file(path);
  } catch (const std::runtime_error& e) {
    throw WavError(e.what());
  }
  binio::Reader r(std::move(raw));
  try {
    const std::string magic = r.get_string(4, "RIFF magic");
    if (magic != "RIFF")
      throw WavError("'" + path + "' is not a RIFF file (magic '" + magic + "')");
    r.get<std::uint32_t>("RIFF size");
    if (r.get_string(4, "WAVE tag") != "WAVE")
      throw WavError("'" + path + "' is not a WAVE file");

    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (true) {
      if (r.remaining() < 8) throw WavError("'" + path + "' has no data chunk");
      const std::string id = r.get_string(4, "chunk id");
      const auto size = r.get<std::uint32_t>("chunk size");
      if (id == "fmt ") {
        if (size < 16) throw WavError("fmt chunk too small");
        const auto tag = r.get<std::uint16_t>("format tag");
        channels = r.get<std::uint16_t>("channel count");
        rate = r.get<std::uint32_t>("sample rate");
        r.get<std::uint32_t>("byte rate");
        r.get<std::uint16_t>("block align");
        bits = r.get<std::uint16_t>("bits per sample");
        r.skip(size - 16 + (size & 1u), "fmt chunk");
        if (tag != 1)
          throw WavError("unsupported WAV format tag " + std::to_string(tag) +
                         " (only PCM is accepted)");
        if (bits != 16)
          throw WavError("unsupported bit depth " + std::to_string(bits) +
                         " (only 16-bit PCM is accepted)");
        if (channels != 1 && channels != 2)
          throw WavError("unsupported channel count " + std::to_string(channels));
        if (rate == 0) throw WavError("sample rate is zero");
        have_fmt = true;
      } else if (id == "data") {
        if (!have_fmt) throw WavError("data chunk precedes fmt chunk");
        if (r.remaining() < size) throw WavError("truncated data chunk in '" + path + "'");
        const std::size_t frames = size / (2u * channels);
        const char* p = r.peek(size, "data chunk");
        AudioClip clip;
        clip.sample_rate = static_cast<int>(rate);
        clip.samples.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) {
          double acc = 0.0;
          for (std::uint16_t c = 0; c < channels; ++c) {
            std::int16_t v;
            std::memcpy(&v, p + 2 * (i * channels + c), 2);
            acc += v / 32768.0;
          }
          clip.samples[i] = acc / channels;
        }
        return clip;
      } else {
        r.skip(size + (size & 1u), "chunk");
      }
    }
  } catch (const binio::FormatError& e) {
    throw WavError("'" + path + "': " + e.what());
  }
}

// Writes mono PCM-16. Samples are clamped to [-1, 1] before quantization.
inline void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw WavError("sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  binio::Writer w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(36 + data_bytes);
  w.put_bytes("WAVE");
  w.put_bytes("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(1);
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate) * 2);
  w.put<std::uint16_t>(2);
  w.put<std::uint16_t>(16);
  w.put_bytes("data");
  w.put<std::uint32_t>(data_bytes);
  for (double s : clip.samples) w.put<std::int16_t>(detail::quantize_pcm16(s));
  try {
    binio::write_file(path, w.bytes());
  } catch (const std::runtime_error& e) {
    throw WavError(e.what());
  }
}

// Linear interpolation onto a new sample grid. Output sample i sits at input
// position i * src / dst, computed in exact integer arithmetic so that grid
// points shared by both rates reproduce the input exactly.
inline AudioClip resample_linear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("target sample rate must be positive");
  if (target_rate == clip.sample_rate || clip.samples.empty())
    return AudioClip{target_rate, clip.samples};
  const auto src = static_cast<std::uint64_t>(clip.sample_rate);
  const auto dst = static_cast<std::uint64_t>(target_rate);
  const std::uint64_t last = clip.samples.size() - 1;
  const std::uint64_t out_len = last * dst / src + 1;
  AudioClip out{target_rate, std::vector<double>(out_len)};
  for (std::uint64_t i = 0; i < out_len; ++i) {
    const std::uint64_t num = i * src;
    const std::uint64_t idx = num / dst;
    const std::uint64_t rem = num % dst;
    if (rem == 0 || idx >= last) {
      out.samples[i] = clip.samples[std::min(idx, last)];
    } else {
      const double frac = static_cast<double>(rem) / static_cast<double>(dst);
      out.samples[i] = clip.samples[idx] + frac * (clip.samples[idx + 1] - clip.samples[idx]);
    }
  }
  return out;
}

}  // namespace fgen
