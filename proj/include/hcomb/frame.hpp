// Copyright 2026 The hcomb Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>

#include "hcomb/audio.hpp"
#include "hcomb/error.hpp"
#include "hcomb/matrix.hpp"

namespace hcomb {

// Framing geometry. Defaults: 32 ms frames, 8 ms hop, 16 ms one-sided comb
// context (M * T_max with M = 1, T_max = 768) at 48 kHz.
struct FrameConfig {
  std::size_t frame_size = 1536;
  std::size_t hop_size = 384;
  std::size_t pad = 768;

  std::size_t fft_size() const noexcept { return frame_size; }
  std::size_t bin_count() const noexcept { return frame_size / 2 + 1; }
  std::size_t chunk_size() const noexcept { return frame_size + 2 * pad; }
  // Algorithmic latency in samples: one frame plus the comb filter's future
  // context.
  std::size_t latency() const noexcept { return frame_size + pad; }

  std::size_t frame_count(std::size_t length) const noexcept {
    return (length + hop_size - 1) / hop_size;
  }

  void validate() const {
    if (frame_size == 0 || hop_size == 0) throw ConfigError("frame and hop size must be positive");
    if (frame_size % 2 != 0) throw ConfigError("frame size must be even");
    if (frame_size % hop_size != 0) {
      throw ConfigError("hop size " + std::to_string(hop_size) + " must divide frame size " +
                        std::to_string(frame_size));
    }
  }
};

// X: frame_size x frame_count, column t = samples[t*hop, t*hop + frame_size).
template <typename T = double>
struct FramedSignal {
  Matrix<T> data;

  std::size_t frame_size() const noexcept { return data.rows(); }
  std::size_t frame_count() const noexcept { return data.cols(); }
  std::span<const T> frame(std::size_t t) const { return data.col(t); }
};

// X_in: (frame_size + 2*pad) x frame_count over the zero-padded source. The
// slice [pad, pad + frame_size) of column t is the framed column t.
template <typename T = double>
struct ChunkedSignal {
  Matrix<T> data;
  std::size_t pad = 0;

  std::size_t chunk_size() const noexcept { return data.rows(); }
  std::size_t frame_size() const noexcept { return data.rows() - 2 * pad; }
  std::size_t frame_count() const noexcept { return data.cols(); }
  std::span<const T> chunk(std::size_t t) const { return data.col(t); }
};

namespace frame_detail {

// Copies source[start, start + out.size()) into out, zero outside the source.
template <typename T>
void copy_window(std::span<const double> source, std::ptrdiff_t start, std::span<T> out) {
  const auto n = std::ptrdiff_t(source.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::ptrdiff_t s = start + std::ptrdiff_t(i);
    out[i] = (s >= 0 && s < n) ? T(source[std::size_t(s)]) : T(0);
  }
}

inline void require_nonempty(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("cannot frame an empty signal");
}

}  // namespace frame_detail

template <typename T = double>
FramedSignal<T> frame_signal(std::span<const double> samples, const FrameConfig& cfg) {
  cfg.validate();
  frame_detail::require_nonempty(samples);
  const std::size_t frames = cfg.frame_count(samples.size());
  FramedSignal<T> out{Matrix<T>(cfg.frame_size, frames)};
  for (std::size_t t = 0; t < frames; ++t) {
    frame_detail::copy_window<T>(samples, std::ptrdiff_t(t * cfg.hop_size), out.data.col(t));
  }
  return out;
}

template <typename T = double>
FramedSignal<T> frame_signal(const AudioBuffer& buffer, const FrameConfig& cfg) {
  return frame_signal<T>(std::span<const double>(buffer.samples), cfg);
}

template <typename T = double>
ChunkedSignal<T> chunk_signal(std::span<const double> samples, const FrameConfig& cfg) {
  cfg.validate();
  frame_detail::require_nonempty(samples);
  const std::size_t frames = cfg.frame_count(samples.size());
  ChunkedSignal<T> out{Matrix<T>(cfg.chunk_size(), frames), cfg.pad};
  for (std::size_t t = 0; t < frames; ++t) {
    // Chunk t covers the padded source from t*hop, i.e. the raw source from
    // t*hop - pad.
    frame_detail::copy_window<T>(samples, std::ptrdiff_t(t * cfg.hop_size) - std::ptrdiff_t(cfg.pad),
                                 out.data.col(t));
  }
  return out;
}

template <typename T = double>
ChunkedSignal<T> chunk_signal(const AudioBuffer& buffer, const FrameConfig& cfg) {
  return chunk_signal<T>(std::span<const double>(buffer.samples), cfg);
}

}  // namespace hcomb
