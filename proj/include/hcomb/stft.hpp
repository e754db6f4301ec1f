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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "hcomb/error.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"

namespace hcomb {

using Complex = std::complex<double>;

// Y: (N_f/2 + 1) x N_t; bin b sits at angular frequency 2*pi*b/N_f.
struct Spectrogram {
  Matrix<Complex> data;

  std::size_t bin_count() const noexcept { return data.rows(); }
  std::size_t frame_count() const noexcept { return data.cols(); }
};

// Real-input DFT of fixed length backed by FFTW. An instance owns scratch
// buffers, so use one instance per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 2) throw ConfigError("FFT length must be >= 2");
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_.reset(fftw_plan_dft_r2c_1d(int(n), real_.get(), spec_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(int(n), spec_.get(), real_.get(), FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // out[b] = sum_n in[n] e^{-2 pi i b n / N}, b = 0..N/2.
  void forward(std::span<const double> in, std::span<Complex> out) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(forward_.get());
    const auto* s = reinterpret_cast<const Complex*>(spec_.get());
    std::copy(s, s + bins(), out.begin());
  }

  // Normalized inverse (1/N), so inverse(forward(x)) == x.
  void inverse(std::span<const Complex> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), reinterpret_cast<Complex*>(spec_.get()));
    fftw_execute(inverse_.get());
    const double scale = 1.0 / double(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_.get()[i] * scale;
  }

 private:
  struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
  };
  struct PlanFree {
    void operator()(fftw_plan p) const {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  };
  // FFTW's planner is not re-entrant.
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  std::unique_ptr<double, FftwFree> real_;
  std::unique_ptr<fftw_complex, FftwFree> spec_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanFree> forward_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanFree> inverse_;
};

enum class Window { kRect, kSqrtHann };

// Periodic sqrt-Hann: its square sums to a constant at 75% overlap, so the
// same window serves analysis and synthesis.
inline std::vector<double> make_window(Window kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == Window::kSqrtHann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n)));
    }
  }
  return w;
}

template <typename T>
Spectrogram stft(const FramedSignal<T>& frames, Window window) {
  const std::size_t n = frames.frame_size();
  RealFft fft(n);
  const std::vector<double> w = make_window(window, n);
  Spectrogram out{Matrix<Complex>(fft.bins(), frames.frame_count())};
  std::vector<double> buf(n);
  for (std::size_t t = 0; t < frames.frame_count(); ++t) {
    const auto col = frames.frame(t);
    for (std::size_t i = 0; i < n; ++i) buf[i] = w[i] * double(col[i]);
    fft.forward(buf, out.data.col(t));
  }
  return out;
}

// Inverse transform, synthesis window, overlap-add at cfg.hop_size, then
// per-sample division by the summed analysis*synthesis window (floored at
// 1e-8). The result is trimmed to `length` when given.
inline std::vector<double> istft_overlap_add(const Spectrogram& spec, const FrameConfig& cfg,
                                             Window window,
                                             std::optional<std::size_t> length = std::nullopt) {
  cfg.validate();
  if (spec.bin_count() != cfg.bin_count()) {
    throw ShapeError("istft: spectrogram has " + std::to_string(spec.bin_count()) +
                     " bins, frame config expects " + std::to_string(cfg.bin_count()));
  }
  const std::size_t n = cfg.frame_size;
  const std::size_t frames = spec.frame_count();
  const std::size_t full = frames == 0 ? 0 : (frames - 1) * cfg.hop_size + n;
  std::vector<double> acc(full, 0.0), norm(full, 0.0), buf(n);
  const std::vector<double> w = make_window(window, n);
  if (frames > 0) {
    RealFft fft(n);
    for (std::size_t t = 0; t < frames; ++t) {
      fft.inverse(spec.data.col(t), buf);
      const std::size_t start = t * cfg.hop_size;
      for (std::size_t i = 0; i < n; ++i) {
        acc[start + i] += w[i] * buf[i];
        norm[start + i] += w[i] * w[i];
      }
    }
  }
  for (std::size_t i = 0; i < full; ++i) acc[i] /= std::max(norm[i], 1e-8);
  if (length) acc.resize(*length, 0.0);
  return acc;
}

}  // namespace hcomb
