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

#include <cmath>
#include <cstddef>
#include <complex>
#include <vector>

#include "hcomb/audio.hpp"
#include "hcomb/error.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"
#include "hcomb/stft.hpp"

namespace hcomb {

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  Matrix<double> weights;          // bands x bins
  std::vector<double> centers_hz;  // one per band, strictly increasing
  std::vector<double> edges_hz;    // bands + 2 triangle vertices

  std::size_t band_count() const noexcept { return weights.rows(); }
  std::size_t bin_count() const noexcept { return weights.cols(); }
};

// Triangular mel bands. Band b rises from edge b to its center (edge b+1) and
// falls to edge b+2. The first band is flat below its center and the last
// band flat above its center, so DC and Nyquist are covered.
inline MelFilterbank build_mel_filterbank(std::size_t bands, const FrameConfig& cfg,
                                          double f_lo = 0.0, double f_hi = 24000.0,
                                          int sample_rate = kSampleRate) {
  cfg.validate();
  const double nyquist = 0.5 * sample_rate;
  if (bands < 2) throw ConfigError("mel filterbank needs at least 2 bands");
  if (f_lo < 0.0 || f_hi <= f_lo || f_hi > nyquist) {
    throw ConfigError("mel band limits must satisfy 0 <= f_lo < f_hi <= Nyquist");
  }
  const std::size_t bins = cfg.bin_count();
  const double bin_hz = double(sample_rate) / double(cfg.fft_size());

  MelFilterbank fb;
  fb.weights = Matrix<double>(bands, bins);
  const double mel_lo = hz_to_mel(f_lo), mel_hi = hz_to_mel(f_hi);
  for (std::size_t k = 0; k < bands + 2; ++k) {
    fb.edges_hz.push_back(mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(k) / double(bands + 1)));
  }
  for (std::size_t b = 0; b < bands; ++b) {
    const double left = fb.edges_hz[b], center = fb.edges_hz[b + 1], right = fb.edges_hz[b + 2];
    fb.centers_hz.push_back(center);
    bool any = false;
    for (std::size_t f = 0; f < bins; ++f) {
      const double hz = double(f) * bin_hz;
      double w = 0.0;
      if (hz <= center) {
        w = b == 0 ? 1.0 : (hz > left ? (hz - left) / (center - left) : 0.0);
      } else {
        w = b + 1 == bands ? 1.0 : (hz < right ? (right - hz) / (right - center) : 0.0);
      }
      fb.weights(b, f) = w;
      any = any || w > 0.0;
    }
    // A triangle narrower than one bin spacing may miss every bin; give it
    // the bin nearest its center.
    if (!any) {
      const auto f = std::size_t(std::lround(center / bin_hz));
      fb.weights(b, std::min(f, bins - 1)) = 1.0;
    }
  }
  return fb;
}

// energies(b, t) = sum_f weights(b, f) * |spec(f, t)|^2.
inline Matrix<double> mel_energies(const Spectrogram& spec, const MelFilterbank& fb) {
  if (spec.bin_count() != fb.bin_count()) {
    throw ShapeError("mel_energies: spectrogram has " + std::to_string(spec.bin_count()) +
                     " bins, filterbank expects " + std::to_string(fb.bin_count()));
  }
  Matrix<double> out(fb.band_count(), spec.frame_count());
  std::vector<double> power(spec.bin_count());
  for (std::size_t t = 0; t < spec.frame_count(); ++t) {
    const auto col = spec.data.col(t);
    for (std::size_t f = 0; f < power.size(); ++f) power[f] = std::norm(col[f]);
    for (std::size_t b = 0; b < fb.band_count(); ++b) {
      double acc = 0.0;
      for (std::size_t f = 0; f < power.size(); ++f) acc += fb.weights(b, f) * power[f];
      out(b, t) = acc;
    }
  }
  return out;
}

}  // namespace hcomb
