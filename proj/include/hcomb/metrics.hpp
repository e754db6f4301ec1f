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
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "hcomb/error.hpp"
#include "hcomb/matrix.hpp"
#include "hcomb/stft.hpp"

namespace hcomb {

struct LossConfig {
  double compression = 0.3;       // c
  double magnitude_weight = 0.3;  // lambda (weight of the complex term)
  double pitch_weight = 0.1;      // alpha

  void validate() const {
    if (!(compression > 0.0 && compression <= 1.0)) throw ConfigError("compression c must be in (0, 1]");
    if (!(magnitude_weight >= 0.0 && magnitude_weight <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
    if (!(pitch_weight >= 0.0)) throw ConfigError("alpha must be nonnegative");
  }
};

inline constexpr double kCompressFloor = 1e-12;

// |S|^c e^{j arg S}; magnitudes below 1e-12 map to 0.
struct CompressedSpectrum {
  Matrix<Complex> data;

  Matrix<double> magnitude() const {
    Matrix<double> m(data.rows(), data.cols());
    for (std::size_t i = 0; i < data.size(); ++i) m.flat()[i] = std::abs(data.flat()[i]);
    return m;
  }
};

inline CompressedSpectrum compress(const Matrix<Complex>& spec, double c) {
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("compress: exponent must be in (0, 1]");
  CompressedSpectrum out{Matrix<Complex>(spec.rows(), spec.cols())};
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Complex z = spec.flat()[i];
    const double mag = std::abs(z);
    out.data.flat()[i] = mag < kCompressFloor ? Complex(0.0) : z * (std::pow(mag, c) / mag);
  }
  return out;
}

inline CompressedSpectrum compress(const Spectrogram& spec, double c) { return compress(spec.data, c); }

// mean(ReLU(target - estimate)^2): penalizes under-estimation only.
inline double asym_mse(const Matrix<double>& target, const Matrix<double>& estimate) {
  require_same_shape(target, estimate, "asym_mse");
  if (target.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = std::max(0.0, target.flat()[i] - estimate.flat()[i]);
    acc += d * d;
  }
  return acc / double(target.size());
}

struct SeLoss {
  double total = 0.0;
  double magnitude_gain_only = 0.0;  // asym_mse(|S|^c, |S0|^c)
  double magnitude_output = 0.0;     // asym_mse(|S|^c, |S_hat|^c)
  double complex_term = 0.0;         // mean |S^c - S_hat^c|^2
};

// ((1 - lambda) / 2) * (asym(|S|^c, |S0|^c) + asym(|S|^c, |S_hat|^c))
//   + lambda * mean |S^c - S_hat^c|^2, all means over time-frequency.
inline SeLoss se_loss(const Matrix<Complex>& clean, const Matrix<Complex>& output,
                      const Matrix<Complex>& gains_only, const LossConfig& cfg = {}) {
  cfg.validate();
  require_same_shape(clean, output, "se_loss");
  require_same_shape(clean, gains_only, "se_loss");
  const CompressedSpectrum s = compress(clean, cfg.compression);
  const CompressedSpectrum s_hat = compress(output, cfg.compression);
  const CompressedSpectrum s0 = compress(gains_only, cfg.compression);
  const Matrix<double> s_mag = s.magnitude();

  SeLoss loss;
  loss.magnitude_gain_only = asym_mse(s_mag, s0.magnitude());
  loss.magnitude_output = asym_mse(s_mag, s_hat.magnitude());
  if (!clean.empty()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) acc += std::norm(s.data.flat()[i] - s_hat.data.flat()[i]);
    loss.complex_term = acc / double(clean.size());
  }
  loss.total = 0.5 * (1.0 - cfg.magnitude_weight) * (loss.magnitude_gain_only + loss.magnitude_output) +
               cfg.magnitude_weight * loss.complex_term;
  return loss;
}

inline SeLoss se_loss(const Spectrogram& clean, const Spectrogram& output, const Spectrogram& gains_only,
                      const LossConfig& cfg = {}) {
  return se_loss(clean.data, output.data, gains_only.data, cfg);
}

inline double total_loss(double se, double pitch, const LossConfig& cfg = {}) {
  cfg.validate();
  if (se < 0.0 || pitch < 0.0) throw DomainError("total_loss: components must be nonnegative");
  return se + cfg.pitch_weight * pitch;
}

inline constexpr double kSdrCapDb = 100.0;

// Scale-invariant SDR: 10 log10(|b s|^2 / |b s - s_hat|^2), b = <s_hat, s>/|s|^2,
// capped at +100 dB.
inline double sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) {
    throw ShapeError("sdr: lengths differ (" + std::to_string(reference.size()) + " vs " +
                     std::to_string(estimate.size()) + ")");
  }
  double ss = 0.0, se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ss += reference[i] * reference[i];
    se += reference[i] * estimate[i];
  }
  if (ss == 0.0) throw DomainError("sdr: reference is all zeros");
  const double beta = se / ss;
  double target = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = beta * reference[i];
    target += t * t;
    err += (t - estimate[i]) * (t - estimate[i]);
  }
  if (err == 0.0 || target / err > std::pow(10.0, kSdrCapDb / 10.0)) return kSdrCapDb;
  return 10.0 * std::log10(target / err);
}

// Plain SNR of an estimate against a reference, no projection.
inline double snr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) throw ShapeError("snr: lengths differ");
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    s += reference[i] * reference[i];
    e += (reference[i] - estimate[i]) * (reference[i] - estimate[i]);
  }
  if (s == 0.0) throw DomainError("snr: reference is all zeros");
  if (e == 0.0) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(s / e));
}

}  // namespace hcomb
