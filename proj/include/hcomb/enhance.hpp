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
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcomb/audio.hpp"
#include "hcomb/comb_bank.hpp"
#include "hcomb/error.hpp"
#include "hcomb/f0_estimator.hpp"
#include "hcomb/f0_grid.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"
#include "hcomb/mel.hpp"
#include "hcomb/stft.hpp"

namespace hcomb {

// Filter strength R, (N_f/2 + 1) x N_t, entries in [0, 1].
struct StrengthMap {
  Matrix<double> data;
};

// Gain G, (N_f/2 + 1) x N_t, entries in [0, g_max].
struct GainMap {
  Matrix<double> data;
};

inline constexpr double kRescaleGamma = 0.5;

struct BlendConfig {
  double gamma = 1.0;  // 1: plain blend; kRescaleGamma: rescaled

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  }
};

inline constexpr double kMaskEpsilon = 1e-12;

// Ideal ratio mask per mel band, sqrt(E_s / (E_s + E_n)) with
// E_n = max(E_noisy - E_s, 0) + eps, interpolated to bins through the
// filterbank weights and clamped to [0, 1].
inline GainMap oracle_gain(const Spectrogram& noisy, const Spectrogram& clean, const MelFilterbank& fb) {
  require_same_shape(noisy.data, clean.data, "oracle_gain");
  const Matrix<double> e_noisy = mel_energies(noisy, fb);
  const Matrix<double> e_clean = mel_energies(clean, fb);
  std::vector<double> column_sum(fb.bin_count(), 0.0);
  for (std::size_t f = 0; f < fb.bin_count(); ++f) {
    for (std::size_t b = 0; b < fb.band_count(); ++b) column_sum[f] += fb.weights(b, f);
  }
  GainMap g{Matrix<double>(noisy.bin_count(), noisy.frame_count())};
  std::vector<double> band(fb.band_count());
  for (std::size_t t = 0; t < noisy.frame_count(); ++t) {
    for (std::size_t b = 0; b < fb.band_count(); ++b) {
      const double es = e_clean(b, t);
      const double en = std::max(e_noisy(b, t) - es, 0.0) + kMaskEpsilon;
      band[b] = std::sqrt(es / (es + en));
    }
    for (std::size_t f = 0; f < fb.bin_count(); ++f) {
      double acc = 0.0;
      for (std::size_t b = 0; b < fb.band_count(); ++b) acc += fb.weights(b, f) * band[b];
      g.data(f, t) = std::clamp(acc / column_sum[f], 0.0, 1.0);
    }
  }
  return g;
}

enum class StrengthResolution { kPerBin, kBandPooled };

inline constexpr double kStrengthFloor = 1e-12;

// Least-squares blend weight per bin:
// argmin_r |r Y_cf + (1 - r) Y - S|^2 = Re<S - Y, Y_cf - Y> / |Y_cf - Y|^2,
// clamped to [0, 1]; 0 where the two paths coincide. The band-pooled mode
// averages r over mel bands and interpolates back like the gain.
inline StrengthMap oracle_strength(const Spectrogram& noisy, const Spectrogram& filtered,
                                   const Spectrogram& clean,
                                   StrengthResolution resolution = StrengthResolution::kPerBin,
                                   const MelFilterbank* fb = nullptr) {
  require_same_shape(noisy.data, filtered.data, "oracle_strength");
  require_same_shape(noisy.data, clean.data, "oracle_strength");
  StrengthMap r{Matrix<double>(noisy.bin_count(), noisy.frame_count())};
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const Complex y = noisy.data.flat()[i];
    const Complex diff = filtered.data.flat()[i] - y;
    const double den = std::norm(diff);
    if (den < kStrengthFloor) continue;
    const double num = std::real((clean.data.flat()[i] - y) * std::conj(diff));
    r.data.flat()[i] = std::clamp(num / den, 0.0, 1.0);
  }
  if (resolution == StrengthResolution::kBandPooled) {
    if (!fb || fb->bin_count() != noisy.bin_count()) {
      throw ConfigError("band-pooled strength needs a matching mel filterbank");
    }
    Matrix<double> pooled(r.data.rows(), r.data.cols());
    std::vector<double> band(fb->band_count());
    for (std::size_t t = 0; t < r.data.cols(); ++t) {
      for (std::size_t b = 0; b < fb->band_count(); ++b) {
        double num = 0.0, den = 0.0;
        for (std::size_t f = 0; f < fb->bin_count(); ++f) {
          num += fb->weights(b, f) * r.data(f, t);
          den += fb->weights(b, f);
        }
        band[b] = den > 0.0 ? num / den : 0.0;
      }
      for (std::size_t f = 0; f < fb->bin_count(); ++f) {
        double num = 0.0, den = 0.0;
        for (std::size_t b = 0; b < fb->band_count(); ++b) {
          num += fb->weights(b, f) * band[b];
          den += fb->weights(b, f);
        }
        pooled(f, t) = std::clamp(num / den, 0.0, 1.0);
      }
    }
    r.data = std::move(pooled);
  }
  return r;
}

// Y_out = (R^gamma Y_cf + (1 - R^gamma) Y) G, elementwise.
inline Spectrogram blend(const Spectrogram& noisy, const Spectrogram& filtered, const StrengthMap& strength,
                         const GainMap& gain, const BlendConfig& cfg = {}) {
  cfg.validate();
  require_same_shape(noisy.data, filtered.data, "blend");
  require_same_shape(noisy.data, strength.data, "blend");
  require_same_shape(noisy.data, gain.data, "blend");
  Spectrogram out{Matrix<Complex>(noisy.bin_count(), noisy.frame_count())};
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double r = cfg.gamma == 1.0 ? strength.data.flat()[i] : std::pow(strength.data.flat()[i], cfg.gamma);
    out.data.flat()[i] =
        (r * filtered.data.flat()[i] + (1.0 - r) * noisy.data.flat()[i]) * gain.data.flat()[i];
  }
  return out;
}

// Everything a provider may look at for one utterance.
struct ProviderContext {
  const Spectrogram& noisy;     // Y
  const Spectrogram& filtered;  // Y_cf
  const Spectrogram* clean;     // S, when a reference was supplied
  const F0Track& track;
  const MelFilterbank& mel;
};

class GainProvider {
 public:
  virtual ~GainProvider() = default;
  virtual GainMap gain(const ProviderContext& ctx) const = 0;
};

class StrengthProvider {
 public:
  virtual ~StrengthProvider() = default;
  virtual StrengthMap strength(const ProviderContext& ctx) const = 0;
};

namespace provider_detail {

inline const Spectrogram& require_clean(const ProviderContext& ctx, const char* who) {
  if (!ctx.clean) throw ConfigError(std::string(who) + " requires a clean reference");
  return *ctx.clean;
}

inline void require_map_shape(const Matrix<double>& m, const Spectrogram& like, const char* what) {
  if (m.rows() != like.bin_count() || m.cols() != like.frame_count()) {
    throw ShapeError(std::string(what) + " matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(like.bin_count()) + "x" +
                     std::to_string(like.frame_count()) + " (bins x N_t)");
  }
}

}  // namespace provider_detail

class OracleGain final : public GainProvider {
 public:
  GainMap gain(const ProviderContext& ctx) const override {
    return oracle_gain(ctx.noisy, provider_detail::require_clean(ctx, "oracle gain"), ctx.mel);
  }
};

class OracleStrength final : public StrengthProvider {
 public:
  explicit OracleStrength(StrengthResolution resolution = StrengthResolution::kPerBin)
      : resolution_(resolution) {}
  StrengthMap strength(const ProviderContext& ctx) const override {
    return oracle_strength(ctx.noisy, ctx.filtered, provider_detail::require_clean(ctx, "oracle strength"),
                           resolution_, &ctx.mel);
  }

 private:
  StrengthResolution resolution_;
};

class ConstantGain final : public GainProvider {
 public:
  explicit ConstantGain(double value) : value_(value) {}
  GainMap gain(const ProviderContext& ctx) const override {
    return {Matrix<double>(ctx.noisy.bin_count(), ctx.noisy.frame_count(), value_)};
  }

 private:
  double value_;
};

class ConstantStrength final : public StrengthProvider {
 public:
  explicit ConstantStrength(double value) : value_(value) {}
  StrengthMap strength(const ProviderContext& ctx) const override {
    return {Matrix<double>(ctx.noisy.bin_count(), ctx.noisy.frame_count(), value_)};
  }

 private:
  double value_;
};

// Precomputed maps, e.g. loaded from HCF1 files produced by a trained model.
class MatrixGain final : public GainProvider {
 public:
  explicit MatrixGain(Matrix<double> m) : m_(std::move(m)) {}
  GainMap gain(const ProviderContext& ctx) const override {
    provider_detail::require_map_shape(m_, ctx.noisy, "gain");
    return {m_};
  }

 private:
  Matrix<double> m_;
};

class MatrixStrength final : public StrengthProvider {
 public:
  explicit MatrixStrength(Matrix<double> m) : m_(std::move(m)) {}
  StrengthMap strength(const ProviderContext& ctx) const override {
    provider_detail::require_map_shape(m_, ctx.noisy, "strength");
    return {m_};
  }

 private:
  Matrix<double> m_;
};

struct EnhanceConfig {
  FrameConfig frame;
  BlendConfig blend;
  EstimatorConfig estimator;
  double f_min = 62.5;
  double f_max = 500.0;
  std::size_t f0_bins = 225;
  std::size_t order = 1;  // M
  std::size_t mel_bands = 80;
  double max_gain = 1.0;
  Window window = Window::kSqrtHann;
};

struct EnhanceResult {
  AudioBuffer audio;      // ISTFT(Y_out)
  AudioBuffer gain_only;  // ISTFT(Y o G)
  F0Track track;
  StrengthMap strength;
  GainMap gain;
  std::size_t latency_samples = 0;
};

// Batch enhancement of one utterance: framing and chunking, F0 track,
// low-cost comb filtering, windowed FFT of X and X_cf, providers, blend,
// overlap-add. An instance is immutable and can be reused across calls.
class Enhancer {
 public:
  explicit Enhancer(const EnhanceConfig& cfg, std::optional<CombFilterBank> bank = std::nullopt)
      : cfg_(cfg),
        grid_(cfg.f_min, cfg.f_max, cfg.f0_bins),
        bank_(bank ? std::move(*bank) : CombFilterBank::build(grid_, cfg.order)),
        mel_(build_mel_filterbank(cfg.mel_bands, cfg.frame)) {
    cfg_.frame.validate();
    cfg_.blend.validate();
    cfg_.estimator.validate(grid_);
    if (!(cfg_.max_gain > 0.0)) throw ConfigError("max gain must be positive");
    if (cfg_.frame.pad != bank_.center()) {
      throw ConfigError("frame pad " + std::to_string(cfg_.frame.pad) + " must equal M * T_max = " +
                        std::to_string(bank_.center()));
    }
    if (bank_.candidate_count() != grid_.label_size()) throw ConfigError("filter bank does not match F0 grid");
  }

  const EnhanceConfig& config() const noexcept { return cfg_; }
  const F0Grid& grid() const noexcept { return grid_; }
  const CombFilterBank& bank() const noexcept { return bank_; }
  const MelFilterbank& mel() const noexcept { return mel_; }

  Spectrogram analyze(const AudioBuffer& audio) const {
    return stft(frame_signal(audio, cfg_.frame), cfg_.window);
  }

  EnhanceResult run(const AudioBuffer& noisy, const GainProvider& gains, const StrengthProvider& strengths,
                    const F0Track* track = nullptr, const AudioBuffer* clean = nullptr) const {
    require_pipeline_input(noisy);
    if (clean) {
      require_pipeline_input(*clean);
      if (clean->size() != noisy.size()) {
        throw ShapeError("clean reference has " + std::to_string(clean->size()) + " samples, noisy has " +
                         std::to_string(noisy.size()));
      }
    }
    const std::size_t n_t = cfg_.frame.frame_count(noisy.size());

    EnhanceResult out;
    out.latency_samples = cfg_.frame.latency();
    if (track) {
      if (track->size() != n_t) {
        throw ShapeError("F0 track has " + std::to_string(track->size()) + " frames, expected N_t = " +
                         std::to_string(n_t));
      }
      out.track = *track;
    } else {
      out.track = estimate_track(noisy, grid_, cfg_.estimator, cfg_.frame).track;
    }

    const FramedSignal<double> frames = frame_signal(noisy, cfg_.frame);
    const ChunkedSignal<double> chunks = chunk_signal(noisy, cfg_.frame);
    const FilteredFrames<double> filtered = filter_inference(bank_, chunks, out.track);
    const Spectrogram y = stft(frames, cfg_.window);
    const Spectrogram y_cf = stft(filtered, cfg_.window);
    std::optional<Spectrogram> s;
    if (clean) s = analyze(*clean);

    const ProviderContext ctx{y, y_cf, s ? &*s : nullptr, out.track, mel_};
    out.gain = gains.gain(ctx);
    out.strength = strengths.strength(ctx);
    provider_detail::require_map_shape(out.gain.data, y, "gain");
    provider_detail::require_map_shape(out.strength.data, y, "strength");
    sanitize(out);

    const Spectrogram y_out = blend(y, y_cf, out.strength, out.gain, cfg_.blend);
    out.audio = {istft_overlap_add(y_out, cfg_.frame, cfg_.window, noisy.size()), noisy.sample_rate};

    Spectrogram masked{y.data};
    for (std::size_t i = 0; i < masked.data.size(); ++i) masked.data.flat()[i] *= out.gain.data.flat()[i];
    out.gain_only = {istft_overlap_add(masked, cfg_.frame, cfg_.window, noisy.size()), noisy.sample_rate};
    return out;
  }

 private:
  // R clamped to [0, 1] and zeroed on unvoiced frames; G clamped to
  // [0, max_gain].
  void sanitize(EnhanceResult& r) const {
    for (double& g : r.gain.data.flat()) {
      if (!std::isfinite(g)) throw DomainError("gain provider produced a non-finite value");
      g = std::clamp(g, 0.0, cfg_.max_gain);
    }
    for (std::size_t t = 0; t < r.strength.data.cols(); ++t) {
      const bool voiced = grid_.is_voiced(r.track[t].grid_index);
      for (double& v : r.strength.data.col(t)) {
        if (!std::isfinite(v)) throw DomainError("strength provider produced a non-finite value");
        v = voiced ? std::clamp(v, 0.0, 1.0) : 0.0;
      }
    }
  }

  EnhanceConfig cfg_;
  F0Grid grid_;
  CombFilterBank bank_;
  MelFilterbank mel_;
};

}  // namespace hcomb
