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
#include <limits>
#include <span>
#include <vector>

#include "hcomb/audio.hpp"
#include "hcomb/error.hpp"
#include "hcomb/f0_grid.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"

namespace hcomb {

struct EstimatorConfig {
  double yin_threshold = 0.15;
  std::size_t analysis_window = 0;  // 0: 2 * T_max
  double transition_width = 8.0;    // grid bins
  double voicing_prior = 0.5;
  double switch_cost = 2.0;         // negative-log units
  // Salience exponent: CMNDF dips are shallow in the neighbourhood of the true
  // period, so raw saliences are sharpened before normalization.
  double salience_exponent = 200.0;
  // Weight for candidates whose period is longer than the detected period by
  // more than 25%. These sit on subharmonic dips of the CMNDF.
  double subharmonic_weight = 0.1;

  std::size_t window_for(const F0Grid& grid) const {
    return analysis_window ? analysis_window : 2 * std::size_t(std::ceil(grid.t_max()));
  }

  void validate(const F0Grid& grid) const {
    if (!(yin_threshold > 0.0 && yin_threshold < 1.0)) throw ConfigError("yin threshold must be in (0, 1)");
    if (window_for(grid) < 2 * std::size_t(std::ceil(grid.t_max()))) {
      throw ConfigError("analysis window must be at least 2 * T_max samples");
    }
    if (!(transition_width > 0.0)) throw ConfigError("transition width must be positive");
    if (!(voicing_prior > 0.0 && voicing_prior < 1.0)) throw ConfigError("voicing prior must be in (0, 1)");
    if (!(switch_cost >= 0.0)) throw ConfigError("switch cost must be nonnegative");
    if (!(salience_exponent > 0.0)) throw ConfigError("salience exponent must be positive");
    if (!(subharmonic_weight >= 0.0 && subharmonic_weight <= 1.0)) {
      throw ConfigError("subharmonic weight must be in [0, 1]");
    }
  }
};

// Cumulative-mean-normalized difference function d'(tau), tau = 0..max_lag,
// integrated over the first window.size() - max_lag samples.
inline std::vector<double> cmndf(std::span<const double> window, std::size_t max_lag) {
  if (window.size() <= max_lag) throw DomainError("cmndf: window shorter than max lag");
  const std::size_t len = window.size() - max_lag;
  std::vector<double> d(max_lag + 1, 0.0);
  double e0 = 0.0;
  for (std::size_t s = 0; s < len; ++s) e0 += window[s] * window[s];
  double e_tau = e0;
  for (std::size_t tau = 1; tau <= max_lag; ++tau) {
    // Slide the energy of window[tau, tau + len).
    e_tau += window[tau + len - 1] * window[tau + len - 1] - window[tau - 1] * window[tau - 1];
    double r = 0.0;
    for (std::size_t s = 0; s < len; ++s) r += window[s] * window[s + tau];
    d[tau] = std::max(0.0, e0 + e_tau - 2.0 * r);
  }
  std::vector<double> out(max_lag + 1, 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau <= max_lag; ++tau) {
    running += d[tau];
    out[tau] = running > 0.0 ? d[tau] * double(tau) / running : 1.0;
  }
  return out;
}

namespace yin_detail {

inline double sample_linear(const std::vector<double>& f, double x) {
  const auto i = std::size_t(std::floor(x));
  if (i + 1 >= f.size()) return f.back();
  const double a = x - double(i);
  return (1.0 - a) * f[i] + a * f[i + 1];
}

}  // namespace yin_detail

// Posterior over the N+1 grid slots for one analysis window.
inline std::vector<double> yin_frame(std::span<const double> window, const F0Grid& grid,
                                     const EstimatorConfig& cfg) {
  cfg.validate(grid);
  const std::size_t lag_hi = std::size_t(std::ceil(grid.t_max()));
  const std::size_t lag_lo = std::size_t(std::floor(grid.t_min()));
  if (window.size() < 2 * lag_hi) throw DomainError("yin_frame: window shorter than 2 * T_max");

  std::vector<double> posterior(grid.label_size(), 0.0);
  bool silent = true;
  for (double x : window) silent = silent && x == 0.0;
  if (silent) {
    posterior[grid.unvoiced_index()] = 1.0;
    return posterior;
  }

  const std::vector<double> dn = cmndf(window, lag_hi + 1);

  // Absolute-threshold pick: first lag under the threshold, followed down to
  // its local minimum; otherwise the global minimum.
  std::size_t pick = lag_lo;
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t tau = lag_lo; tau <= lag_hi; ++tau) {
    if (dn[tau] < d_min) {
      d_min = dn[tau];
      pick = tau;
    }
  }
  for (std::size_t tau = lag_lo; tau <= lag_hi; ++tau) {
    if (dn[tau] < cfg.yin_threshold) {
      while (tau + 1 <= lag_hi + 1 && dn[tau + 1] < dn[tau]) ++tau;
      pick = tau;
      break;
    }
  }
  double refined = double(pick);
  if (pick >= 1 && pick + 1 < dn.size()) {
    const double a = dn[pick - 1] - 2.0 * dn[pick] + dn[pick + 1];
    if (a > 0.0) refined += std::clamp(0.5 * (dn[pick - 1] - dn[pick + 1]) / a, -1.0, 1.0);
  }

  const double unvoiced = std::min(1.0, std::max(0.0, d_min) / cfg.yin_threshold);
  std::vector<double> salience(grid.bin_count());
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.bin_count(); ++i) {
    double s = std::max(0.0, 1.0 - yin_detail::sample_linear(dn, grid.period(i)));
    if (grid.period(i) > 1.25 * refined) s *= cfg.subharmonic_weight;
    salience[i] = s;
    peak = std::max(peak, s);
  }
  // The refined dip quantizes to one grid slot; it carries the peak.
  const std::size_t best = grid.nearest_index(double(grid.sample_rate()) / refined);
  salience[best] = std::max(salience[best], peak);
  peak = salience[best];
  if (peak > 0.0) {
    for (std::size_t i = 0; i < grid.bin_count(); ++i) {
      posterior[i] = (1.0 - unvoiced) * std::pow(salience[i] / peak, cfg.salience_exponent);
    }
  }
  posterior[grid.unvoiced_index()] = unvoiced;
  return posterior;
}

inline constexpr double kEmissionFloor = 1e-8;

// Minimum-cost state path through per-frame posteriors (rows = states, last
// row unvoiced, columns = frames). Costs are negative logs: emissions
// -log(max(p, 1e-8)), voiced->voiced |di|^2 / (2 width^2), voicing switches
// switch_cost, initial -log(prior) / -log(1 - prior). Ties go to the lower
// state index.
inline std::vector<std::size_t> viterbi_path(const Matrix<double>& posteriors,
                                             const EstimatorConfig& cfg) {
  const std::size_t states = posteriors.rows(), frames = posteriors.cols();
  if (states < 2) throw ShapeError("viterbi: need at least one voiced state plus unvoiced");
  if (frames == 0) return {};
  const std::size_t uv = states - 1;
  const double inv_two_w2 = 1.0 / (2.0 * cfg.transition_width * cfg.transition_width);
  auto emission = [&](std::size_t s, std::size_t t) {
    return -std::log(std::max(posteriors(s, t), kEmissionFloor));
  };
  auto transition = [&](std::size_t from, std::size_t to) {
    if ((from == uv) != (to == uv)) return cfg.switch_cost;
    if (from == uv) return 0.0;
    const double d = double(from) - double(to);
    return d * d * inv_two_w2;
  };

  std::vector<double> cost(states), next(states);
  Matrix<std::size_t> back(states, frames);
  for (std::size_t s = 0; s < states; ++s) {
    cost[s] = -std::log(s == uv ? 1.0 - cfg.voicing_prior : cfg.voicing_prior) + emission(s, 0);
  }
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t to = 0; to < states; ++to) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t from = 0; from < states; ++from) {
        const double c = cost[from] + transition(from, to);
        if (c < best) {
          best = c;
          arg = from;
        }
      }
      next[to] = best + emission(to, t);
      back(to, t) = arg;
    }
    cost.swap(next);
  }
  std::vector<std::size_t> path(frames);
  path.back() = std::size_t(std::min_element(cost.begin(), cost.end()) - cost.begin());
  for (std::size_t t = frames - 1; t > 0; --t) path[t - 1] = back(path[t], t);
  return path;
}

inline F0Track viterbi_track(const Matrix<double>& posteriors, const F0Grid& grid,
                             const EstimatorConfig& cfg) {
  if (posteriors.rows() != grid.label_size()) {
    throw ShapeError("viterbi_track: posteriors have " + std::to_string(posteriors.rows()) +
                     " rows, grid expects " + std::to_string(grid.label_size()));
  }
  if (posteriors.cols() == 0) throw DomainError("viterbi_track: no frames");
  const std::vector<std::size_t> path = viterbi_path(posteriors, cfg);
  F0Track track;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const double voicing = std::clamp(1.0 - posteriors(grid.unvoiced_index(), t), 0.0, 1.0);
    track.frames.push_back(make_f0_frame(grid, path[t], voicing));
  }
  return track;
}

struct F0Estimate {
  F0Track track;
  Matrix<double> posteriors;  // (N+1) x N_t
};

// One analysis window per pipeline frame, centered on the frame.
inline F0Estimate estimate_track(const AudioBuffer& buffer, const F0Grid& grid,
                                 const EstimatorConfig& cfg, const FrameConfig& frames = {}) {
  require_pipeline_input(buffer);
  frames.validate();
  cfg.validate(grid);
  if (grid.sample_rate() != buffer.sample_rate) throw RateError("F0 grid and audio sample rates differ");
  if (buffer.samples.empty()) throw DomainError("estimate_track: empty buffer");
  const std::size_t n_t = frames.frame_count(buffer.size());
  const std::size_t w = cfg.window_for(grid);
  F0Estimate out{{}, Matrix<double>(grid.label_size(), n_t)};
  std::vector<double> window(w);
  const auto n = std::ptrdiff_t(buffer.size());
  for (std::size_t t = 0; t < n_t; ++t) {
    const std::ptrdiff_t start =
        std::ptrdiff_t(t * frames.hop_size + frames.frame_size / 2) - std::ptrdiff_t(w / 2);
    for (std::size_t i = 0; i < w; ++i) {
      const std::ptrdiff_t s = start + std::ptrdiff_t(i);
      window[i] = s >= 0 && s < n ? buffer.samples[std::size_t(s)] : 0.0;
    }
    const std::vector<double> p = yin_frame(window, grid, cfg);
    std::copy(p.begin(), p.end(), out.posteriors.col(t).begin());
  }
  out.track = viterbi_track(out.posteriors, grid, cfg);
  return out;
}

}  // namespace hcomb
