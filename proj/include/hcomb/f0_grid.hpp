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
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hcomb/audio.hpp"
#include "hcomb/error.hpp"
#include "hcomb/matrix.hpp"

namespace hcomb {

// Discrete candidate F0 lattice: `bins` periods equally spaced in samples
// from T_max = fs/f_min (index 0, lowest frequency) down to T_min = fs/f_max
// (index bins-1), plus one unvoiced slot at index `bins`.
class F0Grid {
 public:
  F0Grid(double f_min = 62.5, double f_max = 500.0, std::size_t bins = 225,
         int sample_rate = kSampleRate)
      : f_min_(f_min), f_max_(f_max), sample_rate_(sample_rate) {
    if (!(f_min > 0.0) || !(f_max > f_min)) throw ConfigError("F0 grid needs 0 < f_min < f_max");
    if (bins < 2) throw ConfigError("F0 grid needs at least 2 bins");
    if (sample_rate <= 0 || f_max > 0.5 * sample_rate) {
      throw ConfigError("F0 grid upper frequency exceeds Nyquist");
    }
    t_max_ = double(sample_rate) / f_min;
    t_min_ = double(sample_rate) / f_max;
    delta_ = (t_max_ - t_min_) / double(bins - 1);
    periods_.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) periods_[i] = t_max_ - double(i) * delta_;
    periods_.back() = t_min_;
  }

  std::size_t bin_count() const noexcept { return periods_.size(); }
  std::size_t label_size() const noexcept { return periods_.size() + 1; }
  std::size_t unvoiced_index() const noexcept { return periods_.size(); }
  bool is_voiced(std::size_t index) const noexcept { return index < periods_.size(); }

  double f_min() const noexcept { return f_min_; }
  double f_max() const noexcept { return f_max_; }
  int sample_rate() const noexcept { return sample_rate_; }
  double t_max() const noexcept { return t_max_; }
  double t_min() const noexcept { return t_min_; }
  double period_step() const noexcept { return delta_; }

  const std::vector<double>& periods() const noexcept { return periods_; }
  double period(std::size_t i) const { return periods_.at(i); }
  // Integer period used when building filters.
  std::size_t rounded_period(std::size_t i) const { return std::size_t(std::lround(period(i))); }
  std::size_t rounded_t_max() const { return std::size_t(std::lround(t_max_)); }
  double frequency(std::size_t i) const { return double(sample_rate_) / period(i); }

  // Index of the grid period nearest to fs/f0. Ties go to the longer period;
  // out-of-range frequencies clamp to the end bins.
  std::size_t nearest_index(double f0) const {
    if (!(f0 > 0.0) || !std::isfinite(f0)) {
      throw DomainError("nearest_index: F0 must be positive and finite, got " + std::to_string(f0));
    }
    const double p = double(sample_rate_) / f0;
    if (p >= t_max_) return 0;
    if (p <= t_min_) return bin_count() - 1;
    auto lo = std::size_t(std::floor((t_max_ - p) / delta_));
    lo = std::min(lo, bin_count() - 2);
    const double d_lo = std::abs(periods_[lo] - p);
    const double d_hi = std::abs(periods_[lo + 1] - p);
    return d_hi < d_lo ? lo + 1 : lo;
  }

 private:
  double f_min_, f_max_;
  int sample_rate_;
  double t_max_ = 0.0, t_min_ = 0.0, delta_ = 0.0;
  std::vector<double> periods_;
};

// Soft training target over the N+1 grid slots.
struct F0Label {
  std::vector<double> values;
};

inline constexpr double kLabelWidth = 50.0;

// Voiced: exp(-(i-n)^2/50) over voiced bins, unvoiced slot 0. Unvoiced:
// one-hot at the unvoiced slot. Edge Gaussians are truncated, not
// renormalized.
inline F0Label gaussian_label(const F0Grid& grid, std::size_t target) {
  if (target > grid.unvoiced_index()) {
    throw DomainError("gaussian_label: index " + std::to_string(target) + " outside [0, " +
                      std::to_string(grid.unvoiced_index()) + "]");
  }
  F0Label label{std::vector<double>(grid.label_size(), 0.0)};
  if (!grid.is_voiced(target)) {
    label.values[target] = 1.0;
    return label;
  }
  for (std::size_t i = 0; i < grid.bin_count(); ++i) {
    const double d = double(i) - double(target);
    label.values[i] = std::exp(-d * d / kLabelWidth);
  }
  return label;
}

inline std::vector<double> one_hot(const F0Grid& grid, std::size_t index) {
  if (index > grid.unvoiced_index()) {
    throw DomainError("one_hot: index " + std::to_string(index) + " outside [0, " +
                      std::to_string(grid.unvoiced_index()) + "]");
  }
  std::vector<double> v(grid.label_size(), 0.0);
  v[index] = 1.0;
  return v;
}

inline constexpr double kBceEpsilon = 1e-7;

// Binary cross-entropy summed over slots for one frame. Estimates are clamped
// to [eps, 1 - eps].
inline double bce_loss(std::span<const double> label, std::span<const double> estimate) {
  if (label.size() != estimate.size()) {
    throw ShapeError("bce_loss: label has " + std::to_string(label.size()) +
                     " entries, estimate has " + std::to_string(estimate.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const double e = std::clamp(estimate[i], kBceEpsilon, 1.0 - kBceEpsilon);
    loss -= label[i] * std::log(e) + (1.0 - label[i]) * std::log(1.0 - e);
  }
  return loss;
}

// Mean per-frame BCE; columns are frames.
inline double bce_loss(const Matrix<double>& labels, const Matrix<double>& estimates) {
  require_same_shape(labels, estimates, "bce_loss");
  if (labels.cols() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < labels.cols(); ++t) total += bce_loss(labels.col(t), estimates.col(t));
  return total / double(labels.cols());
}

struct F0Frame {
  std::size_t grid_index = 0;
  double f0_hz = 0.0;    // 0 for unvoiced
  double voicing = 0.0;  // in [0, 1]
};

// One entry per pipeline frame.
struct F0Track {
  std::vector<F0Frame> frames;

  std::size_t size() const noexcept { return frames.size(); }
  const F0Frame& operator[](std::size_t t) const { return frames[t]; }
};

inline F0Frame make_f0_frame(const F0Grid& grid, std::size_t index, double voicing) {
  if (index > grid.unvoiced_index()) {
    throw DomainError("grid index " + std::to_string(index) + " outside [0, " +
                      std::to_string(grid.unvoiced_index()) + "]");
  }
  return {index, grid.is_voiced(index) ? grid.frequency(index) : 0.0, voicing};
}

inline F0Track track_from_indices(const F0Grid& grid, std::span<const std::size_t> indices) {
  F0Track track;
  for (std::size_t i : indices) {
    track.frames.push_back(make_f0_frame(grid, i, grid.is_voiced(i) ? 1.0 : 0.0));
  }
  return track;
}

// Labels for a whole track; column t is gaussian_label(track[t]).
inline Matrix<double> track_labels(const F0Grid& grid, const F0Track& track) {
  Matrix<double> out(grid.label_size(), track.size());
  for (std::size_t t = 0; t < track.size(); ++t) {
    const F0Label l = gaussian_label(grid, track[t].grid_index);
    std::copy(l.values.begin(), l.values.end(), out.col(t).begin());
  }
  return out;
}

inline constexpr const char* kTrackCsvHeader = "frame,grid_index,f0_hz,voicing";

inline void write_track_csv(const F0Track& track, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << kTrackCsvHeader << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t t = 0; t < track.size(); ++t) {
    out << t << ',' << track[t].grid_index << ',' << track[t].f0_hz << ',' << track[t].voicing
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline F0Track read_track_csv(const std::string& path, const F0Grid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTrackCsvHeader) {
    throw FormatError(path + ": line 1: expected header '" + std::string(kTrackCsvHeader) + "'");
  }
  F0Track track;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    long long frame = -1, index = -1;
    F0Frame f;
    std::string extra;
    if (!(row >> frame >> index >> f.f0_hz >> f.voicing) || (row >> extra)) {
      throw FormatError(path + ": line " + std::to_string(lineno) + ": expected 4 fields");
    }
    if (frame != (long long)track.size()) {
      throw FormatError(path + ": line " + std::to_string(lineno) + ": expected frame " +
                        std::to_string(track.size()));
    }
    if (index < 0 || std::size_t(index) > grid.unvoiced_index()) {
      throw FormatError(path + ": line " + std::to_string(lineno) + ": grid_index out of range");
    }
    f.grid_index = std::size_t(index);
    if (grid.is_voiced(f.grid_index) != (f.f0_hz != 0.0)) {
      throw FormatError(path + ": line " + std::to_string(lineno) +
                        ": f0_hz must be 0 exactly when grid_index is " +
                        std::to_string(grid.unvoiced_index()));
    }
    track.frames.push_back(f);
  }
  return track;
}

}  // namespace hcomb
