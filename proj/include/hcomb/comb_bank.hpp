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
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcomb/error.hpp"
#include "hcomb/f0_grid.hpp"
#include "hcomb/frame.hpp"
#include "hcomb/matrix.hpp"

namespace hcomb {

// Filtered time-domain frames X_cf share the layout of X.
template <typename T = double>
using FilteredFrames = FramedSignal<T>;

// Multiply-accumulate counter for cost accounting.
struct MacCounter {
  std::uint64_t macs = 0;
};

// One term of a candidate's filter: output[s] += weight * chunk[offset + s].
struct ShiftTap {
  std::size_t offset;
  double weight;
};

// Normalized Hann taps w_{-M}..w_M: the 2M+1 interior points of a
// (2M+3)-point Hann window, scaled to sum to one.
inline std::vector<double> hann_taps(std::size_t order) {
  const std::size_t n = 2 * order + 1;
  // cos(2 pi k / m), exact at quarter turns.
  auto cos_turn = [](std::size_t k, std::size_t m) {
    k %= m;
    if ((4 * k) % m == 0) {
      constexpr double quarter[] = {1.0, 0.0, -1.0, 0.0};
      return quarter[4 * k / m];
    }
    return std::cos(2.0 * std::numbers::pi * double(k) / double(m));
  };
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * cos_turn(i + 1, n + 1);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Symmetric non-causal comb filters, one per grid candidate, laid out as the
// (N+1) x 1 x K x 1 weight tensor with K = 2*M*T_max + 1. Row i carries
// w_{+-k} at column M*T_max +- k*T_i; the last row (unvoiced) is the
// identity.
class CombFilterBank {
 public:
  static constexpr double kTapTolerance = 1e-9;

  static CombFilterBank build(const F0Grid& grid, std::size_t order = 1,
                              std::optional<std::vector<double>> taps = std::nullopt) {
    if (order < 1) throw ConfigError("comb filter order M must be >= 1");
    std::vector<double> w = taps ? std::move(*taps) : hann_taps(order);
    validate_taps(w, order, kTapTolerance);

    CombFilterBank bank(grid, order);
    bank.taps_ = w;
    const std::size_t center = bank.center();
    for (std::size_t i = 0; i < grid.bin_count(); ++i) {
      const std::size_t period = grid.rounded_period(i);
      if (order * period > center) {
        throw ConfigError("candidate period exceeds the kernel half-width");
      }
      bank.periods_.push_back(period);
      auto& shifts = bank.shifts_[i];
      for (std::size_t k = 0; k <= 2 * order; ++k) {
        // Weight tensor entry for lag (k - M): column center + (k - M) * T.
        const std::size_t column = center - order * period + k * period;
        bank.kernels_(column, i) += w[k];
        // Inference shift for the same tap: the slice delayed by (k - M) * T.
        shifts.push_back({center + order * period - k * period, w[k]});
      }
    }
    bank.kernels_(center, grid.unvoiced_index()) = 1.0;
    bank.shifts_[grid.unvoiced_index()] = {{center, 1.0}};
    return bank;
  }

  // Imports an externally produced (N+1) x K weight matrix, e.g. learned
  // coefficients. Voiced rows must be symmetric about the center column and
  // sum to one; the unvoiced row must be the identity.
  static CombFilterBank from_weights(const F0Grid& grid, std::size_t order,
                                     const Matrix<double>& weights, double tolerance = 1e-6) {
    if (order < 1) throw ConfigError("comb filter order M must be >= 1");
    CombFilterBank bank(grid, order);
    const std::size_t k_size = bank.kernel_size(), center = bank.center();
    if (weights.rows() != grid.label_size() || weights.cols() != k_size) {
      throw ShapeError("filter bank weights must be " + std::to_string(grid.label_size()) + "x" +
                       std::to_string(k_size) + ", got " + std::to_string(weights.rows()) + "x" +
                       std::to_string(weights.cols()));
    }
    for (std::size_t i = 0; i < grid.label_size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k_size; ++j) {
        const double v = weights(i, j);
        if (!std::isfinite(v)) throw DomainError("filter bank weight is not finite");
        if (std::abs(v - weights(i, k_size - 1 - j)) > tolerance) {
          throw ConfigError("filter bank row " + std::to_string(i) + " is not symmetric");
        }
        bank.kernels_(j, i) = v;
        sum += v;
        // Symmetric rows: tap j acts on the slice at offset 2 * center - j.
        if (v != 0.0) bank.shifts_[i].push_back({2 * center - j, v});
      }
      if (std::abs(sum - 1.0) > tolerance) {
        throw ConfigError("filter bank row " + std::to_string(i) + " sums to " +
                          std::to_string(sum) + ", expected 1");
      }
    }
    const auto& id = bank.shifts_[grid.unvoiced_index()];
    if (id.size() != 1 || id[0].offset != center || id[0].weight != 1.0) {
      throw ConfigError("unvoiced filter bank row must be the identity");
    }
    for (std::size_t i = 0; i < grid.bin_count(); ++i) bank.periods_.push_back(grid.rounded_period(i));
    return bank;
  }

  static void validate_taps(const std::vector<double>& w, std::size_t order, double tolerance) {
    if (w.size() != 2 * order + 1) {
      throw ConfigError("comb taps: expected " + std::to_string(2 * order + 1) + " values, got " +
                        std::to_string(w.size()));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!std::isfinite(w[k])) throw ConfigError("comb taps must be finite");
      if (std::abs(w[k] - w[w.size() - 1 - k]) > tolerance) {
        throw ConfigError("comb taps must be symmetric");
      }
      sum += w[k];
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw ConfigError("comb taps must sum to 1, got " + std::to_string(sum));
    }
  }

  const F0Grid& grid() const noexcept { return grid_; }
  std::size_t order() const noexcept { return order_; }
  // w_{-M}..w_M; empty for banks imported with from_weights.
  const std::vector<double>& taps() const noexcept { return taps_; }
  const std::vector<std::size_t>& rounded_periods() const noexcept { return periods_; }
  std::size_t candidate_count() const noexcept { return grid_.label_size(); }
  std::size_t kernel_size() const noexcept { return 2 * center() + 1; }
  std::size_t center() const noexcept { return order_ * grid_.rounded_t_max(); }

  // W[i, 0, j, 0].
  double weight(std::size_t candidate, std::size_t j) const { return kernels_(j, candidate); }
  std::span<const double> kernel(std::size_t candidate) const { return kernels_.col(candidate); }
  // The candidate's filter as delayed chunk slices (the inference form).
  const std::vector<ShiftTap>& shifts(std::size_t candidate) const { return shifts_.at(candidate); }

  // W[:, 0, :, 0] as an (N+1) x K matrix.
  Matrix<double> weight_matrix() const { return transpose(kernels_); }

 private:
  CombFilterBank(const F0Grid& grid, std::size_t order)
      : grid_(grid), order_(order),
        kernels_(2 * order * grid.rounded_t_max() + 1, grid.label_size()),
        shifts_(grid.label_size()) {}

  F0Grid grid_;
  std::size_t order_;
  std::vector<double> taps_;
  std::vector<std::size_t> periods_;
  Matrix<double> kernels_;  // K x (N+1), column i = row i of W
  std::vector<std::vector<ShiftTap>> shifts_;
};

// Output of the candidate-parallel path: (N+1) x N_f x N_t.
template <typename T = double>
struct CandidateTensor {
  std::size_t candidates = 0, frame_size = 0, frames = 0;
  std::vector<T> data;

  T& at(std::size_t i, std::size_t s, std::size_t t) {
    return data[(t * candidates + i) * frame_size + s];
  }
  const T& at(std::size_t i, std::size_t s, std::size_t t) const {
    return data[(t * candidates + i) * frame_size + s];
  }
  std::span<const T> slice(std::size_t i, std::size_t t) const {
    return std::span<const T>(data).subspan((t * candidates + i) * frame_size, frame_size);
  }
};

namespace comb_detail {

template <typename T>
void require_geometry(const CombFilterBank& bank, const ChunkedSignal<T>& chunks) {
  if (chunks.pad != bank.center() || chunks.chunk_size() != bank.kernel_size() + chunks.frame_size() - 1) {
    throw ShapeError("chunk length " + std::to_string(chunks.chunk_size()) + " with pad " +
                     std::to_string(chunks.pad) + " does not match the filter bank (pad " +
                     std::to_string(bank.center()) + ")");
  }
}

inline void require_track(std::size_t frames, std::size_t track) {
  if (frames != track) {
    throw ShapeError("F0 track has " + std::to_string(track) + " frames, expected N_t = " +
                     std::to_string(frames));
  }
}

}  // namespace comb_detail

// All candidates for one chunk: out column i = valid cross-correlation of the
// chunk with row i of W. Walks the weight tensor itself, skipping zeros.
template <typename T>
void filter_all_candidates_frame(const CombFilterBank& bank, std::span<const T> chunk,
                                 Matrix<T>& out, MacCounter* counter = nullptr) {
  const std::size_t n_f = chunk.size() - bank.kernel_size() + 1;
  out = Matrix<T>(n_f, bank.candidate_count());
  for (std::size_t i = 0; i < bank.candidate_count(); ++i) {
    const auto kernel = bank.kernel(i);
    auto dst = out.col(i);
    for (std::size_t j = 0; j < kernel.size(); ++j) {
      if (kernel[j] == 0.0) continue;
      const T w = T(kernel[j]);
      const T* src = chunk.data() + j;
      for (std::size_t s = 0; s < n_f; ++s) dst[s] += w * src[s];
      if (counter) counter->macs += n_f;
    }
  }
}

template <typename T>
CandidateTensor<T> filter_all_candidates(const CombFilterBank& bank, const ChunkedSignal<T>& chunks,
                                         MacCounter* counter = nullptr) {
  comb_detail::require_geometry(bank, chunks);
  CandidateTensor<T> out{bank.candidate_count(), chunks.frame_size(), chunks.frame_count(), {}};
  out.data.resize(out.candidates * out.frame_size * out.frames);
  Matrix<T> frame;
  for (std::size_t t = 0; t < chunks.frame_count(); ++t) {
    filter_all_candidates_frame(bank, chunks.chunk(t), frame, counter);
    std::copy(frame.flat().begin(), frame.flat().end(),
              out.data.begin() + std::ptrdiff_t(t * out.candidates * out.frame_size));
  }
  return out;
}

// Column t = all[track[t].grid_index, :, t].
template <typename T>
FilteredFrames<T> select_candidate(const CandidateTensor<T>& all, const F0Track& track) {
  comb_detail::require_track(all.frames, track.size());
  FilteredFrames<T> out{Matrix<T>(all.frame_size, all.frames)};
  for (std::size_t t = 0; t < all.frames; ++t) {
    if (track[t].grid_index >= all.candidates) throw DomainError("grid index out of range");
    const auto src = all.slice(track[t].grid_index, t);
    std::copy(src.begin(), src.end(), out.data.col(t).begin());
  }
  return out;
}

// Reference path without materializing the full tensor: every candidate is
// computed per frame, then contracted with the frame's one-hot vector.
template <typename T>
FilteredFrames<T> filter_reference(const CombFilterBank& bank, const ChunkedSignal<T>& chunks,
                                   const F0Track& track, MacCounter* counter = nullptr) {
  comb_detail::require_geometry(bank, chunks);
  comb_detail::require_track(chunks.frame_count(), track.size());
  FilteredFrames<T> out{Matrix<T>(chunks.frame_size(), chunks.frame_count())};
  Matrix<T> all;
  for (std::size_t t = 0; t < chunks.frame_count(); ++t) {
    filter_all_candidates_frame(bank, chunks.chunk(t), all, counter);
    const std::vector<double> selector = one_hot(bank.grid(), track[t].grid_index);
    auto dst = out.data.col(t);
    for (std::size_t i = 0; i < selector.size(); ++i) {
      const T sel = T(selector[i]);
      const auto src = all.col(i);
      for (std::size_t s = 0; s < dst.size(); ++s) dst[s] += src[s] * sel;
    }
  }
  return out;
}

// Low-cost path: only the selected candidate per frame, as a weighted sum of
// delayed chunk slices sum_k w_k X_in[M*T_max - k*T + s]. Unvoiced frames are
// copied through.
template <typename T>
FilteredFrames<T> filter_inference(const CombFilterBank& bank, const ChunkedSignal<T>& chunks,
                                   const F0Track& track, MacCounter* counter = nullptr) {
  comb_detail::require_geometry(bank, chunks);
  comb_detail::require_track(chunks.frame_count(), track.size());
  const std::size_t n_f = chunks.frame_size();
  FilteredFrames<T> out{Matrix<T>(n_f, chunks.frame_count())};
  for (std::size_t t = 0; t < chunks.frame_count(); ++t) {
    const auto chunk = chunks.chunk(t);
    auto dst = out.data.col(t);
    const std::size_t index = track[t].grid_index;
    if (!bank.grid().is_voiced(index)) {
      if (index != bank.grid().unvoiced_index()) throw DomainError("grid index out of range");
      std::copy_n(chunk.begin() + std::ptrdiff_t(chunks.pad), n_f, dst.begin());
      continue;
    }
    for (const ShiftTap& tap : bank.shifts(index)) {
      const T w = T(tap.weight);
      const T* src = chunk.data() + tap.offset;
      for (std::size_t s = 0; s < n_f; ++s) dst[s] += w * src[s];
      if (counter) counter->macs += n_f;
    }
  }
  return out;
}

// |sum_j W[i, j] e^{-i w (center - j)}| on n_points frequencies spanning
// [0, fs/2]; for built banks this is |sum_k w_k e^{-i w k T}|.
inline std::vector<std::pair<double, double>> frequency_response(const CombFilterBank& bank,
                                                                 std::size_t candidate,
                                                                 std::size_t n_points) {
  if (!bank.grid().is_voiced(candidate)) {
    throw DomainError("frequency_response: candidate must be < " +
                      std::to_string(bank.grid().bin_count()));
  }
  if (n_points < 2) throw ConfigError("frequency_response needs at least 2 points");
  const double fs = bank.grid().sample_rate();
  std::vector<std::pair<double, double>> out;
  for (std::size_t p = 0; p < n_points; ++p) {
    const double hz = 0.5 * fs * double(p) / double(n_points - 1);
    const double omega = 2.0 * std::numbers::pi * hz / fs;
    std::complex<double> h = 0.0;
    for (const ShiftTap& tap : bank.shifts(candidate)) {
      const double lag = double(bank.center()) - double(tap.offset);
      h += tap.weight * std::polar(1.0, -omega * lag);
    }
    out.emplace_back(hz, std::abs(h));
  }
  return out;
}

// Broadband power gain of a candidate on white noise: sum of squared taps.
inline double noise_power_gain(const CombFilterBank& bank, std::size_t candidate) {
  double g = 0.0;
  for (const ShiftTap& tap : bank.shifts(candidate)) g += tap.weight * tap.weight;
  return g;
}

}  // namespace hcomb
