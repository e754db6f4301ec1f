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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hcomb/comb_bank.hpp"
#include "test_support.hpp"

namespace hcomb {
namespace {

const FrameConfig kCfg;
const F0Grid kGrid;

F0Track random_track(std::size_t frames, std::mt19937_64& rng, double unvoiced_rate = 0.2) {
  std::uniform_int_distribution<std::size_t> idx(0, kGrid.bin_count() - 1);
  std::bernoulli_distribution uv(unvoiced_rate);
  std::vector<std::size_t> ids(frames);
  for (auto& i : ids) i = uv(rng) ? kGrid.unvoiced_index() : idx(rng);
  return track_from_indices(kGrid, ids);
}

F0Track constant_track(std::size_t frames, std::size_t index) {
  return track_from_indices(kGrid, std::vector<std::size_t>(frames, index));
}

// Frames whose chunk lies entirely inside the source signal.
bool pad_free(std::size_t t, std::size_t length) {
  return t * kCfg.hop_size >= kCfg.pad && t * kCfg.hop_size + kCfg.frame_size + kCfg.pad <= length;
}

TEST(CombBank, DefaultTapsAndGeometry) {
  const auto bank = CombFilterBank::build(kGrid);
  EXPECT_EQ(bank.taps(), (std::vector<double>{0.25, 0.5, 0.25}));
  EXPECT_EQ(bank.kernel_size(), 1537u);
  EXPECT_EQ(bank.center(), 768u);
  EXPECT_EQ(bank.candidate_count(), 226u);
  EXPECT_EQ(bank.weight_matrix().rows(), 226u);
  EXPECT_EQ(bank.weight_matrix().cols(), 1537u);
}

TEST(CombBank, HannTapsHigherOrder) {
  const auto w = hann_taps(2);
  ASSERT_EQ(w.size(), 5u);
  double sum = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    sum += w[k];
    EXPECT_DOUBLE_EQ(w[k], w[4 - k]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_GT(w[2], w[1]);
}

TEST(CombBank, ShortestPeriodRowLayout) {
  const auto bank = CombFilterBank::build(kGrid);
  ASSERT_EQ(bank.rounded_periods()[224], 96u);
  std::vector<std::size_t> nonzero;
  for (std::size_t j = 0; j < bank.kernel_size(); ++j) {
    if (bank.weight(224, j) != 0.0) nonzero.push_back(j);
  }
  EXPECT_EQ(nonzero, (std::vector<std::size_t>{672, 768, 864}));
  EXPECT_EQ(bank.weight(224, 672), 0.25);
  EXPECT_EQ(bank.weight(224, 768), 0.5);
  EXPECT_EQ(bank.weight(224, 864), 0.25);
}

// Every entry of the weight tensor against the closed-form layout.
TEST(CombBank, WeightTensorMatchesLayoutRule) {
  const auto bank = CombFilterBank::build(kGrid);
  const std::vector<double> w = {0.25, 0.5, 0.25};
  for (std::size_t i = 0; i < 226; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < 1537; ++j) {
      double expected = 0.0;
      if (i == 225) {
        expected = j == 768 ? 1.0 : 0.0;
      } else {
        const auto period = std::ptrdiff_t(768 - 3 * i);
        for (std::ptrdiff_t k = -1; k <= 1; ++k) {
          if (std::ptrdiff_t(j) == 768 + k * period) expected = w[std::size_t(k + 1)];
        }
      }
      ASSERT_EQ(bank.weight(i, j), expected) << i << "," << j;
      row_sum += bank.weight(i, j);
    }
    ASSERT_EQ(row_sum, 1.0);
  }
}

TEST(CombBank, CustomTapsValidated) {
  EXPECT_NO_THROW(CombFilterBank::build(kGrid, 1, std::vector<double>{0.2, 0.6, 0.2}));
  EXPECT_THROW(CombFilterBank::build(kGrid, 1, std::vector<double>{0.3, 0.5, 0.2}), ConfigError);
  EXPECT_THROW(CombFilterBank::build(kGrid, 1, std::vector<double>{0.3, 0.5, 0.3}), ConfigError);
  EXPECT_THROW(CombFilterBank::build(kGrid, 1, std::vector<double>{0.5, 0.5}), ConfigError);
  EXPECT_THROW(CombFilterBank::build(kGrid, 0), ConfigError);
}

TEST(CombBank, ImportedWeightsRoundTrip) {
  const auto built = CombFilterBank::build(kGrid, 1, std::vector<double>{0.2, 0.6, 0.2});
  const auto imported = CombFilterBank::from_weights(kGrid, 1, built.weight_matrix());
  std::mt19937_64 rng(2);
  const auto x = testing::white_noise(8000, 0.2, 4);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const F0Track track = random_track(chunks.frame_count(), rng);
  const auto a = filter_inference(built, chunks, track);
  const auto b = filter_inference(imported, chunks, track);
  for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_NEAR(a.data.flat()[i], b.data.flat()[i], 1e-12);

  Matrix<double> asym = built.weight_matrix();
  asym(3, 10) = 0.01;
  EXPECT_THROW(CombFilterBank::from_weights(kGrid, 1, asym), ConfigError);
  EXPECT_THROW(CombFilterBank::from_weights(kGrid, 1, Matrix<double>(226, 100)), ShapeError);
}

TEST(FilterAllCandidates, MatchesDenseCrossCorrelation) {
  const auto bank = CombFilterBank::build(kGrid);
  const auto x = testing::white_noise(3000, 0.5, 8);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const auto all = filter_all_candidates(bank, chunks);
  ASSERT_EQ(all.candidates, 226u);
  ASSERT_EQ(all.frame_size, 1536u);
  ASSERT_EQ(all.frames, chunks.frame_count());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> ci(0, 225), si(0, 1535), ti(0, all.frames - 1);
  for (int k = 0; k < 300; ++k) {
    const std::size_t i = ci(rng), s = si(rng), t = ti(rng);
    double dense = 0.0;  // every kernel column, zeros included
    for (std::size_t j = 0; j < 1537; ++j) dense += bank.weight(i, j) * chunks.chunk(t)[j + s];
    ASSERT_NEAR(all.at(i, s, t), dense, 1e-12);
  }
}

TEST(FilterAllCandidates, ConstantInputAndIdentityRow) {
  const auto bank = CombFilterBank::build(kGrid);
  const std::vector<double> x(8000, 1.0);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const auto frames = frame_signal(std::span<const double>(x), kCfg);
  const auto all = filter_all_candidates(bank, chunks);
  for (std::size_t t = 0; t < all.frames; ++t) {
    for (std::size_t s = 0; s < 1536; ++s) ASSERT_EQ(all.at(225, s, t), frames.frame(t)[s]);
    if (!pad_free(t, x.size())) continue;
    for (std::size_t i = 0; i < 225; ++i) {
      for (std::size_t s = 0; s < 1536; ++s) ASSERT_EQ(all.at(i, s, t), 1.0);
    }
  }
}

TEST(FilterAllCandidates, PeriodicInputPassesMatchedCandidate) {
  const auto bank = CombFilterBank::build(kGrid);
  const std::size_t index = 128;  // period 384
  ASSERT_EQ(bank.rounded_periods()[index], 384u);
  const auto x = testing::periodic_sine(384, 9000);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const auto all = filter_all_candidates(bank, chunks);
  for (std::size_t t = 0; t < all.frames; ++t) {
    if (!pad_free(t, x.size())) continue;
    for (std::size_t s = 0; s < 1536; ++s) ASSERT_NEAR(all.at(index, s, t), chunks.chunk(t)[768 + s], 1e-9);
  }
}

TEST(FilterAllCandidates, GeometryMismatch) {
  const auto bank = CombFilterBank::build(kGrid);
  const auto x = testing::white_noise(3000, 0.5, 8);
  FrameConfig wrong = kCfg;
  wrong.pad = 500;
  EXPECT_THROW(filter_all_candidates(bank, chunk_signal(std::span<const double>(x), wrong)), ShapeError);
}

TEST(SelectCandidate, OneHotContractionEqualsIndexing) {
  const auto bank = CombFilterBank::build(kGrid);
  std::mt19937_64 rng(17);
  const auto x = testing::white_noise(4000, 0.5, 1);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const auto all = filter_all_candidates(bank, chunks);
  const F0Track track = random_track(all.frames, rng, 0.3);
  const auto selected = select_candidate(all, track);
  for (std::size_t t = 0; t < all.frames; ++t) {
    const auto e = one_hot(kGrid, track[t].grid_index);
    for (std::size_t s = 0; s < 1536; ++s) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 226; ++i) sum += all.at(i, s, t) * e[i];
      ASSERT_EQ(selected.data(s, t), sum);
    }
  }
  // The streamed reference performs the same contraction.
  const auto reference = filter_reference(bank, chunks, track);
  EXPECT_EQ(reference.data, selected.data);
}

TEST(SelectCandidate, AllUnvoicedIsIdentity) {
  const auto bank = CombFilterBank::build(kGrid);
  const auto x = testing::white_noise(4000, 0.5, 21);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const auto frames = frame_signal(std::span<const double>(x), kCfg);
  const F0Track uv = constant_track(chunks.frame_count(), 225);
  EXPECT_EQ(select_candidate(filter_all_candidates(bank, chunks), uv).data, frames.data);
  EXPECT_EQ(filter_inference(bank, chunks, uv).data, frames.data);
}

// Property: the low-cost path reproduces the candidate-parallel path.
TEST(FilterInference, EquivalentToReferenceOnRandomInputs) {
  const auto bank = CombFilterBank::build(kGrid);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> len(500, 6000);
  for (int trial = 0; trial < 6; ++trial) {
    const auto x = testing::white_noise(len(rng), 0.5, rng());
    const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
    const F0Track track = random_track(chunks.frame_count(), rng);
    const auto reference = select_candidate(filter_all_candidates(bank, chunks), track);
    const auto fast = filter_inference(bank, chunks, track);
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
      ASSERT_NEAR(fast.data.flat()[i], reference.data.flat()[i], 1e-10);
    }
  }
}

TEST(FilterInference, Float32AgreesWithFloat64Reference) {
  const auto bank = CombFilterBank::build(kGrid);
  std::mt19937_64 rng(5);
  const auto x = testing::white_noise(20000, 0.5, 6);
  const auto chunks64 = chunk_signal<double>(std::span<const double>(x), kCfg);
  const auto chunks32 = chunk_signal<float>(std::span<const double>(x), kCfg);
  const F0Track track = random_track(chunks64.frame_count(), rng);
  const auto reference = filter_reference(bank, chunks64, track);
  const auto fast32 = filter_inference(bank, chunks32, track);
  const auto ref32 = filter_reference(bank, chunks32, track);
  double num = 0.0, den = 0.0, dev32 = 0.0;
  for (std::size_t i = 0; i < reference.data.size(); ++i) {
    const double d = double(fast32.data.flat()[i]) - reference.data.flat()[i];
    num += d * d;
    den += reference.data.flat()[i] * reference.data.flat()[i];
    dev32 = std::max(dev32, std::abs(double(fast32.data.flat()[i]) - double(ref32.data.flat()[i])));
  }
  EXPECT_LT(std::sqrt(num / den), 1e-5);
  EXPECT_LT(dev32, 1e-6);
}

TEST(FilterInference, CountsOnlySelectedCandidate) {
  const auto bank = CombFilterBank::build(kGrid);
  std::mt19937_64 rng(8);
  const auto x = testing::white_noise(6000, 0.5, 3);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  const F0Track track = random_track(chunks.frame_count(), rng, 0.4);
  std::size_t voiced = 0;
  for (const auto& f : track.frames) voiced += f.grid_index < 225;
  MacCounter fast, ref;
  filter_inference(bank, chunks, track, &fast);
  filter_reference(bank, chunks, track, &ref);
  EXPECT_EQ(fast.macs, 3u * 1536u * voiced);
  EXPECT_EQ(ref.macs, (225u * 3u + 1u) * 1536u * chunks.frame_count());
}

TEST(FilterInference, TrackLengthMismatch) {
  const auto bank = CombFilterBank::build(kGrid);
  const auto x = testing::white_noise(4000, 0.5, 3);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  try {
    filter_inference(bank, chunks, constant_track(3, 10));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("N_t = " + std::to_string(chunks.frame_count())), std::string::npos);
  }
}

TEST(FilterInference, HigherOrderBankStillEquivalent) {
  const auto bank = CombFilterBank::build(kGrid, 2);
  FrameConfig cfg = kCfg;
  cfg.pad = 1536;
  std::mt19937_64 rng(4);
  const auto x = testing::white_noise(5000, 0.5, 4);
  const auto chunks = chunk_signal(std::span<const double>(x), cfg);
  const F0Track track = random_track(chunks.frame_count(), rng);
  const auto a = filter_reference(bank, chunks, track);
  const auto b = filter_inference(bank, chunks, track);
  for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_NEAR(a.data.flat()[i], b.data.flat()[i], 1e-10);
}

TEST(FrequencyResponse, HarmonicsPassMidpointsVanish) {
  const auto bank = CombFilterBank::build(kGrid);
  const std::size_t index = 96;  // T = 480, harmonics every 100 Hz
  // 2401 points on [0, 24000]: spacing 10 Hz.
  const auto h = frequency_response(bank, index, 2401);
  EXPECT_NEAR(h[0].second, 1.0, 1e-12);
  for (std::size_t p = 0; p < h.size(); ++p) {
    const double hz = h[p].first;
    ASSERT_NEAR(hz, 10.0 * double(p), 1e-9);
    const double expected = std::abs(0.5 + 0.5 * std::cos(2.0 * testing::kPi * hz * 480.0 / 48000.0));
    ASSERT_NEAR(h[p].second, expected, 1e-12);
    if (p % 10 == 0) {
      ASSERT_NEAR(h[p].second, 1.0, 1e-12);
    }
    if (p % 10 == 5) {
      ASSERT_NEAR(h[p].second, 0.0, 1e-12);
    }
  }
  EXPECT_THROW(frequency_response(bank, 225, 10), DomainError);
}

TEST(FilterInference, WhiteNoisePowerGain) {
  const auto bank = CombFilterBank::build(kGrid);
  EXPECT_DOUBLE_EQ(noise_power_gain(bank, 50), 0.375);
  const auto x = testing::white_noise(48000 * 10, 1.0, 77);
  const auto chunks = chunk_signal(std::span<const double>(x), kCfg);
  for (std::size_t index : {0u, 96u, 224u}) {
    const auto y = filter_inference(bank, chunks, constant_track(chunks.frame_count(), index));
    double in = 0.0, out = 0.0;
    for (std::size_t t = 0; t < chunks.frame_count(); ++t) {
      if (!pad_free(t, x.size())) continue;
      for (std::size_t s = 0; s < 1536; ++s) {
        in += chunks.chunk(t)[768 + s] * chunks.chunk(t)[768 + s];
        out += y.data(s, t) * y.data(s, t);
      }
    }
    EXPECT_NEAR(out / in, 0.375, 0.05 * 0.375) << "candidate " << index;
  }
}

}  // namespace
}  // namespace hcomb
