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

#include "hcomb/metrics.hpp"
#include "test_support.hpp"

namespace hcomb {
namespace {

Matrix<Complex> single(Complex v) { return Matrix<Complex>(1, 1, v); }

Matrix<double> random_real(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix<double> m(r, c);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

Matrix<Complex> random_complex(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix<Complex> m(r, c);
  for (Complex& v : m.flat()) v = {n(rng), n(rng)};
  return m;
}

TEST(Compress, Examples) {
  const Complex s = std::polar(4.0, 0.7);
  const Complex out = compress(single(s), 0.5).data(0, 0);
  EXPECT_NEAR(std::abs(out), 2.0, 1e-12);
  EXPECT_NEAR(std::arg(out), 0.7, 1e-12);
  EXPECT_EQ(compress(single(s), 1.0).data(0, 0), s);
  EXPECT_EQ(compress(single(0.0), 0.3).data(0, 0), Complex(0.0));
  EXPECT_EQ(compress(single(1e-13), 0.3).data(0, 0), Complex(0.0));
  EXPECT_THROW(compress(single(1.0), 0.0), ConfigError);
  EXPECT_THROW(compress(single(1.0), 1.5), ConfigError);
}

TEST(Compress, MonotoneInMagnitude) {
  double prev = -1.0;
  for (double m = 0.0; m < 10.0; m += 0.01) {
    const double out = std::abs(compress(single(m), 0.3).data(0, 0));
    ASSERT_GE(out, prev);
    prev = out;
  }
}

TEST(AsymMse, Examples) {
  const Matrix<double> one(1, 1, 1.0), zero(1, 1, 0.0);
  EXPECT_EQ(asym_mse(one, one), 0.0);
  EXPECT_EQ(asym_mse(one, zero), 1.0);
  EXPECT_EQ(asym_mse(zero, one), 0.0);
  EXPECT_THROW(asym_mse(one, Matrix<double>(2, 1)), ShapeError);
}

TEST(AsymMse, OneSidedDecomposition) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_real(7, 5, rng), b = random_real(7, 5, rng);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a.flat()[i] - b.flat()[i]) * (a.flat()[i] - b.flat()[i]);
    mse /= double(a.size());
    ASSERT_NEAR(asym_mse(a, b) + asym_mse(b, a), mse, 1e-12);
  }
}

TEST(SeLoss, SingleBinToyIsOne) {
  const auto loss = se_loss(single(1.0), single(0.0), single(0.0), LossConfig{0.3, 0.3, 0.1});
  EXPECT_EQ(loss.magnitude_gain_only, 1.0);
  EXPECT_EQ(loss.magnitude_output, 1.0);
  EXPECT_EQ(loss.complex_term, 1.0);
  EXPECT_NEAR(loss.total, 1.0, 1e-15);
}

TEST(SeLoss, ZeroWhenAllMatch) {
  std::mt19937_64 rng(4);
  const auto s = random_complex(9, 4, rng);
  EXPECT_EQ(se_loss(s, s, s).total, 0.0);
}

TEST(SeLoss, NonNegativeProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const LossConfig cfg{0.05 + 0.95 * u(rng), u(rng), 0.1};
    const auto l = se_loss(random_complex(4, 3, rng), random_complex(4, 3, rng), random_complex(4, 3, rng), cfg);
    ASSERT_GE(l.total, 0.0);
  }
}

TEST(SeLoss, PhaseInsensitiveWithoutComplexTerm) {
  std::mt19937_64 rng(6);
  const auto s = random_complex(6, 6, rng), out = random_complex(6, 6, rng), g = random_complex(6, 6, rng);
  Matrix<Complex> rotated(out);
  for (Complex& v : rotated.flat()) v *= std::polar(1.0, 1.234);
  const LossConfig no_complex{0.3, 0.0, 0.1};
  EXPECT_NEAR(se_loss(s, out, g, no_complex).total, se_loss(s, rotated, g, no_complex).total, 1e-12);
  EXPECT_GT(std::abs(se_loss(s, out, g).total - se_loss(s, rotated, g).total), 1e-3);
}

TEST(SeLoss, ShapeMismatch) {
  EXPECT_THROW(se_loss(Matrix<Complex>(2, 2), Matrix<Complex>(2, 3), Matrix<Complex>(2, 2)), ShapeError);
}

TEST(TotalLoss, Composition) {
  EXPECT_NEAR(total_loss(1.0, 2.0, LossConfig{0.3, 0.3, 0.1}), 1.2, 1e-15);
  EXPECT_EQ(total_loss(1.5, 9.0, LossConfig{0.3, 0.3, 0.0}), 1.5);
  EXPECT_EQ(LossConfig{}.pitch_weight, 0.1);
  EXPECT_THROW(total_loss(-1.0, 0.0), DomainError);
}

TEST(Sdr, Examples) {
  const auto s = testing::white_noise(48000, 0.5, 1);
  EXPECT_EQ(sdr(s, s), 100.0);
  std::vector<double> twice(s);
  for (double& v : twice) v *= 2.0;
  EXPECT_EQ(sdr(s, twice), 100.0);

  // Remove the projection onto s so the noise is exactly orthogonal.
  auto n = testing::white_noise(s.size(), 0.5, 2);
  double sn = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sn += s[i] * n[i];
    ss += s[i] * s[i];
  }
  for (std::size_t i = 0; i < s.size(); ++i) n[i] -= sn / ss * s[i];
  const double scale = std::sqrt(testing::power(s) / testing::power(n));
  EXPECT_NEAR(sdr(s, testing::add(s, n, scale)), 0.0, 0.1);

  EXPECT_THROW(sdr(std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)), DomainError);
  EXPECT_THROW(sdr(s, std::vector<double>(3, 1.0)), ShapeError);
}

TEST(Sdr, ScaleInvariantProperty) {
  const auto s = testing::white_noise(4000, 1.0, 7);
  const auto est = testing::add(s, testing::white_noise(4000, 0.3, 8));
  const double base = sdr(s, est);
  for (double k : {1e-3, 0.5, 3.0, 1e3}) {
    std::vector<double> scaled(est);
    for (double& v : scaled) v *= k;
    ASSERT_NEAR(sdr(s, scaled), base, 1e-9);
  }
}

TEST(Snr, Basics) {
  const auto s = testing::white_noise(10000, 1.0, 9);
  EXPECT_EQ(snr(s, s), 100.0);
  EXPECT_NEAR(snr(s, std::vector<double>(s.size(), 0.0)), 0.0, 1e-12);
}

}  // namespace
}  // namespace hcomb
