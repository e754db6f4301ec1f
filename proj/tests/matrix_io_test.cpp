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

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "hcomb/matrix_io.hpp"
#include "test_support.hpp"

namespace hcomb {
namespace {

using testing::temp_path;

std::vector<unsigned char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

template <typename E>
std::string expect_error(const std::string& path) {
  try {
    read_matrix(path);
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error of expected type for " << path;
  return {};
}

TEST(MatrixIo, IdentityLayout) {
  Matrix<double> eye(2, 2, 0.0);
  eye(0, 0) = eye(1, 1) = 1.0;
  eye(0, 1) = 0.5;  // distinguishes row-major from column-major
  const auto path = temp_path("eye.hcf");
  write_matrix(eye, path);
  const auto bytes = file_bytes(path);
  ASSERT_EQ(bytes.size(), kMatrixHeaderBytes + 4 * 4);
  ASSERT_EQ(bytes.size(), 28u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HCF1");
  const std::vector<unsigned char> dims{2, 0, 0, 0, 2, 0, 0, 0};
  EXPECT_TRUE(std::equal(dims.begin(), dims.end(), bytes.begin() + 4));
  float second;
  std::memcpy(&second, bytes.data() + 16, 4);
  EXPECT_EQ(second, 0.5f);
  EXPECT_EQ(read_matrix(path), eye);
}

TEST(MatrixIo, RandomFloat32RoundTripIsBitExact) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(0, 40);
  std::uniform_int_distribution<std::uint32_t> raw;
  const auto path = temp_path("rand.hcf");
  for (int trial = 0; trial < 100; ++trial) {
    Matrix<float> m(dim(rng), dim(rng));
    for (float& v : m.flat()) {
      do {
        v = std::bit_cast<float>(raw(rng));
      } while (!std::isfinite(v));
    }
    write_matrix(m, path);
    const auto first = file_bytes(path);
    const auto back = read_matrix(path);
    ASSERT_EQ(back.rows(), m.rows());
    ASSERT_EQ(back.cols(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(float(back.flat()[i])), std::bit_cast<std::uint32_t>(m.flat()[i]));
    }
    write_matrix(back, path);
    ASSERT_EQ(file_bytes(path), first);
  }
}

TEST(MatrixIo, StrengthMapShapePreserved) {
  Matrix<double> r(769, 250, 0.25);
  const auto path = temp_path("strength.hcf");
  write_matrix(r, path);
  const auto back = read_matrix(path);
  EXPECT_EQ(back.rows(), 769u);
  EXPECT_EQ(back.cols(), 250u);
  EXPECT_EQ(back, r);
}

TEST(MatrixIo, DoublesNarrowToNearestFloat) {
  Matrix<double> m(1, 1, 0.1);
  const auto path = temp_path("narrow.hcf");
  write_matrix(m, path);
  EXPECT_EQ(read_matrix(path)(0, 0), double(0.1f));
}

TEST(MatrixIo, TruncatedPayloadNamesByteCounts) {
  const auto path = temp_path("trunc.hcf");
  write_matrix(Matrix<double>(3, 4, 1.0), path);
  auto bytes = file_bytes(path);
  bytes.resize(bytes.size() - 5);
  put_bytes(path, bytes);
  const auto msg = expect_error<FormatError>(path);
  EXPECT_NE(msg.find("needs 48 bytes, found 43"), std::string::npos) << msg;
}

TEST(MatrixIo, TruncatedHeader) {
  const auto path = temp_path("short.hcf");
  put_bytes(path, {'H', 'C', 'F', '1', 1, 0});
  expect_error<FormatError>(path);
}

TEST(MatrixIo, BadMagicReportsOffset) {
  const auto path = temp_path("magic.hcf");
  write_matrix(Matrix<double>(1, 1, 1.0), path);
  auto bytes = file_bytes(path);
  bytes[3] = '2';
  put_bytes(path, bytes);
  const auto msg = expect_error<FormatError>(path);
  EXPECT_NE(msg.find("byte offset 0"), std::string::npos) << msg;
}

TEST(MatrixIo, NanInPayloadReportsOffset) {
  const auto path = temp_path("nan.hcf");
  write_matrix(Matrix<double>(2, 2, 1.0), path);
  auto bytes = file_bytes(path);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 20, &nan, 4);
  put_bytes(path, bytes);
  const auto msg = expect_error<FormatError>(path);
  EXPECT_NE(msg.find("byte offset 20"), std::string::npos) << msg;
}

TEST(MatrixIo, WriteRejectsNonFiniteAndOverflow) {
  Matrix<double> m(1, 2, 0.0);
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(write_matrix(m, temp_path("inf.hcf")), DomainError);
  m(0, 1) = 1e300;  // overflows float32
  EXPECT_THROW(write_matrix(m, temp_path("big.hcf")), DomainError);
}

TEST(MatrixIo, IoErrors) {
  EXPECT_THROW(read_matrix(temp_path("does_not_exist.hcf")), IoError);
  EXPECT_THROW(write_matrix(Matrix<double>(1, 1), "/nonexistent_dir/x.hcf"), IoError);
}

TEST(MatrixIo, ErrorClassesMapToDataExitCode) {
  EXPECT_EQ(exit_code(ErrorKind::kFormat), kExitData);
  EXPECT_EQ(exit_code(ErrorKind::kIo), kExitData);
}

}  // namespace
}  // namespace hcomb
