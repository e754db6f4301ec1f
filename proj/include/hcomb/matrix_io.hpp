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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hcomb/error.hpp"
#include "hcomb/matrix.hpp"

// HCF1 matrix interchange format, little-endian:
//   bytes 0..3   magic "HCF1"
//   bytes 4..7   rows (uint32)
//   bytes 8..11  cols (uint32)
//   bytes 12..   rows * cols IEEE-754 float32, row-major
namespace hcomb {

inline constexpr char kMatrixMagic[4] = {'H', 'C', 'F', '1'};
inline constexpr std::size_t kMatrixHeaderBytes = 12;

static_assert(std::endian::native == std::endian::little, "HCF1 codec assumes little-endian");

// Doubles are narrowed to float32 with round-to-nearest.
template <typename T>
void write_matrix(const Matrix<T>& m, const std::string& path) {
  std::vector<char> bytes(kMatrixHeaderBytes + m.size() * 4);
  std::memcpy(bytes.data(), kMatrixMagic, 4);
  const auto rows = std::uint32_t(m.rows()), cols = std::uint32_t(m.cols());
  std::memcpy(bytes.data() + 4, &rows, 4);
  std::memcpy(bytes.data() + 8, &cols, 4);
  char* p = bytes.data() + kMatrixHeaderBytes;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c, p += 4) {
      const float v = static_cast<float>(m(r, c));
      if (!std::isfinite(v)) {
        throw DomainError("write_matrix: non-finite entry at (" + std::to_string(r) + ", " +
                          std::to_string(c) + ")");
      }
      std::memcpy(p, &v, 4);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Matrix<double> read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError(path + ": header truncated, expected " + std::to_string(kMatrixHeaderBytes) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMatrixMagic, 4) != 0) {
    throw FormatError(path + ": bad magic at byte offset 0, expected HCF1");
  }
  std::uint32_t rows, cols;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  const std::uint64_t expected = std::uint64_t(rows) * cols * 4;
  const std::uint64_t actual = bytes.size() - kMatrixHeaderBytes;
  if (actual != expected) {
    throw FormatError(path + ": payload of " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " matrix needs " + std::to_string(expected) + " bytes, found " +
                      std::to_string(actual));
  }
  Matrix<double> m(rows, cols);
  const char* p = bytes.data() + kMatrixHeaderBytes;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c, p += 4) {
      float v;
      std::memcpy(&v, p, 4);
      if (!std::isfinite(v)) {
        throw FormatError(path + ": non-finite value at byte offset " +
                          std::to_string(p - bytes.data()));
      }
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace hcomb
