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
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hcomb/error.hpp"

namespace hcomb {

inline constexpr int kSampleRate = 48000;

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
};

// Pipeline entry points only accept 48 kHz, finite input.
inline void require_pipeline_input(const AudioBuffer& b) {
  if (b.sample_rate != kSampleRate) {
    throw RateError("unsupported sample rate " + std::to_string(b.sample_rate) +
                    ", require " + std::to_string(kSampleRate));
  }
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    if (!std::isfinite(b.samples[i])) {
      throw DomainError("non-finite sample at index " + std::to_string(i));
    }
  }
}

enum class WavDepth { kPcm16, kPcm24, kFloat32 };

struct WavWriteReport {
  std::size_t clipped = 0;  // samples outside [-1, 1] that were clamped
};

namespace wav_detail {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint32_t u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::uint32_t(b[at]) | std::uint32_t(b[at + 1]) << 8 |
         std::uint32_t(b[at + 2]) << 16 | std::uint32_t(b[at + 3]) << 24;
}
inline std::uint16_t u16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::uint16_t(b[at] | b[at + 1] << 8);
}

inline void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v));
  b.push_back(std::uint8_t(v >> 8));
}

[[noreturn]] inline void fail(const std::string& path, std::size_t offset,
                              const std::string& what) {
  throw FormatError(path + ": " + what + " at byte offset " +
                    std::to_string(offset));
}

inline std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace wav_detail

// Reads a RIFF/WAVE file (PCM 16/24/32-bit or IEEE float32). Channels are
// averaged to mono; integer formats are scaled by 1/2^(bits-1).
inline AudioBuffer read_wav(const std::string& path,
                            int required_rate = kSampleRate) {
  using namespace wav_detail;
  const std::vector<std::uint8_t> bytes = slurp(path);
  if (bytes.size() < 12) fail(path, bytes.size(), "file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) fail(path, 0, "missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) fail(path, 8, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::size_t fmt_offset = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      fail(path, pos, "chunk '" + std::string(bytes.begin() + pos, bytes.begin() + pos + 4) +
                          "' declares " + std::to_string(size) + " bytes but only " +
                          std::to_string(bytes.size() - body) + " remain");
    }
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) fail(path, pos, "fmt chunk too small");
      fmt_offset = pos;
      format = u16(bytes, body);
      channels = u16(bytes, body + 2);
      rate = u32(bytes, body + 4);
      block_align = u16(bytes, body + 12);
      bits = u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(path, pos, "extensible fmt chunk too small");
        format = u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) fail(path, pos, "data chunk before fmt chunk");
      if (channels == 0) fail(path, fmt_offset, "zero channels");
      const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
      const bool flt = format == kFormatFloat && bits == 32;
      if (!pcm && !flt) {
        fail(path, fmt_offset, "unsupported encoding (format " + std::to_string(format) +
                                   ", " + std::to_string(bits) + " bits)");
      }
      if (block_align != channels * (bits / 8)) fail(path, fmt_offset, "inconsistent block align");
      if (required_rate > 0 && int(rate) != required_rate) {
        throw RateError("unsupported sample rate " + std::to_string(rate) + ", require " +
                        std::to_string(required_rate));
      }
      const std::size_t frames = size / block_align;
      const std::size_t width = bits / 8;
      const double scale = pcm ? std::ldexp(1.0, -(bits - 1)) : 1.0;
      AudioBuffer out;
      out.sample_rate = int(rate);
      out.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t at = body + (f * channels + c) * width;
          double v;
          if (flt) {
            float x;
            std::memcpy(&x, bytes.data() + at, 4);
            v = x;
          } else if (bits == 16) {
            v = std::int16_t(u16(bytes, at)) * scale;
          } else if (bits == 24) {
            std::int32_t x = std::int32_t(bytes[at] | bytes[at + 1] << 8 | bytes[at + 2] << 16);
            if (x & 0x800000) x -= 0x1000000;
            v = x * scale;
          } else {
            v = std::int32_t(u32(bytes, at)) * scale;
          }
          acc += v;
        }
        out.samples[f] = acc / channels;
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  fail(path, pos, have_fmt ? "no data chunk" : "no fmt chunk");
}

// Writes mono WAV. Samples outside [-1, 1] are clamped and counted.
inline WavWriteReport write_wav(const AudioBuffer& buffer, const std::string& path,
                                WavDepth depth = WavDepth::kPcm16) {
  using namespace wav_detail;
  for (double s : buffer.samples) {
    if (!std::isfinite(s)) throw DomainError("write_wav: non-finite sample");
  }
  const std::uint16_t bits = depth == WavDepth::kPcm16 ? 16 : depth == WavDepth::kPcm24 ? 24 : 32;
  const std::uint16_t width = bits / 8;
  const std::uint32_t data_size = std::uint32_t(buffer.size() * width);

  std::vector<std::uint8_t> b;
  b.reserve(44 + data_size);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_size);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, depth == WavDepth::kFloat32 ? kFormatFloat : kFormatPcm);
  put16(b, 1);
  put32(b, std::uint32_t(buffer.sample_rate));
  put32(b, std::uint32_t(buffer.sample_rate) * width);
  put16(b, width);
  put16(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_size);

  WavWriteReport report;
  for (double s : buffer.samples) {
    if (s > 1.0 || s < -1.0) ++report.clipped;
    s = std::clamp(s, -1.0, 1.0);
    if (depth == WavDepth::kFloat32) {
      const float f = float(s);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put32(b, u);
    } else {
      const double full = std::ldexp(1.0, bits - 1);
      const auto q = std::int32_t(std::clamp(std::round(s * full), -full, full - 1.0));
      for (int i = 0; i < width; ++i) b.push_back(std::uint8_t(std::uint32_t(q) >> (8 * i)));
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  if (!out) throw IoError("write failed: " + path);
  return report;
}

}  // namespace hcomb
