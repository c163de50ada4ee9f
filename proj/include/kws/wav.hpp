// Copyright (c) 2026 The tdnn-kws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/features.hpp"

namespace kws {

// RIFF/WAVE reader and writer for 16-bit little-endian PCM mono audio.

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace wav_detail

inline AudioStream parse_wav(const std::string& bytes, const std::string& name = "<memory>") {
  using wav_detail::read_u16;
  using wav_detail::read_u32;
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw FormatError(name + ": not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint32_t chunk_size = read_u32(data + pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + 16 > size) throw FormatError(name + ": short fmt chunk");
      const std::uint16_t format = read_u16(data + body);
      const std::uint16_t channels = read_u16(data + body + 2);
      sample_rate = static_cast<int>(read_u32(data + body + 4));
      const std::uint16_t bits = read_u16(data + body + 14);
      if (format != 1) throw FormatError(name + ": only PCM WAV is supported");
      if (channels != 1) throw FormatError(name + ": expected mono audio, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw FormatError(name + ": expected 16-bit samples, got " + std::to_string(bits));
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(name + ": data chunk before fmt chunk");
      const std::size_t available = std::min<std::size_t>(chunk_size, size - body);
      AudioStream audio;
      audio.sample_rate = sample_rate;
      audio.samples.resize(available / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(data + body + 2 * i));
        audio.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return audio;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw FormatError(name + ": no data chunk");
}

inline AudioStream read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes, path);
}

inline std::string encode_wav(const AudioStream& audio) {
  using wav_detail::put_u16;
  using wav_detail::put_u32;
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (float s : audio.samples) {
    const float clamped = std::clamp(s, -1.0f, 1.0f);
    const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

inline void write_wav(const std::string& path, const AudioStream& audio) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write WAV file: " + path);
  const std::string bytes = encode_wav(audio);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace kws
