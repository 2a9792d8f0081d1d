/*
 * Copyright 2026 The audiodream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "audiodream/error.hpp"

namespace audiodream {

/// Integer PCM audio with one sample array per channel.
struct PcmWave {
  std::uint32_t sample_rate = 8000;
  std::vector<std::vector<std::int16_t>> channels;

  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t frames() const noexcept {
    return channels.empty() ? 0 : channels.front().size();
  }

  /// Throws ContractError unless rate and channel count are positive and all
  /// channels have equal length.
  void validate() const {
    if (sample_rate == 0) throw ContractError("sample rate must be positive");
    if (channels.empty()) throw ContractError("wave has no channels");
    if (channels.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ContractError("too many channels");
    }
    for (const auto& ch : channels) {
      if (ch.size() != channels.front().size()) {
        throw ContractError("channel lengths differ");
      }
    }
  }

  bool operator==(const PcmWave&) const = default;
};

class DecodeError : public Error {
 public:
  enum class Kind {
    bad_magic,
    not_wave,
    missing_format,
    missing_data,
    unsupported_format,
    unsupported_bit_depth,
    malformed,
    truncated,
  };

  DecodeError(Kind kind, const std::string& what)
      : Error("wav decode: " + what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes)
      : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw DecodeError(DecodeError::Kind::truncated,
                        std::string("truncated ") + what);
    }
  }
  std::string tag() {
    need(4, "chunk id");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  std::uint32_t u32() {
    need(4, "field");
    std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                      static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8 |
                      static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16 |
                      static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24;
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2, "field");
    std::uint16_t v = static_cast<std::uint16_t>(
        bytes_[pos_] | static_cast<unsigned>(bytes_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  void skip(std::size_t n) {
    need(n, "chunk body");
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace detail

/// Parses a RIFF/WAVE stream holding 16-bit integer PCM. Chunks other than
/// "fmt " and "data" are skipped.
inline PcmWave wav_decode(const std::vector<std::uint8_t>& bytes) {
  using K = DecodeError::Kind;
  detail::ByteReader in(bytes);
  if (bytes.size() < 4) throw DecodeError(K::truncated, "stream shorter than RIFF magic");
  if (in.tag() != "RIFF") throw DecodeError(K::bad_magic, "missing RIFF magic");
  in.u32();  // RIFF size; the actual stream length is authoritative
  if (in.tag() != "WAVE") throw DecodeError(K::not_wave, "RIFF form is not WAVE");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  while (in.remaining() > 0) {
    const std::string id = in.tag();
    const std::uint32_t size = in.u32();
    if (id == "fmt ") {
      if (size < 16) throw DecodeError(K::malformed, "fmt chunk too small");
      in.need(size, "fmt chunk");
      const std::uint16_t format = in.u16();
      channels = in.u16();
      rate = in.u32();
      in.u32();  // byte rate
      block_align = in.u16();
      bits = in.u16();
      in.skip(size - 16 + (size & 1u));
      if (format != 1) {
        throw DecodeError(K::unsupported_format,
                          "format code " + std::to_string(format) + " is not PCM");
      }
      if (bits != 16) {
        throw DecodeError(K::unsupported_bit_depth,
                          std::to_string(bits) + " bits per sample");
      }
      if (channels == 0 || rate == 0 || block_align != channels * 2u) {
        throw DecodeError(K::malformed, "inconsistent fmt fields");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DecodeError(K::missing_format, "data chunk before fmt chunk");
      in.need(size, "data chunk");
      if (size % block_align != 0) {
        throw DecodeError(K::malformed, "data size is not a whole number of frames");
      }
      PcmWave wave;
      wave.sample_rate = rate;
      const std::size_t frames = size / block_align;
      wave.channels.assign(channels, std::vector<std::int16_t>(frames));
      std::size_t p = in.position();
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t c = 0; c < channels; ++c, p += 2) {
          const auto u = static_cast<std::uint16_t>(
              bytes[p] | static_cast<unsigned>(bytes[p + 1]) << 8);
          wave.channels[c][f] = static_cast<std::int16_t>(u);
        }
      }
      return wave;
    } else {
      in.skip(size + (size & 1u));
    }
  }
  throw DecodeError(have_fmt ? K::missing_data : K::missing_format,
                    have_fmt ? "no data chunk" : "no fmt chunk");
}

/// Canonical 44-byte-header little-endian RIFF/WAVE, PCM, 16 bits.
inline std::vector<std::uint8_t> wav_encode(const PcmWave& wave) {
  wave.validate();
  const auto channels = static_cast<std::uint16_t>(wave.channel_count());
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(wave.frames() * channels * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, 36 + data_bytes);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, channels);
  detail::put_u32(out, wave.sample_rate);
  detail::put_u32(out, wave.sample_rate * channels * 2u);
  detail::put_u16(out, static_cast<std::uint16_t>(channels * 2));
  detail::put_u16(out, 16);
  detail::put_tag(out, "data");
  detail::put_u32(out, data_bytes);
  for (std::size_t f = 0; f < wave.frames(); ++f) {
    for (const auto& ch : wave.channels) {
      detail::put_u16(out, static_cast<std::uint16_t>(ch[f]));
    }
  }
  return out;
}

/// Rounds half away from zero and saturates to the int16 range.
inline std::int16_t saturate_pcm16(double v) {
  const double r = std::round(v);
  if (!(r > -32768.0)) return -32768;
  if (r > 32767.0) return 32767;
  return static_cast<std::int16_t>(r);
}

/// Averages all channels into one.
inline PcmWave to_mono(const PcmWave& wave) {
  wave.validate();
  if (wave.channel_count() == 1) return wave;
  PcmWave out;
  out.sample_rate = wave.sample_rate;
  out.channels.assign(1, std::vector<std::int16_t>(wave.frames()));
  const double n = static_cast<double>(wave.channel_count());
  for (std::size_t f = 0; f < wave.frames(); ++f) {
    std::int64_t sum = 0;
    for (const auto& ch : wave.channels) sum += ch[f];
    out.channels[0][f] = saturate_pcm16(static_cast<double>(sum) / n);
  }
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace audiodream
