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

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/wav.hpp"

namespace audiodream {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { bad_magic, unsupported_version, bad_architecture, shape_mismatch, truncated, trailing_data };

  CheckpointError(Kind kind, const std::string& what) : Error("checkpoint: " + what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Layout, all integers little-endian:
//   "GNET"  u32 version
//   u32 input_length, stride, channels, kernel[3], classes, dense_rows, dense_cols
//   per tensor in for_each_tensor order: u32 rank, u32 dims[rank], f64 data[...]

inline std::vector<std::uint8_t> checkpoint_bytes(const GenreNet& net) {
  std::vector<std::uint8_t> out{'G', 'N', 'E', 'T'};
  auto u32 = [&out](std::size_t v) {
    if (v > 0xFFFFFFFFu) throw ShapeError("dimension does not fit a checkpoint field");
    detail::put_u32(out, static_cast<std::uint32_t>(v));
  };
  u32(kCheckpointVersion);
  const auto& a = net.arch;
  u32(a.input_length);
  u32(a.stride);
  u32(a.channels);
  for (std::size_t k : a.kernels) u32(k);
  u32(a.classes);
  u32(a.classes);
  u32(a.dense_inputs());
  for_each_tensor(net, [&](const Tensor& t) {
    u32(t.rank());
    for (std::size_t d : t.shape()) u32(d);
    for (double v : t.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  });
  return out;
}

inline void checkpoint_save(const GenreNet& net, const std::filesystem::path& path) {
  write_file(path, checkpoint_bytes(net));
}

/// Parses a checkpoint into a net in inference mode. Nothing is returned
/// unless the whole stream is valid.
inline GenreNet checkpoint_load(const std::vector<std::uint8_t>& bytes) {
  using K = CheckpointError::Kind;
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) throw CheckpointError(K::truncated, "stream ends early");
  };
  auto u32 = [&]() -> std::uint32_t {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };

  need(4);
  if (std::string(bytes.begin(), bytes.begin() + 4) != "GNET") {
    throw CheckpointError(K::bad_magic, "missing GNET magic");
  }
  pos = 4;
  const std::uint32_t version = u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(K::unsupported_version, "version " + std::to_string(version) +
                                                      " is not supported (expected " +
                                                      std::to_string(kCheckpointVersion) + ")");
  }

  GenreNet net;
  auto& a = net.arch;
  a.input_length = u32();
  a.stride = u32();
  a.channels = u32();
  for (auto& k : a.kernels) k = u32();
  a.classes = u32();
  const std::size_t dense_rows = u32();
  const std::size_t dense_cols = u32();
  try {
    a.validate();
  } catch (const ShapeError& e) {
    throw CheckpointError(K::bad_architecture, e.what());
  }
  if (dense_rows != a.classes || dense_cols != a.dense_inputs()) {
    throw CheckpointError(K::bad_architecture, "dense shape disagrees with the conv stack");
  }

  const auto shapes = expected_shapes(a);
  std::size_t index = 0;
  for_each_tensor(net, [&](Tensor& t) {
    const std::uint32_t rank = u32();
    Shape shape(rank);
    for (auto& d : shape) d = u32();
    if (shape != shapes[index]) {
      throw CheckpointError(K::shape_mismatch, "tensor " + std::to_string(index) + " has shape " +
                                                   to_string(shape) + ", expected " +
                                                   to_string(shapes[index]));
    }
    const std::size_t count = shape_size(shape);
    need(count * 8);
    std::vector<double> data(count);
    for (double& v : data) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
      pos += 8;
      v = std::bit_cast<double>(bits);
    }
    t = Tensor(std::move(shape), std::move(data));
    ++index;
  });
  if (pos != bytes.size()) throw CheckpointError(K::trailing_data, "unexpected bytes after the last tensor");
  for (auto& c : net.conv) c.stride = a.stride;
  net.mode = Mode::inference;
  return net;
}

inline GenreNet checkpoint_load(const std::filesystem::path& path) {
  return checkpoint_load(read_file(path));
}

}  // namespace audiodream
