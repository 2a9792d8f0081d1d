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
#include <numbers>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/wav.hpp"

namespace audiodream {

inline constexpr std::uint32_t kTargetRate = 8000;
inline constexpr std::size_t kResampleTaps = 127;
/// Low-pass cutoff as a fraction of the target rate (3600 Hz at 8 kHz).
inline constexpr double kCutoffFraction = 0.45;

/// Hann-windowed sinc low-pass kernel with unit DC gain. `cutoff` is in
/// cycles per sample of the input rate (0 < cutoff < 0.5).
inline std::vector<double> lowpass_kernel(std::size_t taps, double cutoff) {
  std::vector<double> h(taps);
  const double center = static_cast<double>(taps - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double m = static_cast<double>(n) - center;
    const double arg = 2.0 * cutoff * m;
    const double sinc =
        m == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double window =
        taps == 1 ? 1.0
                  : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                         static_cast<double>(taps - 1));
    h[n] = 2.0 * cutoff * sinc * window;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

/// Low-pass filters a mono wave and keeps every factor-th sample so that the
/// result is at 8 kHz. Only integer decimation factors are supported; the
/// signal is zero-padded at both edges.
inline PcmWave resample_to_8k(const PcmWave& wave) {
  wave.validate();
  if (wave.channel_count() != 1) {
    throw ContractError("resample_to_8k expects a mono wave");
  }
  if (wave.sample_rate == kTargetRate) return wave;
  if (wave.sample_rate < kTargetRate || wave.sample_rate % kTargetRate != 0) {
    throw UnsupportedRateError("cannot decimate " +
                               std::to_string(wave.sample_rate) +
                               " Hz to 8000 Hz by an integer factor");
  }
  const std::size_t factor = wave.sample_rate / kTargetRate;
  const auto h = lowpass_kernel(
      kResampleTaps, kCutoffFraction * kTargetRate / wave.sample_rate);
  const auto& x = wave.channels[0];
  const std::size_t n_in = x.size();
  const std::size_t n_out = n_in / factor;
  const auto half = static_cast<std::ptrdiff_t>(kResampleTaps / 2);

  PcmWave out;
  out.sample_rate = kTargetRate;
  out.channels.assign(1, std::vector<std::int16_t>(n_out));
  for (std::size_t m = 0; m < n_out; ++m) {
    const auto center = static_cast<std::ptrdiff_t>(m * factor);
    double acc = 0.0;
    for (std::size_t k = 0; k < kResampleTaps; ++k) {
      const std::ptrdiff_t i = center + static_cast<std::ptrdiff_t>(k) - half;
      if (i < 0 || i >= static_cast<std::ptrdiff_t>(n_in)) continue;
      acc += h[k] * x[static_cast<std::size_t>(i)];
    }
    out.channels[0][m] = saturate_pcm16(acc);
  }
  return out;
}

}  // namespace audiodream
