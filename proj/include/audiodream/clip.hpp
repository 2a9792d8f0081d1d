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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/resample.hpp"
#include "audiodream/wav.hpp"

namespace audiodream {

/// Samples per network input: five seconds at 8 kHz.
inline constexpr std::size_t kClipSamples = 40000;
/// Output peak after normalization, as a fraction of full scale.
inline constexpr double kPeakTarget = 0.95;

/// Five seconds of mono 8 kHz audio as doubles in nominal range [-1, 1].
class AudioClip {
 public:
  explicit AudioClip(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.size() != kClipSamples) {
      throw ShapeError("audio clip needs exactly " + std::to_string(kClipSamples) +
                       " samples, got " + std::to_string(samples_.size()));
    }
    for (double v : samples_) {
      if (!std::isfinite(v)) throw ContractError("audio clip sample is not finite");
    }
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }

  bool operator==(const AudioClip&) const = default;

 private:
  std::vector<double> samples_;
};

/// Splits an 8 kHz mono wave into consecutive non-overlapping clips. The
/// trailing remainder shorter than a clip is dropped; samples map to x/32768.
inline std::vector<AudioClip> segment(const PcmWave& wave) {
  wave.validate();
  if (wave.sample_rate != kTargetRate || wave.channel_count() != 1) {
    throw ContractError("segment expects an 8000 Hz mono wave");
  }
  const auto& x = wave.channels[0];
  const std::size_t count = x.size() / kClipSamples;
  std::vector<AudioClip> clips;
  clips.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> s(kClipSamples);
    for (std::size_t j = 0; j < kClipSamples; ++j) {
      s[j] = static_cast<double>(x[i * kClipSamples + j]) / 32768.0;
    }
    clips.emplace_back(std::move(s));
  }
  return clips;
}

/// Peak-normalizes a signal to 0.95 of full scale and quantizes it to an
/// 8 kHz mono 16-bit wave. Silence stays silent.
inline PcmWave signal_to_wave(std::span<const double> signal) {
  double peak = 0.0;
  for (double v : signal) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? kPeakTarget / peak : 0.0;
  PcmWave out;
  out.sample_rate = kTargetRate;
  out.channels.assign(1, std::vector<std::int16_t>(signal.size()));
  for (std::size_t i = 0; i < signal.size(); ++i) {
    out.channels[0][i] = saturate_pcm16(signal[i] * gain * 32767.0);
  }
  return out;
}

inline PcmWave clip_to_wave(const AudioClip& clip) {
  return signal_to_wave(clip.samples());
}

}  // namespace audiodream
