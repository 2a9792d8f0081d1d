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
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "audiodream/clip.hpp"
#include "audiodream/error.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/tape.hpp"

namespace audiodream {

/// Which conv layers contribute to the dream objective.
class LayerSelection {
 public:
  static LayerSelection all() { return LayerSelection({true, true, true}); }
  /// `layer` is 1-based.
  static LayerSelection only(std::size_t layer) {
    if (layer < 1 || layer > kConvLayers) throw ConfigError("layer must be 1, 2 or 3");
    std::array<bool, kConvLayers> m{};
    m[layer - 1] = true;
    return LayerSelection(m);
  }

  /// "all" or a comma-separated list of 1-based layer numbers, e.g. "1,3".
  static LayerSelection parse(const std::string& text) {
    if (text == "all" || text == "ALL") return all();
    std::array<bool, kConvLayers> m{};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "1" || item == "2" || item == "3") {
        m[static_cast<std::size_t>(item[0] - '1')] = true;
      } else {
        throw ConfigError("bad layer '" + item + "' in selection '" + text + "'");
      }
    }
    LayerSelection sel(m);
    if (sel.empty()) throw ConfigError("layer selection is empty");
    return sel;
  }

  explicit LayerSelection(std::array<bool, kConvLayers> mask = {}) : mask_(mask) {}

  bool contains(std::size_t index0) const { return mask_.at(index0); }
  bool empty() const { return std::none_of(mask_.begin(), mask_.end(), [](bool b) { return b; }); }

  /// Number of conv layers that must be evaluated.
  std::size_t depth() const {
    std::size_t d = 0;
    for (std::size_t i = 0; i < kConvLayers; ++i) {
      if (mask_[i]) d = i + 1;
    }
    return d;
  }

  std::string to_string() const {
    if (mask_ == std::array<bool, kConvLayers>{true, true, true}) return "all";
    std::string out;
    for (std::size_t i = 0; i < kConvLayers; ++i) {
      if (!mask_[i]) continue;
      if (!out.empty()) out += ',';
      out += static_cast<char>('1' + i);
    }
    return out;
  }

  bool operator==(const LayerSelection&) const = default;

 private:
  std::array<bool, kConvLayers> mask_;
};

struct DreamConfig {
  LayerSelection layers = LayerSelection::all();
  std::size_t steps = 100;
  double step_size = 0.01;
  bool normalize_gradient = true;

  void validate() const {
    if (layers.empty()) throw ConfigError("layer selection is empty");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (!(step_size > 0.0)) throw ConfigError("step size must be positive");
  }
};

/// Objective value before the first step and after every step.
struct DreamTrace {
  std::vector<double> objective;

  /// "step,objective" CSV; step 0 is the unmodified input.
  std::string csv() const {
    std::string out = "step,objective\n";
    char buf[64];
    for (std::size_t i = 0; i < objective.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, objective[i]);
      out += buf;
    }
    return out;
  }
};

struct ObjectiveGradient {
  double value = 0.0;
  std::vector<double> gradient;  // d objective / d signal
};

namespace detail {

inline ObjectiveGradient run_objective(const GenreNet& net, std::span<const double> signal,
                                       const LayerSelection& sel, bool want_gradient) {
  if (sel.empty()) throw ConfigError("layer selection is empty");
  Tape tape;
  const NetVars vars = bind_parameters(tape, net, false);
  Tensor input(Shape{1, 1, signal.size()}, std::vector<double>(signal.begin(), signal.end()));
  Var x = tape.leaf(std::move(input), want_gradient);
  const auto fwd = forward_on_tape(net, vars, x, Mode::inference, sel.depth(), false);

  std::optional<Var> total;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    if (!sel.contains(i)) continue;
    Var s = reduce_sum(*fwd.activations[i]);
    total = total ? add(*total, s) : s;
  }
  ObjectiveGradient out;
  out.value = total->value().item();
  if (want_gradient) {
    const GradientMap g = tape.backward(*total);
    const auto d = g[x].data();
    out.gradient.assign(d.begin(), d.end());
  }
  return out;
}

}  // namespace detail

/// Sum of the post-rectify activations of the selected layers, with batch
/// normalization on running statistics.
inline double dream_objective(const GenreNet& net, std::span<const double> signal,
                              const LayerSelection& sel) {
  return detail::run_objective(net, signal, sel, false).value;
}

inline double dream_objective(const GenreNet& net, const AudioClip& clip,
                              const LayerSelection& sel) {
  return dream_objective(net, clip.samples(), sel);
}

inline ObjectiveGradient dream_objective_gradient(const GenreNet& net,
                                                  std::span<const double> signal,
                                                  const LayerSelection& sel) {
  return detail::run_objective(net, signal, sel, true);
}

/// Scales `g` so that its mean absolute value is (almost exactly) one.
inline void normalize_by_mean_abs(std::vector<double>& g) {
  double mean_abs = 0.0;
  for (double v : g) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(g.size());
  const double scale = 1.0 / (mean_abs + 1e-8);
  for (double& v : g) v *= scale;
}

struct DreamStep {
  std::vector<double> signal;
  double objective_before = 0.0;
};

/// One gradient ascent step: signal + step_size * dS/dsignal (optionally
/// normalized), clamped to [-1, 1].
inline DreamStep dream_step(const GenreNet& net, std::span<const double> signal,
                            const DreamConfig& cfg) {
  cfg.validate();
  auto og = dream_objective_gradient(net, signal, cfg.layers);
  if (cfg.normalize_gradient) normalize_by_mean_abs(og.gradient);
  DreamStep out;
  out.objective_before = og.value;
  out.signal.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    out.signal[i] = std::clamp(signal[i] + cfg.step_size * og.gradient[i], -1.0, 1.0);
  }
  return out;
}

struct DreamResult {
  std::vector<double> signal;
  DreamTrace trace;
};

/// Applies cfg.steps ascent steps. The network is only read.
inline DreamResult dream(const GenreNet& net, std::span<const double> signal,
                         const DreamConfig& cfg) {
  cfg.validate();
  DreamResult out;
  out.signal.assign(signal.begin(), signal.end());
  out.trace.objective.reserve(cfg.steps + 1);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    DreamStep step = dream_step(net, out.signal, cfg);
    out.trace.objective.push_back(step.objective_before);
    out.signal = std::move(step.signal);
  }
  out.trace.objective.push_back(dream_objective(net, out.signal, cfg.layers));
  return out;
}

struct ClipDream {
  AudioClip clip;
  DreamTrace trace;
};

inline ClipDream dream(const GenreNet& net, const AudioClip& clip, const DreamConfig& cfg) {
  DreamResult r = dream(net, clip.samples(), cfg);
  return ClipDream{AudioClip(std::move(r.signal)), std::move(r.trace)};
}

}  // namespace audiodream
