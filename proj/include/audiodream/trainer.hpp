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
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "audiodream/clip.hpp"
#include "audiodream/error.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/optimizer.hpp"
#include "audiodream/tape.hpp"

namespace audiodream {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch size must be >= 2");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw ConfigError("momentum must lie in [0, 1)");
    }
  }
};

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double loss;        // mean of the batch losses
  double seconds;     // wall-clock, monotonic
};

struct TrainState {
  std::vector<Tensor> velocity;  // mirrors trainable_parameters()
  std::vector<EpochRecord> epoch_log;

  static TrainState initial(const GenreNet& net) {
    TrainState s;
    for (const Tensor* p : trainable_parameters(net)) s.velocity.emplace_back(p->shape(), 0.0);
    return s;
  }
};

/// Borrowed inputs and class labels. Every input must have the network's
/// input length.
struct DatasetView {
  std::vector<std::span<const double>> inputs;
  std::span<const int> labels;

  std::size_t size() const noexcept { return inputs.size(); }
};

inline DatasetView view_of(std::span<const AudioClip> clips, std::span<const int> labels) {
  DatasetView v;
  v.inputs.reserve(clips.size());
  for (const AudioClip& c : clips) v.inputs.push_back(c.samples());
  v.labels = labels;
  return v;
}

inline DatasetView view_of(const std::vector<std::vector<double>>& signals,
                           std::span<const int> labels) {
  DatasetView v;
  v.inputs.reserve(signals.size());
  for (const auto& s : signals) v.inputs.emplace_back(s);
  v.labels = labels;
  return v;
}

namespace detail {

inline void check_dataset(const GenreNet& net, const DatasetView& data) {
  if (data.size() == 0) throw ConfigError("dataset is empty");
  if (data.labels.size() != data.size()) {
    throw ConfigError("dataset has " + std::to_string(data.size()) + " inputs but " +
                      std::to_string(data.labels.size()) + " labels");
  }
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= net.arch.classes) {
      throw LabelError("label " + std::to_string(label) + " out of range");
    }
  }
  for (auto s : data.inputs) {
    if (s.size() != net.arch.input_length) {
      throw ShapeError("input of length " + std::to_string(s.size()) +
                       " does not match the network input length " +
                       std::to_string(net.arch.input_length));
    }
  }
}

inline Tensor gather_batch(const DatasetView& data, std::span<const std::size_t> idx) {
  std::vector<std::span<const double>> rows;
  rows.reserve(idx.size());
  for (std::size_t i : idx) rows.push_back(data.inputs[i]);
  return make_batch(rows);
}

}  // namespace detail

/// Sizes of the mini-batches one epoch over `n` examples uses: full batches,
/// then the remainder if it holds at least two examples.
inline std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> sizes(n / batch_size, batch_size);
  if (n % batch_size >= 2) sizes.push_back(n % batch_size);
  return sizes;
}

/// Example order for a given epoch; depends only on (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                            std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// Mean loss of a training-mode forward pass and its gradient with respect
/// to every trainable parameter, evaluated at `point` (one tensor per
/// trainable parameter). `stats` receives the batch statistics.
inline double loss_and_gradients(const GenreNet& net, const std::vector<Tensor>& point,
                                 const Tensor& batch, std::span<const int> labels,
                                 std::vector<Tensor>& grads,
                                 std::array<BatchStatistics, kConvLayers>* stats = nullptr) {
  GenreNet at = net;
  auto dst = trainable_parameters(at);
  if (point.size() != dst.size()) throw ShapeError("parameter point has wrong arity");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    require_same_shape(*dst[i], point[i], "loss_and_gradients");
    *dst[i] = point[i];
  }
  Tape tape;
  const NetVars vars = bind_parameters(tape, at, true);
  const auto fwd = forward_on_tape(at, vars, tape.constant(batch), Mode::training);
  Var loss = softmax_cross_entropy(*fwd.logits, labels);
  const GradientMap g = tape.backward(loss);
  grads.clear();
  for (Var v : vars.trainable()) grads.push_back(g[v]);
  if (stats) *stats = fwd.batch_stats;
  return loss.value().item();
}

/// One pass over `data` in a (seed, epoch)-determined order with one
/// Nesterov update per mini-batch. Appends to `state.epoch_log`.
inline EpochRecord train_epoch(GenreNet& net, const DatasetView& data, const TrainConfig& cfg,
                               TrainState& state) {
  cfg.validate();
  detail::check_dataset(net, data);
  if (state.velocity.empty()) state = TrainState::initial(net);
  const auto params = trainable_parameters(net);
  if (state.velocity.size() != params.size()) {
    throw ShapeError("train state does not match the network");
  }
  const auto sizes = batch_sizes(data.size(), cfg.batch_size);
  if (sizes.empty()) throw ConfigError("need at least two examples to form a batch");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t epoch = state.epoch_log.size() + 1;
  const auto order = epoch_order(data.size(), cfg.shuffle_seed, epoch);
  net.mode = Mode::training;

  double loss_sum = 0.0;
  std::size_t offset = 0;
  for (std::size_t size : sizes) {
    std::span<const std::size_t> idx(order.data() + offset, size);
    offset += size;
    const Tensor batch = detail::gather_batch(data, idx);
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(data.labels[i]);

    double batch_loss = 0.0;
    std::array<BatchStatistics, kConvLayers> stats;
    nesterov_step(
        std::span<Tensor* const>(params), std::span<Tensor>(state.velocity),
        [&](const std::vector<Tensor>& point) {
          std::vector<Tensor> grads;
          batch_loss = loss_and_gradients(net, point, batch, labels, grads, &stats);
          return grads;
        },
        cfg.learning_rate, cfg.momentum);
    update_running_statistics(net, stats);
    loss_sum += batch_loss;
  }
  net.mode = Mode::inference;

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  EpochRecord rec{epoch, loss_sum / static_cast<double>(sizes.size()), elapsed.count()};
  state.epoch_log.push_back(rec);
  return rec;
}

/// Runs cfg.epochs epochs from a fresh optimizer state. `on_epoch` is
/// called after each epoch.
inline TrainState train(GenreNet& net, const DatasetView& data, const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  TrainState state = TrainState::initial(net);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const EpochRecord rec = train_epoch(net, data, cfg, state);
    if (on_epoch) on_epoch(rec);
  }
  return state;
}

/// "epoch,loss,seconds" CSV.
inline std::string epoch_log_csv(std::span<const EpochRecord> log) {
  std::ostringstream os;
  os << "epoch,loss,seconds\n";
  char buf[96];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", r.epoch, r.loss, r.seconds);
    os << buf;
  }
  return os.str();
}

struct EvalReport {
  std::array<double, 5> per_genre_accuracy{};
  double overall_accuracy = 0.0;
  std::array<std::array<std::size_t, 5>, 5> confusion{};  // [true][predicted]

  std::size_t genre_count(std::size_t genre) const {
    std::size_t n = 0;
    for (std::size_t c : confusion[genre]) n += c;
    return n;
  }
};

/// Index of the largest element; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

/// Predicted class per input (inference mode).
inline std::vector<std::size_t> predict(const GenreNet& net, const DatasetView& data,
                                        std::size_t chunk = 16) {
  std::vector<std::size_t> preds;
  preds.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + chunk); ++i) idx.push_back(i);
    const auto result = forward(net, detail::gather_batch(data, idx), Mode::inference);
    const std::size_t K = net.arch.classes;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      preds.push_back(argmax(result.logits.data().subspan(r * K, K)));
    }
  }
  return preds;
}

/// Confusion matrix and accuracies from predictions. Genres with no
/// examples report accuracy 0.
inline EvalReport tally(std::span<const std::size_t> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw ConfigError("nothing to evaluate");
  if (predictions.size() != labels.size()) throw ConfigError("prediction and label counts differ");
  EvalReport report;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= 5 || predictions[i] >= 5) {
      throw LabelError("class index out of range");
    }
    report.confusion[static_cast<std::size_t>(labels[i])][predictions[i]] += 1;
  }
  std::size_t correct = 0;
  for (std::size_t g = 0; g < 5; ++g) {
    const std::size_t n = report.genre_count(g);
    correct += report.confusion[g][g];
    report.per_genre_accuracy[g] =
        n ? static_cast<double>(report.confusion[g][g]) / static_cast<double>(n) : 0.0;
  }
  report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return report;
}

inline EvalReport evaluate(const GenreNet& net, const DatasetView& data) {
  detail::check_dataset(net, data);
  if (net.arch.classes != 5) throw ConfigError("evaluation reports five genres");
  const auto preds = predict(net, data);
  return tally(preds, data.labels);
}

/// One-decimal percentage, e.g. 0.843 -> "84.3%".
inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

/// One "genre NN.N%" line per genre in label order, then the overall figure.
inline std::string format_accuracy_table(const EvalReport& r) {
  std::string out;
  for (std::size_t g = 0; g < 5; ++g) {
    out += std::string(kGenres[g]) + " " + format_percent(r.per_genre_accuracy[g]) + "\n";
  }
  out += "overall " + format_percent(r.overall_accuracy) + "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json acc = nlohmann::ordered_json::object();
  nlohmann::ordered_json pct = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (std::size_t g = 0; g < 5; ++g) {
    acc[kGenres[g]] = r.per_genre_accuracy[g];
    pct[kGenres[g]] = format_percent(r.per_genre_accuracy[g]);
    counts[kGenres[g]] = r.genre_count(g);
  }
  j["genres"] = kGenres;
  j["per_genre_accuracy"] = acc;
  j["per_genre_percent"] = pct;
  j["examples"] = counts;
  j["overall_accuracy"] = r.overall_accuracy;
  j["confusion"] = r.confusion;
  return j;
}

}  // namespace audiodream
