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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/layers.hpp"
#include "audiodream/tape.hpp"
#include "audiodream/tensor.hpp"

namespace audiodream {

inline constexpr std::size_t kConvLayers = 3;

/// Genre labels in class-index order.
inline constexpr std::array<const char*, 5> kGenres = {
    "alternative", "electronica", "pop", "rap", "rock"};

/// Architecture constants. The defaults are the full-size classifier:
/// 40000 input samples, three 16-filter layers with kernels 8/32/128 and
/// stride 8, and five output classes.
struct Architecture {
  std::size_t input_length = 40000;
  std::size_t channels = 16;
  std::array<std::size_t, kConvLayers> kernels{8, 32, 128};
  std::size_t stride = 8;
  std::size_t classes = 5;

  std::size_t in_channels(std::size_t layer) const {
    return layer == 0 ? 1 : channels;
  }

  /// Frames produced by conv layer `layer` (0-based).
  std::size_t frames(std::size_t layer) const {
    std::size_t len = input_length;
    for (std::size_t i = 0; i <= layer; ++i) {
      len = conv_output_length(len, kernels[i], stride);
    }
    return len;
  }

  std::size_t dense_inputs() const { return channels * frames(kConvLayers - 1); }

  void validate() const {
    if (channels == 0 || stride == 0 || classes == 0 || input_length == 0) {
      throw ShapeError("architecture constants must be positive");
    }
    std::size_t len = input_length;
    for (std::size_t k : kernels) {
      if (k == 0 || len < k) {
        throw ShapeError("architecture: kernel does not fit its input");
      }
      len = conv_output_length(len, k, stride);
    }
  }

  bool operator==(const Architecture&) const = default;
};

struct ConvLayer {
  Tensor weights;  // [out_channels, in_channels, kernel]
  Tensor bias;     // [out_channels]
  std::size_t stride = 8;
};

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double eps = 1e-5;
  double momentum = 0.1;
};

struct DenseLayer {
  Tensor weights;  // [classes, dense_inputs]
  Tensor bias;     // [classes]
};

enum class Mode { training, inference };

/// Parameters of the convolutional genre classifier.
struct GenreNet {
  Architecture arch;
  std::array<ConvLayer, kConvLayers> conv;
  std::array<BatchNormLayer, kConvLayers> bn;
  DenseLayer dense;
  Mode mode = Mode::inference;
};

/// Every tensor of the net in checkpoint order: per layer conv weights and
/// bias then batchnorm gamma, beta, running mean, running variance; finally
/// the dense weights and bias.
template <class Net, class Fn>
void for_each_tensor(Net& net, Fn&& fn) {
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    fn(net.conv[i].weights);
    fn(net.conv[i].bias);
    fn(net.bn[i].gamma);
    fn(net.bn[i].beta);
    fn(net.bn[i].running_mean);
    fn(net.bn[i].running_var);
  }
  fn(net.dense.weights);
  fn(net.dense.bias);
}

/// Trainable tensors, in the same relative order as for_each_tensor.
inline std::vector<Tensor*> trainable_parameters(GenreNet& net) {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    out.push_back(&net.conv[i].weights);
    out.push_back(&net.conv[i].bias);
    out.push_back(&net.bn[i].gamma);
    out.push_back(&net.bn[i].beta);
  }
  out.push_back(&net.dense.weights);
  out.push_back(&net.dense.bias);
  return out;
}

inline std::vector<const Tensor*> trainable_parameters(const GenreNet& net) {
  std::vector<const Tensor*> out;
  for (Tensor* t : trainable_parameters(const_cast<GenreNet&>(net))) out.push_back(t);
  return out;
}

inline std::size_t parameter_count(const GenreNet& net) {
  std::size_t n = 0;
  for (const Tensor* t : trainable_parameters(net)) n += t->size();
  return n;
}

/// Expected shape of every tensor, in for_each_tensor order.
inline std::vector<Shape> expected_shapes(const Architecture& arch) {
  std::vector<Shape> shapes;
  const std::size_t C = arch.channels;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    shapes.push_back({C, arch.in_channels(i), arch.kernels[i]});
    for (int j = 0; j < 5; ++j) shapes.push_back({C});
  }
  shapes.push_back({arch.classes, arch.dense_inputs()});
  shapes.push_back({arch.classes});
  return shapes;
}

/// Glorot-uniform weights with bound sqrt(6 / (fan_in + fan_out)), zero
/// biases, identity batchnorm. Fully determined by `seed`.
inline GenreNet init_parameters(std::uint64_t seed, const Architecture& arch = {}) {
  arch.validate();
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Shape shape, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
  };

  GenreNet net;
  net.arch = arch;
  const std::size_t C = arch.channels;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    const std::size_t in = arch.in_channels(i), k = arch.kernels[i];
    net.conv[i].weights = glorot({C, in, k}, static_cast<double>(in * k),
                                 static_cast<double>(C * k));
    net.conv[i].bias = Tensor(Shape{C}, 0.0);
    net.conv[i].stride = arch.stride;
    net.bn[i].gamma = Tensor(Shape{C}, 1.0);
    net.bn[i].beta = Tensor(Shape{C}, 0.0);
    net.bn[i].running_mean = Tensor(Shape{C}, 0.0);
    net.bn[i].running_var = Tensor(Shape{C}, 1.0);
  }
  const std::size_t D = arch.dense_inputs();
  net.dense.weights = glorot({arch.classes, D}, static_cast<double>(D),
                             static_cast<double>(arch.classes));
  net.dense.bias = Tensor(Shape{arch.classes}, 0.0);
  return net;
}

/// Tape handles for the trainable parameters of a net.
struct NetVars {
  std::array<Var, kConvLayers> conv_weights;
  std::array<Var, kConvLayers> conv_bias;
  std::array<Var, kConvLayers> gamma;
  std::array<Var, kConvLayers> beta;
  Var dense_weights;
  Var dense_bias;

  /// Same order as trainable_parameters().
  std::vector<Var> trainable() const {
    std::vector<Var> out;
    for (std::size_t i = 0; i < kConvLayers; ++i) {
      out.insert(out.end(), {conv_weights[i], conv_bias[i], gamma[i], beta[i]});
    }
    out.push_back(dense_weights);
    out.push_back(dense_bias);
    return out;
  }
};

inline NetVars bind_parameters(Tape& tape, const GenreNet& net, bool requires_grad) {
  NetVars v;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    v.conv_weights[i] = tape.leaf(net.conv[i].weights, requires_grad);
    v.conv_bias[i] = tape.leaf(net.conv[i].bias, requires_grad);
    v.gamma[i] = tape.leaf(net.bn[i].gamma, requires_grad);
    v.beta[i] = tape.leaf(net.bn[i].beta, requires_grad);
  }
  v.dense_weights = tape.leaf(net.dense.weights, requires_grad);
  v.dense_bias = tape.leaf(net.dense.bias, requires_grad);
  return v;
}

struct TapedForward {
  /// Post-rectify output of each computed conv layer.
  std::array<std::optional<Var>, kConvLayers> activations;
  std::optional<Var> logits;
  /// Filled in training mode only.
  std::array<BatchStatistics, kConvLayers> batch_stats;
};

/// Records conv -> batchnorm -> rectify for the first `conv_layers` layers,
/// then the dense output layer when all three were computed and
/// `with_logits` is set. `input` must be [N, 1, input_length].
inline TapedForward forward_on_tape(const GenreNet& net, const NetVars& vars, Var input,
                                    Mode mode, std::size_t conv_layers = kConvLayers,
                                    bool with_logits = true) {
  const Tensor& x = input.value();
  const auto& arch = net.arch;
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != arch.input_length) {
    throw ShapeError("network input must be [N,1," + std::to_string(arch.input_length) +
                     "], got " + to_string(x.shape()));
  }
  if (conv_layers > kConvLayers) throw ContractError("at most three conv layers");

  TapedForward out;
  Var h = input;
  for (std::size_t i = 0; i < conv_layers; ++i) {
    Var z = conv1d(h, vars.conv_weights[i], vars.conv_bias[i], net.conv[i].stride);
    Var n = mode == Mode::training
                ? batchnorm_train(z, vars.gamma[i], vars.beta[i], net.bn[i].eps,
                                  &out.batch_stats[i])
                : batchnorm_infer(z, vars.gamma[i], vars.beta[i], net.bn[i].running_mean,
                                  net.bn[i].running_var, net.bn[i].eps);
    h = rectify(n);
    out.activations[i] = h;
  }
  if (conv_layers == kConvLayers && with_logits) {
    out.logits = dense(flatten(h), vars.dense_weights, vars.dense_bias);
  }
  return out;
}

struct ForwardResult {
  Tensor logits;                                    // [N, classes]
  std::array<Tensor, kConvLayers> activations;      // [N, channels, frames]
  std::array<BatchStatistics, kConvLayers> batch_stats;
};

/// Forward pass over a batch [N, 1, input_length]. Does not modify the net;
/// in training mode the batch statistics are returned for the caller to fold
/// into the running averages.
inline ForwardResult forward(const GenreNet& net, const Tensor& batch, Mode mode) {
  Tape tape;
  const NetVars vars = bind_parameters(tape, net, false);
  const auto fwd = forward_on_tape(net, vars, tape.constant(batch), mode);
  ForwardResult out;
  out.logits = fwd.logits->value();
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    out.activations[i] = fwd.activations[i]->value();
  }
  out.batch_stats = fwd.batch_stats;
  return out;
}

/// running <- (1 - momentum) * running + momentum * batch
inline void fold_statistics(BatchNormLayer& bn, const BatchStatistics& stats) {
  for (std::size_t c = 0; c < bn.running_mean.size(); ++c) {
    bn.running_mean[c] = (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * stats.mean[c];
    bn.running_var[c] = (1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * stats.variance[c];
  }
}

inline void update_running_statistics(GenreNet& net,
                                      const std::array<BatchStatistics, kConvLayers>& stats) {
  for (std::size_t i = 0; i < kConvLayers; ++i) fold_statistics(net.bn[i], stats[i]);
}

/// Stacks equal-length signals into a [N, 1, L] batch.
inline Tensor make_batch(std::span<const std::span<const double>> signals) {
  if (signals.empty()) throw ShapeError("empty batch");
  const std::size_t L = signals.front().size();
  std::vector<double> data;
  data.reserve(signals.size() * L);
  for (auto s : signals) {
    if (s.size() != L) throw ShapeError("signals in a batch differ in length");
    data.insert(data.end(), s.begin(), s.end());
  }
  return Tensor(Shape{signals.size(), 1, L}, std::move(data));
}

/// Conv layer applied to a single [C_in, L] signal.
inline Tensor conv1d_forward(const Tensor& input, const ConvLayer& layer) {
  Tape tape;
  return conv1d(tape.constant(input), tape.constant(layer.weights),
                tape.constant(layer.bias), layer.stride)
      .value();
}

/// Batch normalization of an [N, C, L] tensor. In training mode the batch
/// statistics are used and the layer's running statistics are updated.
inline Tensor batchnorm_forward(const Tensor& x, BatchNormLayer& layer, Mode mode) {
  Tape tape;
  Var g = tape.constant(layer.gamma), b = tape.constant(layer.beta);
  if (mode == Mode::inference) {
    return batchnorm_infer(tape.constant(x), g, b, layer.running_mean, layer.running_var,
                           layer.eps)
        .value();
  }
  BatchStatistics stats;
  Tensor y = batchnorm_train(tape.constant(x), g, b, layer.eps, &stats).value();
  fold_statistics(layer, stats);
  return y;
}

inline Tensor rectify(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Mean softmax cross-entropy of [N, K] logits.
inline double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  Tape tape;
  return softmax_cross_entropy(tape.constant(logits), labels).value().item();
}

}  // namespace audiodream
