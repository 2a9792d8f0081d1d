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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "audiodream/genre_net.hpp"
#include "test_util.hpp"

namespace audiodream {
namespace {

TEST(Architecture, ShapeLedger) {
  const Architecture a;
  EXPECT_EQ(a.frames(0), 5000u);
  EXPECT_EQ(a.frames(1), 622u);
  EXPECT_EQ(a.frames(2), 62u);
  EXPECT_EQ(a.dense_inputs(), 992u);

  const Architecture tiny = testing::tiny_architecture();
  EXPECT_EQ(tiny.frames(0), 31u);
  EXPECT_EQ(tiny.frames(1), 14u);
  EXPECT_EQ(tiny.frames(2), 6u);
}

TEST(Forward, FullSizeShapesAndFiniteLogits) {
  const GenreNet net = init_parameters(1);
  const auto r = forward(net, Tensor(Shape{1, 1, 40000}, 0.0), Mode::inference);
  EXPECT_EQ(r.logits.shape(), (Shape{1, 5}));
  EXPECT_TRUE(all_finite(r.logits));
  EXPECT_EQ(r.activations[0].shape(), (Shape{1, 16, 5000}));
  EXPECT_EQ(r.activations[1].shape(), (Shape{1, 16, 622}));
  EXPECT_EQ(r.activations[2].shape(), (Shape{1, 16, 62}));
}

TEST(Forward, RejectsWrongInputShape) {
  const GenreNet net = init_parameters(1, testing::tiny_architecture());
  EXPECT_THROW(forward(net, Tensor(Shape{1, 1, 63}), Mode::inference), ShapeError);
  EXPECT_THROW(forward(net, Tensor(Shape{1, 2, 64}), Mode::inference), ShapeError);
  EXPECT_THROW(forward(net, Tensor(Shape{64}), Mode::inference), ShapeError);
}

TEST(Forward, IdenticalClipsGiveIdenticalRows) {
  std::mt19937_64 rng(4);
  const GenreNet net = init_parameters(2);
  const Tensor clip = testing::random_tensor({40000}, rng);
  std::vector<double> two(clip.values());
  two.insert(two.end(), clip.values().begin(), clip.values().end());
  for (Mode mode : {Mode::inference, Mode::training}) {
    const auto r = forward(net, Tensor(Shape{2, 1, 40000}, two), mode);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(r.logits[k], r.logits[5 + k]);
  }
}

TEST(Forward, InferenceIsPureAndBitReproducible) {
  std::mt19937_64 rng(6);
  const GenreNet net = testing::randomized_tiny_net(rng);
  const GenreNet copy = net;
  const Tensor x = testing::random_tensor({4, 1, 64}, rng);
  const auto a = forward(net, x, Mode::inference);
  const auto b = forward(net, x, Mode::inference);
  EXPECT_EQ(a.logits, b.logits);
  // training mode reports batch statistics but leaves the net alone
  forward(net, x, Mode::training);
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    EXPECT_EQ(net.bn[i].running_mean, copy.bn[i].running_mean);
    EXPECT_EQ(net.bn[i].running_var, copy.bn[i].running_var);
  }
}

TEST(Forward, LayerOrderIsConvBatchnormRectify) {
  std::mt19937_64 rng(10);
  const GenreNet net = testing::randomized_tiny_net(rng);
  const Tensor x = testing::random_tensor({1, 1, 64}, rng);
  const auto r = forward(net, x, Mode::inference);

  BatchNormLayer bn = net.bn[0];
  const Tensor z = conv1d_forward(x.reshaped({1, 64}), net.conv[0]);
  const Tensor expected = rectify(batchnorm_forward(z.reshaped({1, 3, 31}), bn, Mode::inference));
  EXPECT_EQ(r.activations[0], expected);
}

TEST(Forward, TrainingStatisticsFoldIntoRunningAverages) {
  std::mt19937_64 rng(14);
  GenreNet net = init_parameters(3, testing::tiny_architecture());
  const Tensor x = testing::random_tensor({4, 1, 64}, rng);
  const auto r = forward(net, x, Mode::training);
  update_running_statistics(net, r.batch_stats);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(net.bn[0].running_mean[c], 0.1 * r.batch_stats[0].mean[c]);
    EXPECT_DOUBLE_EQ(net.bn[0].running_var[c], 0.9 + 0.1 * r.batch_stats[0].variance[c]);
    EXPECT_GE(net.bn[0].running_var[c], 0.0);
  }
}

TEST(InitParameters, DeterministicPerSeed) {
  const GenreNet a = init_parameters(42), b = init_parameters(42), c = init_parameters(43);
  bool differs = false;
  for (std::size_t i = 0; i < kConvLayers; ++i) {
    EXPECT_EQ(a.conv[i].weights, b.conv[i].weights);
    differs = differs || a.conv[i].weights != c.conv[i].weights;
  }
  EXPECT_EQ(a.dense.weights, b.dense.weights);
  EXPECT_TRUE(differs);
}

TEST(InitParameters, GlorotBoundsAndIdentityNormalization) {
  const GenreNet net = init_parameters(5);
  const double b1 = std::sqrt(6.0 / (1 * 8 + 16 * 8));
  EXPECT_NEAR(b1, 0.21004, 1e-5);  // sqrt(6 / 136)
  for (double w : net.conv[0].weights.data()) {
    EXPECT_GT(w, -b1);
    EXPECT_LT(w, b1);
  }
  const double b3 = std::sqrt(6.0 / (16 * 128 + 16 * 128));
  for (double w : net.conv[2].weights.data()) EXPECT_LT(std::abs(w), b3);
  const double bd = std::sqrt(6.0 / (992 + 5));
  for (double w : net.dense.weights.data()) EXPECT_LT(std::abs(w), bd);

  for (std::size_t i = 0; i < kConvLayers; ++i) {
    EXPECT_EQ(net.conv[i].bias, Tensor(Shape{16}, 0.0));
    EXPECT_EQ(net.bn[i].gamma, Tensor(Shape{16}, 1.0));
    EXPECT_EQ(net.bn[i].beta, Tensor(Shape{16}, 0.0));
    EXPECT_EQ(net.bn[i].running_mean, Tensor(Shape{16}, 0.0));
    EXPECT_EQ(net.bn[i].running_var, Tensor(Shape{16}, 1.0));
    EXPECT_EQ(net.conv[i].stride, 8u);
  }
  EXPECT_EQ(net.conv[1].weights.shape(), (Shape{16, 16, 32}));
  EXPECT_EQ(net.conv[2].weights.shape(), (Shape{16, 16, 128}));
  EXPECT_EQ(net.dense.weights.shape(), (Shape{5, 992}));
}

TEST(Gradients, LossGradientsMatchFiniteDifferencesOnTinyNet) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto check = testing::loss_gradient_check(seed);
    EXPECT_GT(check.checked, 300u);
    EXPECT_LT(check.max_rel_error, 1e-5) << "seed " << seed;
  }
}

}  // namespace
}  // namespace audiodream
