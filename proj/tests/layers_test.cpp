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
#include "audiodream/layers.hpp"
#include "test_util.hpp"

namespace audiodream {
namespace {

using testing::central_difference;
using testing::naive_conv;
using testing::random_tensor;
using testing::relative_error;

TEST(Conv1d, OutputLengthOfFirstLayer) {
  EXPECT_EQ(conv_output_length(40000, 8, 8), 5000u);
}

TEST(Conv1d, BoxFilterSumsFrames) {
  ConvLayer layer{Tensor(Shape{1, 1, 8}, 1.0), Tensor(Shape{1}, 0.0), 8};
  std::vector<double> ramp(16);
  for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<double>(i + 1);
  const Tensor y = conv1d_forward(Tensor(Shape{1, 16}, ramp), layer);
  EXPECT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_EQ(y.values(), (std::vector<double>{36, 100}));
}

TEST(Conv1d, ZeroInputYieldsBias) {
  std::mt19937_64 rng(1);
  ConvLayer layer{random_tensor({16, 1, 8}, rng), random_tensor({16}, rng), 8};
  const Tensor y = conv1d_forward(Tensor(Shape{1, 80}, 0.0), layer);
  ASSERT_EQ(y.shape(), (Shape{16, 10}));
  for (std::size_t o = 0; o < 16; ++o)
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(y[o * 10 + t], layer.bias[o]);
}

TEST(Conv1d, RejectsKernelLongerThanInput) {
  ConvLayer layer{Tensor(Shape{2, 1, 8}, 1.0), Tensor(Shape{2}, 0.0), 8};
  EXPECT_THROW(conv1d_forward(Tensor(Shape{1, 7}), layer), ShapeError);
  EXPECT_THROW(conv1d_forward(Tensor(Shape{2, 16}), layer), ShapeError);
}

TEST(Conv1d, MatchesNaiveLoopOnRandomInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> cin(1, 3), klen(1, 8), batch(1, 3), outc(1, 4);
  const std::size_t strides[] = {1, 2, 8};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t C = cin(rng), K = klen(rng), N = batch(rng), O = outc(rng);
    const std::size_t S = strides[trial % 3];
    const std::size_t L = std::uniform_int_distribution<std::size_t>(K, 64)(rng);
    const Tensor x = random_tensor({N, C, L}, rng), w = random_tensor({O, C, K}, rng),
                 b = random_tensor({O}, rng);
    Tape tape;
    const Tensor y = conv1d(tape.constant(x), tape.constant(w), tape.constant(b), S).value();
    const Tensor ref = naive_conv(x, w, b, S);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(relative_error(y[i], ref[i], 1e-300), 1e-12);
  }
}

TEST(Conv1d, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor({2, 2, 19}, rng), w = random_tensor({3, 2, 5}, rng),
               b = random_tensor({3}, rng);
  const Tensor probe = random_tensor({2, 3, 8}, rng);
  auto loss_of = [&](const Tensor& xv, const Tensor& wv, const Tensor& bv) {
    Tape t;
    return reduce_sum(mul(conv1d(t.constant(xv), t.constant(wv), t.constant(bv), 2), t.constant(probe)))
        .value()
        .item();
  };
  Tape tape;
  Var X = tape.leaf(x), W = tape.leaf(w), B = tape.leaf(b);
  const GradientMap g = tape.backward(reduce_sum(mul(conv1d(X, W, B, 2), tape.constant(probe))));

  auto check = [&](const Tensor& base, Var v, int which) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double fd = central_difference(
          [&](const std::vector<double>& p) {
            Tensor t(base.shape(), p);
            return which == 0 ? loss_of(t, w, b) : which == 1 ? loss_of(x, t, b) : loss_of(x, w, t);
          },
          base.values(), i);
      EXPECT_LT(relative_error(g[v][i], fd), 1e-6) << "operand " << which << " index " << i;
    }
  };
  check(x, X, 0);
  check(w, W, 1);
  check(b, B, 2);
}

BatchNormLayer identity_bn(std::size_t channels) {
  return BatchNormLayer{Tensor(Shape{channels}, 1.0), Tensor(Shape{channels}, 0.0),
                        Tensor(Shape{channels}, 0.0), Tensor(Shape{channels}, 1.0)};
}

TEST(BatchNorm, ConstantChannelMapsToBeta) {
  BatchNormLayer bn = identity_bn(2);
  bn.gamma = Tensor(Shape{2}, {3.0, -1.5});
  bn.beta = Tensor(Shape{2}, {0.25, -7.0});
  Tensor x(Shape{2, 2, 3}, {4, 4, 4, 9, 9, 9, 4, 4, 4, 9, 9, 9});
  const Tensor y = batchnorm_forward(x, bn, Mode::training);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_EQ(y[(n * 2 + 0) * 3 + t], 0.25);
      EXPECT_EQ(y[(n * 2 + 1) * 3 + t], -7.0);
    }
}

TEST(BatchNorm, TwoValuesStandardizeToPlusMinusOne) {
  BatchNormLayer bn = identity_bn(1);
  bn.eps = 0.0;
  const Tensor y = batchnorm_forward(Tensor(Shape{1, 1, 2}, {1, 3}), bn, Mode::training);
  EXPECT_EQ(y.values(), (std::vector<double>{-1, 1}));
  // running stats: 0.9 * 0 + 0.1 * 2 and 0.9 * 1 + 0.1 * 1
  EXPECT_DOUBLE_EQ(bn.running_mean[0], 0.2);
  EXPECT_DOUBLE_EQ(bn.running_var[0], 1.0);
}

TEST(BatchNorm, InferenceWithIdentityStatisticsIsNearIdentity) {
  BatchNormLayer bn = identity_bn(3);
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({2, 3, 10}, rng);
  const Tensor before_mean = bn.running_mean;
  const Tensor y = batchnorm_forward(x, bn, Mode::inference);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y[i] - x[i]), 1e-5 * std::abs(x[i]));
  EXPECT_EQ(bn.running_mean, before_mean);
}

TEST(BatchNorm, TrainingRejectsDegenerateBatch) {
  BatchNormLayer bn = identity_bn(2);
  EXPECT_THROW(batchnorm_forward(Tensor(Shape{1, 2, 1}), bn, Mode::training), DegenerateBatchError);
  EXPECT_NO_THROW(batchnorm_forward(Tensor(Shape{1, 2, 1}), bn, Mode::inference));
}

TEST(BatchNorm, TrainingOutputIsStandardizedPerChannel) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t N = 1 + trial % 4, C = 1 + trial % 3, L = 1 + (trial * 7) % 20;
    if (N * L < 2) continue;
    BatchNormLayer bn = identity_bn(C);
    bn.eps = 0.0;
    const Tensor x = random_tensor({N, C, L}, rng, -5.0, 5.0);
    const Tensor y = batchnorm_forward(x, bn, Mode::training);
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0, v = 0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t t = 0; t < L; ++t) m += y[(n * C + c) * L + t];
      m /= static_cast<double>(N * L);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t t = 0; t < L; ++t) v += std::pow(y[(n * C + c) * L + t] - m, 2);
      v /= static_cast<double>(N * L);
      EXPECT_LT(std::abs(m), 1e-10);
      EXPECT_NEAR(v, 1.0, 1e-6);
      EXPECT_GE(bn.running_var[c], 0.0);
    }
  }
}

TEST(BatchNorm, GradientsMatchFiniteDifferencesInBothModes) {
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor({3, 2, 5}, rng), gamma = random_tensor({2}, rng, 0.5, 2.0),
               beta = random_tensor({2}, rng), probe = random_tensor({3, 2, 5}, rng);
  const Tensor rmean = random_tensor({2}, rng), rvar = random_tensor({2}, rng, 0.5, 2.0);
  for (Mode mode : {Mode::training, Mode::inference}) {
    auto run = [&](Tape& t, Var X, Var G, Var B) {
      Var y = mode == Mode::training ? batchnorm_train(X, G, B, 1e-5)
                                     : batchnorm_infer(X, G, B, rmean, rvar, 1e-5);
      return reduce_sum(mul(y, t.constant(probe)));
    };
    auto loss_of = [&](const Tensor& xv, const Tensor& gv, const Tensor& bv) {
      Tape t;
      return run(t, t.constant(xv), t.constant(gv), t.constant(bv)).value().item();
    };
    Tape tape;
    Var X = tape.leaf(x), G = tape.leaf(gamma), B = tape.leaf(beta);
    const GradientMap g = tape.backward(run(tape, X, G, B));
    const Tensor* bases[] = {&x, &gamma, &beta};
    const Var vars[] = {X, G, B};
    for (int which = 0; which < 3; ++which) {
      const Tensor& base = *bases[which];
      for (std::size_t i = 0; i < base.size(); ++i) {
        const double fd = central_difference(
            [&](const std::vector<double>& p) {
              Tensor t(base.shape(), p);
              return which == 0 ? loss_of(t, gamma, beta)
                     : which == 1 ? loss_of(x, t, beta)
                                  : loss_of(x, gamma, t);
            },
            base.values(), i);
        EXPECT_LT(relative_error(g[vars[which]][i], fd), 1e-6);
      }
    }
  }
}

TEST(Rectify, ForwardAndSubgradient) {
  EXPECT_EQ(rectify(Tensor(Shape{3}, {-1, 0, 2})).values(), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(rectify(Tensor(Shape{4}, -3.0)).values(), std::vector<double>(4, 0.0));

  Tape tape;
  Var x = tape.leaf(Tensor(Shape{3}, {-1, 2, 0}));
  const GradientMap g = tape.backward(reduce_sum(rectify(x)));
  EXPECT_EQ(g[x].values(), (std::vector<double>{0, 1, 0}));

  auto f = [](const std::vector<double>& v) { return std::max(v[0], 0.0) + std::max(v[1], 0.0); };
  EXPECT_NEAR(central_difference(f, {-1, 2}, 0), 0.0, 1e-9);
  EXPECT_NEAR(central_difference(f, {-1, 2}, 1), 1.0, 1e-9);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  const Tensor x = random_tensor({3, 7}, rng), w = random_tensor({4, 7}, rng), b = random_tensor({4}, rng);
  const Tensor probe = random_tensor({3, 4}, rng);
  auto loss_of = [&](const Tensor& xv, const Tensor& wv, const Tensor& bv) {
    Tape t;
    return reduce_sum(mul(dense(t.constant(xv), t.constant(wv), t.constant(bv)), t.constant(probe)))
        .value()
        .item();
  };
  Tape tape;
  Var X = tape.leaf(x), W = tape.leaf(w), B = tape.leaf(b);
  const GradientMap g = tape.backward(reduce_sum(mul(dense(X, W, B), tape.constant(probe))));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double fd = central_difference(
        [&](const std::vector<double>& p) { return loss_of(x, Tensor(w.shape(), p), b); }, w.values(), i);
    EXPECT_LT(relative_error(g[W][i], fd), 1e-6);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = central_difference(
        [&](const std::vector<double>& p) { return loss_of(Tensor(x.shape(), p), w, b); }, x.values(), i);
    EXPECT_LT(relative_error(g[X][i], fd), 1e-6);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double fd = central_difference(
        [&](const std::vector<double>& p) { return loss_of(x, w, Tensor(b.shape(), p)); }, b.values(), i);
    EXPECT_LT(relative_error(g[B][i], fd), 1e-6);
  }
}

TEST(SoftmaxCrossEntropy, ClosedFormValues) {
  const std::vector<int> label0{0};
  EXPECT_NEAR(softmax_cross_entropy(Tensor(Shape{1, 5}, 0.3), label0), std::log(5.0), 1e-15);
  EXPECT_NEAR(softmax_cross_entropy(Tensor(Shape{1, 5}, {1, 0, 0, 0, 0}), label0),
              std::log(1.0 + 4.0 / std::exp(1.0)), 1e-15);
  EXPECT_NEAR(softmax_cross_entropy(Tensor(Shape{1, 5}, {1, 0, 0, 0, 0}), label0), 0.90483, 1e-5);
  EXPECT_LT(softmax_cross_entropy(Tensor(Shape{1, 5}, {50, 0, 0, 0, 0}), label0), 1e-20);
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(Tensor(Shape{1, 5}, {1000, -1000, 0, 0, 0}),
                                                  std::vector<int>{1})));
}

TEST(SoftmaxCrossEntropy, RejectsOutOfRangeLabels) {
  EXPECT_THROW(softmax_cross_entropy(Tensor(Shape{1, 5}), std::vector<int>{5}), LabelError);
  EXPECT_THROW(softmax_cross_entropy(Tensor(Shape{1, 5}), std::vector<int>{-1}), LabelError);
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusOneHotOverN) {
  std::mt19937_64 rng(31);
  const Tensor z = random_tensor({3, 5}, rng, -3, 3);
  const std::vector<int> labels{4, 0, 2};
  Tape tape;
  Var Z = tape.leaf(z);
  const GradientMap g = tape.backward(softmax_cross_entropy(Z, labels));
  for (std::size_t n = 0; n < 3; ++n) {
    double denom = 0;
    for (std::size_t k = 0; k < 5; ++k) denom += std::exp(z[n * 5 + k]);
    for (std::size_t k = 0; k < 5; ++k) {
      const double expected =
          (std::exp(z[n * 5 + k]) / denom - (static_cast<int>(k) == labels[n] ? 1.0 : 0.0)) / 3.0;
      EXPECT_NEAR(g[Z][n * 5 + k], expected, 1e-15);
      const double fd = central_difference(
          [&](const std::vector<double>& p) { return softmax_cross_entropy(Tensor(z.shape(), p), labels); },
          z.values(), n * 5 + k);
      EXPECT_LT(relative_error(g[Z][n * 5 + k], fd), 1e-6);
    }
  }
}

}  // namespace
}  // namespace audiodream
