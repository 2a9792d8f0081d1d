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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/tape.hpp"
#include "audiodream/tensor.hpp"

namespace audiodream {

/// Output length of a valid (unpadded) strided convolution.
constexpr std::size_t conv_output_length(std::size_t input_length,
                                         std::size_t kernel,
                                         std::size_t stride) {
  return (input_length - kernel) / stride + 1;
}

namespace detail {

struct ConvDims {
  std::size_t batch, in_ch, length, out_ch, kernel, stride, out_len;
  bool batched;
};

inline ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b,
                          std::size_t stride) {
  ConvDims d{};
  if (x.rank() == 3) {
    d.batched = true;
    d.batch = x.dim(0);
    d.in_ch = x.dim(1);
    d.length = x.dim(2);
  } else if (x.rank() == 2) {
    d.batched = false;
    d.batch = 1;
    d.in_ch = x.dim(0);
    d.length = x.dim(1);
  } else {
    throw ShapeError("conv1d input must be [C,L] or [N,C,L], got " +
                     to_string(x.shape()));
  }
  if (w.rank() != 3 || w.dim(1) != d.in_ch) {
    throw ShapeError("conv1d weights " + to_string(w.shape()) +
                     " do not match input " + to_string(x.shape()));
  }
  d.out_ch = w.dim(0);
  d.kernel = w.dim(2);
  if (b.shape() != Shape{d.out_ch}) {
    throw ShapeError("conv1d bias must be [" + std::to_string(d.out_ch) +
                     "], got " + to_string(b.shape()));
  }
  if (stride == 0) throw ShapeError("conv1d stride must be >= 1");
  if (d.length < d.kernel) {
    throw ShapeError("conv1d input length " + std::to_string(d.length) +
                     " shorter than kernel " + std::to_string(d.kernel));
  }
  d.stride = stride;
  d.out_len = conv_output_length(d.length, d.kernel, stride);
  return d;
}

inline void require_rank3(const Tensor& x, const char* what) {
  if (x.rank() != 3) {
    throw ShapeError(std::string(what) + " expects [N,C,L], got " +
                     to_string(x.shape()));
  }
}

}  // namespace detail

/// Valid strided cross-correlation:
///   out[n,o,t] = bias[o] + sum_{c,k} w[o,c,k] * x[n,c,t*stride+k]
/// Accepts [C,L] or [N,C,L] input; the output has the same rank.
inline Var conv1d(Var x, Var weights, Var bias, std::size_t stride) {
  Tape& tape = detail::same_tape(x, weights);
  detail::same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weights.value();
  const Tensor& bv = bias.value();
  const auto d = detail::conv_dims(xv, wv, bv, stride);

  Shape out_shape = d.batched ? Shape{d.batch, d.out_ch, d.out_len}
                              : Shape{d.out_ch, d.out_len};
  Tensor out(out_shape);
  {
    const double* X = xv.data().data();
    const double* W = wv.data().data();
    double* Y = out.data().data();
    for (std::size_t n = 0; n < d.batch; ++n) {
      for (std::size_t o = 0; o < d.out_ch; ++o) {
        double* yrow = Y + (n * d.out_ch + o) * d.out_len;
        for (std::size_t t = 0; t < d.out_len; ++t) {
          double acc = bv[o];
          for (std::size_t c = 0; c < d.in_ch; ++c) {
            const double* wk = W + (o * d.in_ch + c) * d.kernel;
            const double* xk =
                X + (n * d.in_ch + c) * d.length + t * d.stride;
            for (std::size_t k = 0; k < d.kernel; ++k) acc += wk[k] * xk[k];
          }
          yrow[t] = acc;
        }
      }
    }
  }

  return tape.record(
      std::move(out), {x, weights, bias},
      [&xv, &wv, d](const Tensor& g, std::span<Tensor* const> in) {
        const double* G = g.data().data();
        const double* X = xv.data().data();
        const double* W = wv.data().data();
        if (in[1]) {
          double* dW = in[1]->data().data();
          for (std::size_t o = 0; o < d.out_ch; ++o) {
            for (std::size_t n = 0; n < d.batch; ++n) {
              const double* grow = G + (n * d.out_ch + o) * d.out_len;
              for (std::size_t c = 0; c < d.in_ch; ++c) {
                double* dwk = dW + (o * d.in_ch + c) * d.kernel;
                const double* xrow = X + (n * d.in_ch + c) * d.length;
                for (std::size_t t = 0; t < d.out_len; ++t) {
                  const double gt = grow[t];
                  const double* xk = xrow + t * d.stride;
                  for (std::size_t k = 0; k < d.kernel; ++k) {
                    dwk[k] += gt * xk[k];
                  }
                }
              }
            }
          }
        }
        if (in[2]) {
          double* dB = in[2]->data().data();
          for (std::size_t n = 0; n < d.batch; ++n) {
            for (std::size_t o = 0; o < d.out_ch; ++o) {
              const double* grow = G + (n * d.out_ch + o) * d.out_len;
              double s = 0.0;
              for (std::size_t t = 0; t < d.out_len; ++t) s += grow[t];
              dB[o] += s;
            }
          }
        }
        if (in[0]) {
          double* dX = in[0]->data().data();
          for (std::size_t n = 0; n < d.batch; ++n) {
            for (std::size_t o = 0; o < d.out_ch; ++o) {
              const double* grow = G + (n * d.out_ch + o) * d.out_len;
              for (std::size_t c = 0; c < d.in_ch; ++c) {
                const double* wk = W + (o * d.in_ch + c) * d.kernel;
                double* dxrow = dX + (n * d.in_ch + c) * d.length;
                for (std::size_t t = 0; t < d.out_len; ++t) {
                  const double gt = grow[t];
                  double* dxk = dxrow + t * d.stride;
                  for (std::size_t k = 0; k < d.kernel; ++k) {
                    dxk[k] += gt * wk[k];
                  }
                }
              }
            }
          }
        }
      });
}

/// Per-channel statistics gathered by a training-mode batch normalization.
struct BatchStatistics {
  Tensor mean;
  Tensor variance;  // population form
};

/// Batch normalization with statistics pooled over the batch and time axes
/// of an [N,C,L] input. `stats`, when given, receives the batch mean and
/// population variance.
inline Var batchnorm_train(Var x, Var gamma, Var beta, double eps,
                           BatchStatistics* stats = nullptr) {
  Tape& tape = detail::same_tape(x, gamma);
  detail::same_tape(x, beta);
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  detail::require_rank3(xv, "batchnorm");
  const std::size_t N = xv.dim(0), C = xv.dim(1), L = xv.dim(2);
  if (gv.shape() != Shape{C} || beta.value().shape() != Shape{C}) {
    throw ShapeError("batchnorm affine parameters must be [" +
                     std::to_string(C) + "]");
  }
  const std::size_t count = N * L;
  if (count < 2) {
    throw DegenerateBatchError(
        "training-mode batchnorm needs at least two values per channel");
  }
  const Tensor& bv = beta.value();

  Tensor mean(Shape{C}), var(Shape{C}), inv_std(Shape{C});
  const double* X = xv.data().data();
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double* row = X + (n * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) s += row[t];
    }
    const double m = s / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double* row = X + (n * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) {
        const double dv = row[t] - m;
        ss += dv * dv;
      }
    }
    mean[c] = m;
    var[c] = ss / static_cast<double>(count);
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  }

  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (n * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) {
        const double h = (X[base + t] - mean[c]) * inv_std[c];
        xhat[base + t] = h;
        out[base + t] = gv[c] * h + bv[c];
      }
    }
  }
  if (stats) *stats = BatchStatistics{mean, var};

  return tape.record(
      std::move(out), {x, gamma, beta},
      [&gv, xhat = std::move(xhat), inv_std = std::move(inv_std), N, C, L](
          const Tensor& g, std::span<Tensor* const> in) {
        const double cnt = static_cast<double>(N * L);
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gh = 0.0;
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * L;
            for (std::size_t t = 0; t < L; ++t) {
              sum_g += g[base + t];
              sum_gh += g[base + t] * xhat[base + t];
            }
          }
          if (in[1]) (*in[1])[c] += sum_gh;
          if (in[2]) (*in[2])[c] += sum_g;
          if (in[0]) {
            const double scale = gv[c] * inv_std[c];
            const double mg = sum_g / cnt, mgh = sum_gh / cnt;
            Tensor& dx = *in[0];
            for (std::size_t n = 0; n < N; ++n) {
              const std::size_t base = (n * C + c) * L;
              for (std::size_t t = 0; t < L; ++t) {
                dx[base + t] +=
                    scale * (g[base + t] - mg - xhat[base + t] * mgh);
              }
            }
          }
        }
      });
}

/// Batch normalization using fixed (running) statistics.
inline Var batchnorm_infer(Var x, Var gamma, Var beta, const Tensor& mean,
                           const Tensor& variance, double eps) {
  Tape& tape = detail::same_tape(x, gamma);
  detail::same_tape(x, beta);
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  detail::require_rank3(xv, "batchnorm");
  const std::size_t N = xv.dim(0), C = xv.dim(1), L = xv.dim(2);
  for (const Tensor* p : {&gv, &bv, &mean, &variance}) {
    if (p->shape() != Shape{C}) {
      throw ShapeError("batchnorm parameters must be [" + std::to_string(C) +
                       "]");
    }
  }
  Tensor inv_std(Shape{C});
  for (std::size_t c = 0; c < C; ++c) {
    inv_std[c] = 1.0 / std::sqrt(variance[c] + eps);
  }
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (n * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) {
        const double h = (xv[base + t] - mean[c]) * inv_std[c];
        xhat[base + t] = h;
        out[base + t] = gv[c] * h + bv[c];
      }
    }
  }
  return tape.record(
      std::move(out), {x, gamma, beta},
      [&gv, xhat = std::move(xhat), inv_std = std::move(inv_std), N, C, L](
          const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gh = 0.0;
          const double scale = gv[c] * inv_std[c];
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t base = (n * C + c) * L;
            for (std::size_t t = 0; t < L; ++t) {
              sum_g += g[base + t];
              sum_gh += g[base + t] * xhat[base + t];
              if (in[0]) (*in[0])[base + t] += scale * g[base + t];
            }
          }
          if (in[1]) (*in[1])[c] += sum_gh;
          if (in[2]) (*in[2])[c] += sum_g;
        }
      });
}

/// Elementwise max(0, x). The subgradient at 0 is taken as 0.
inline Var rectify(Var x) {
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  Tensor out = xv;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return tape.record(std::move(out), {x},
                     [&xv](const Tensor& g, std::span<Tensor* const> in) {
                       Tensor& dx = *in[0];
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (xv[i] > 0.0) dx[i] += g[i];
                       }
                     });
}

/// [N,C,L] -> [N,C*L]
inline Var flatten(Var x) {
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  detail::require_rank3(xv, "flatten");
  return tape.record(xv.reshaped({xv.dim(0), xv.dim(1) * xv.dim(2)}), {x},
                     [](const Tensor& g, std::span<Tensor* const> in) {
                       auto dx = in[0]->data();
                       for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                     });
}

/// Fully connected map y[n,k] = bias[k] + sum_d w[k,d] * x[n,d].
inline Var dense(Var x, Var weights, Var bias) {
  Tape& tape = detail::same_tape(x, weights);
  detail::same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weights.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || wv.rank() != 2 || wv.dim(1) != xv.dim(1) ||
      bv.shape() != Shape{wv.dim(0)}) {
    throw ShapeError("dense: incompatible shapes x" + to_string(xv.shape()) +
                     " w" + to_string(wv.shape()) + " b" +
                     to_string(bv.shape()));
  }
  const std::size_t N = xv.dim(0), D = xv.dim(1), K = wv.dim(0);
  Tensor out(Shape{N, K});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      double acc = bv[k];
      for (std::size_t j = 0; j < D; ++j) acc += wv[k * D + j] * xv[n * D + j];
      out[n * K + k] = acc;
    }
  }
  return tape.record(
      std::move(out), {x, weights, bias},
      [&xv, &wv, N, D, K](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t k = 0; k < K; ++k) {
            const double gk = g[n * K + k];
            if (in[2]) (*in[2])[k] += gk;
            if (in[1]) {
              Tensor& dw = *in[1];
              for (std::size_t j = 0; j < D; ++j) {
                dw[k * D + j] += gk * xv[n * D + j];
              }
            }
            if (in[0]) {
              Tensor& dx = *in[0];
              for (std::size_t j = 0; j < D; ++j) {
                dx[n * D + j] += gk * wv[k * D + j];
              }
            }
          }
        }
      });
}

/// Mean over the batch of -log softmax(logits)[label], computed with
/// max-subtraction.
inline Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& tape = *logits.tape;
  const Tensor& z = logits.value();
  if (z.rank() != 2) {
    throw ShapeError("logits must be [N,K], got " + to_string(z.shape()));
  }
  const std::size_t N = z.dim(0), K = z.dim(1);
  if (labels.size() != N) {
    throw ShapeError("expected " + std::to_string(N) + " labels, got " +
                     std::to_string(labels.size()));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= K) {
      throw LabelError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(K) + ")");
    }
  }

  Tensor probs(Shape{N, K});
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double* row = z.data().data() + n * K;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (row[k] > row[arg]) arg = k;
    }
    const double mx = row[arg];
    double rest = 0.0;  // sum of exp(z - max) excluding the maximum itself
    for (std::size_t k = 0; k < K; ++k) {
      const double e = std::exp(row[k] - mx);
      probs[n * K + k] = e;
      if (k != arg) rest += e;
    }
    const double denom = 1.0 + rest;
    for (std::size_t k = 0; k < K; ++k) probs[n * K + k] /= denom;
    const auto label = static_cast<std::size_t>(labels[n]);
    total += (mx - row[label]) + std::log1p(rest);
  }

  std::vector<int> saved(labels.begin(), labels.end());
  return tape.record(
      Tensor::scalar(total / static_cast<double>(N)), {logits},
      [probs = std::move(probs), saved = std::move(saved), N, K](
          const Tensor& g, std::span<Tensor* const> in) {
        const double scale = g[0] / static_cast<double>(N);
        Tensor& dz = *in[0];
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t k = 0; k < K; ++k) {
            const double onehot =
                static_cast<std::size_t>(saved[n]) == k ? 1.0 : 0.0;
            dz[n * K + k] += scale * (probs[n * K + k] - onehot);
          }
        }
      });
}

}  // namespace audiodream
