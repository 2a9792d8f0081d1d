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

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/tensor.hpp"

namespace audiodream {

/// One Nesterov accelerated gradient update in lookahead form:
///
///   g  = grad_fn(theta + mu * v)
///   v' = mu * v - lr * g
///   theta' = theta + v'
///
/// `grad_fn` receives the lookahead point as `const std::vector<Tensor>&` and
/// returns one gradient per parameter with matching shapes.
template <class GradFn>
void nesterov_step(std::span<Tensor* const> params, std::span<Tensor> velocity,
                   GradFn&& grad_fn, double lr, double mu) {
  if (params.size() != velocity.size()) {
    throw ShapeError("nesterov_step: parameter and velocity counts differ");
  }
  std::vector<Tensor> lookahead;
  lookahead.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], velocity[i], "nesterov_step");
    Tensor point = *params[i];
    axpy(point, mu, velocity[i]);
    lookahead.push_back(std::move(point));
  }

  const std::vector<Tensor> grads = grad_fn(std::as_const(lookahead));
  if (grads.size() != params.size()) {
    throw ShapeError("nesterov_step: gradient count differs from parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "nesterov_step");
    auto v = velocity[i].data();
    auto theta = params[i]->data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = mu * v[j] - lr * g[j];
      theta[j] += v[j];
    }
  }
}

template <class GradFn>
void nesterov_step(std::vector<Tensor>& params, std::vector<Tensor>& velocity,
                   GradFn&& grad_fn, double lr, double mu) {
  std::vector<Tensor*> ptrs;
  for (Tensor& p : params) ptrs.push_back(&p);
  nesterov_step(std::span<Tensor* const>(ptrs), std::span<Tensor>(velocity),
                std::forward<GradFn>(grad_fn), lr, mu);
}

}  // namespace audiodream
