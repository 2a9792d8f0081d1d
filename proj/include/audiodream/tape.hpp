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
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "audiodream/error.hpp"
#include "audiodream/tensor.hpp"

namespace audiodream {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

/// Gradients of a scalar loss with respect to the leaves that requested them.
class GradientMap {
 public:
  bool contains(Var v) const { return grads_.count(v.id) != 0; }
  const Tensor& operator[](Var v) const {
    auto it = grads_.find(v.id);
    if (it == grads_.end()) {
      throw ContractError("no gradient recorded for this variable");
    }
    return it->second;
  }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape;
  std::map<std::size_t, Tensor> grads_;
};

/// Linear record of one forward pass for reverse-mode differentiation.
///
/// Every recorded operation stores its result together with a closure that
/// maps the gradient of its output onto gradients of its inputs. A tape
/// serves one forward/backward pair and must not be shared between threads.
class Tape {
 public:
  /// `grad_in[i]` is null when input i does not require a gradient;
  /// otherwise the closure accumulates into it.
  using BackwardFn = std::function<void(const Tensor& grad_out,
                                        std::span<Tensor* const> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true) {
    nodes_.push_back(Node{std::move(value), {}, {}, requires_grad, true});
    return Var{this, nodes_.size() - 1};
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Node node{std::move(value), {}, std::move(backward), false, false};
    node.inputs.reserve(inputs.size());
    for (const Var& v : inputs) {
      check_owned(v);
      node.inputs.push_back(v.id);
      node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
  }

  const Tensor& value(Var v) const {
    check_owned(v);
    return nodes_[v.id].value;
  }

  bool requires_grad(Var v) const {
    check_owned(v);
    return nodes_[v.id].requires_grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Node ids of the operations visited by the most recent backward pass,
  /// in visiting order.
  std::span<const std::size_t> last_backward_order() const noexcept {
    return order_;
  }

  /// Reverse sweep from a single-element `loss`. Every leaf that requires a
  /// gradient receives one of its own shape, zero if the loss does not
  /// depend on it.
  GradientMap backward(Var loss) {
    check_owned(loss);
    const Tensor& lv = nodes_[loss.id].value;
    if (lv.size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          to_string(lv.shape()));
    }
    std::vector<std::optional<Tensor>> grads(nodes_.size());
    grads[loss.id] = Tensor(lv.shape(), 1.0);
    order_.clear();

    std::vector<Tensor*> grad_in;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (node.is_leaf || !node.requires_grad || !grads[i]) continue;
      grad_in.assign(node.inputs.size(), nullptr);
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        std::size_t j = node.inputs[k];
        if (!nodes_[j].requires_grad) continue;
        if (!grads[j]) grads[j] = Tensor(nodes_[j].value.shape(), 0.0);
        grad_in[k] = &*grads[j];
      }
      node.backward(*grads[i], grad_in);
      order_.push_back(i);
    }

    GradientMap out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& node = nodes_[i];
      if (!node.is_leaf || !node.requires_grad) continue;
      out.grads_.emplace(i, grads[i] ? std::move(*grads[i])
                                     : Tensor(node.value.shape(), 0.0));
    }
    return out;
  }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad;
    bool is_leaf;
  };

  void check_owned(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
      throw ContractError("variable does not belong to this tape");
    }
  }

  // deque keeps node values at stable addresses so closures may refer to
  // their operands.
  std::deque<Node> nodes_;
  std::vector<std::size_t> order_;
};

inline const Tensor& Var::value() const {
  if (!tape) throw ContractError("unbound variable");
  return tape->value(*this);
}

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (!a.tape || a.tape != b.tape) {
    throw ContractError("operands recorded on different tapes");
  }
  return *a.tape;
}

}  // namespace detail

// Plain elementwise arithmetic.

inline Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  auto o = out.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a;
  auto o = out.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return out;
}

inline double reduce_sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

// Recorded counterparts.

inline Var add(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  return tape.record(add(a.value(), b.value()), {a, b},
                     [](const Tensor& g, std::span<Tensor* const> in) {
                       for (Tensor* t : in) {
                         if (t) axpy(*t, 1.0, g);
                       }
                     });
}

inline Var mul(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  return tape.record(mul(av, bv), {a, b},
                     [&av, &bv](const Tensor& g, std::span<Tensor* const> in) {
                       if (in[0]) axpy(*in[0], 1.0, mul(g, bv));
                       if (in[1]) axpy(*in[1], 1.0, mul(g, av));
                     });
}

/// Sum of every element as a shape-[1] tensor.
inline Var reduce_sum(Var a) {
  Tape& tape = *a.tape;
  return tape.record(Tensor::scalar(reduce_sum(a.value())), {a},
                     [](const Tensor& g, std::span<Tensor* const> in) {
                       const double s = g[0];
                       for (double& v : in[0]->data()) v += s;
                     });
}

}  // namespace audiodream
