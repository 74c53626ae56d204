/*
 * Copyright 2026 The janus-phantom Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "janus/error.hpp"

namespace janus {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor of doubles. Plain value type: no autograd state.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  // Value of a single-element tensor.
  double item() const;

  Tensor reshaped(Shape shape) const;
  void fill(double value);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Trainable tensor with gradient and optimizer state.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
};

class Tape;

// Handle to a node recorded on a Tape. Valid for the lifetime of the tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const;
  const Tensor& grad() const;
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the reverse
// of creation order is a valid topological order for backward.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  // Records a parameter; accumulate_parameter_grads() adds the node gradient
  // into param.grad. The parameter must outlive the tape.
  Var param(Parameter& param);

  // Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
  void backward(const Var& root);
  void accumulate_parameter_grads() const;

  // Grad of a node; an empty tensor when the node was not reached.
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  // Gradient buffer of an input node, zero-initialized on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* bound = nullptr;
  };
  std::vector<Node> nodes_;
};

// ---- Elementwise and broadcasting ops --------------------------------------
// Binary ops broadcast `b` over the leading axes of `a`: b.shape must equal a
// suffix of a.shape, or b must hold a single element.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);

Var sigmoid(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);
Var gelu(const Var& x);
// Gradient passes only where lo <= x <= hi.
Var clamp(const Var& x, double lo, double hi);

// ---- Shape ops -------------------------------------------------------------
Var reshape(const Var& x, Shape shape);
Var transpose_last2(const Var& x);
// Concatenate along the last axis; leading axes must agree.
Var concat(const Var& a, const Var& b);
// Rows of a rank-2 tensor where mask[r] != 0.
Var gather_rows(const Var& x, std::span<const unsigned char> mask);

// ---- Reductions ------------------------------------------------------------
Var sum_all(const Var& x);
Var mean_all(const Var& x);
// Mean along `axis`; the axis is removed from the output shape.
Var mean(const Var& x, std::size_t axis);

// ---- Linear algebra --------------------------------------------------------
// [M,K]x[K,N], [B,M,K]x[B,K,N], or [B,M,K]x[K,N] (shared right operand).
Var matmul(const Var& a, const Var& b);

// Layer normalization over the last axis with affine gamma/beta of size C.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// ---- Softmax ---------------------------------------------------------------
struct MaskedSoftmax {
  Var weights;
  // One flag per group (all index combinations except `axis`), true when the
  // mask is all-zero along the axis. Such groups come back as all zeros; the
  // caller decides the fallback.
  std::vector<bool> empty_groups;

  bool any_empty() const;
  bool all_empty() const;
};

MaskedSoftmax masked_softmax(const Var& logits, const Tensor& mask, std::size_t axis);
Var softmax(const Var& logits, std::size_t axis);

// ---- Gradient checking -----------------------------------------------------
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// f builds a scalar on a fresh tape, recording parameters via tape.param().
// Compares reverse-mode gradients with central differences per coordinate;
// relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
GradCheckResult grad_check(const std::function<Var(Tape&)>& f,
                           std::span<Parameter* const> params, double eps = 1e-5);

// Variant over raw tensors: f receives one leaf per tensor, in order.
GradCheckResult grad_check(const std::function<Var(Tape&, std::span<const Var>)>& f,
                           std::span<Tensor* const> params, double eps = 1e-5);

}  // namespace janus
