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

#include "janus/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace janus {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
  for (auto e : shape_) {
    if (e == 0) throw DimensionError("tensor extent must be positive: " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) throw DimensionError("tensor extent must be positive: " + shape_str(shape_));
  }
  if (data_.size() != numel(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw IndexError("axis out of range for shape " + shape_str(shape_));
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()), velocity(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  grad.fill(0.0);
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const { return tape_->value(id_); }
const Shape& Var::shape() const { return tape_->value(id_).shape(); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false, nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true, nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& param) {
  nodes_.push_back(Node{param.value, {}, {}, {}, true, &param});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  bool needs = false;
  for (auto in : inputs) needs = needs || nodes_[in].requires_grad;
  Node node{std::move(value), {}, std::move(inputs), {}, needs, nullptr};
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (root.value().size() != 1) {
    throw DimensionError("backward() needs a scalar root, got " + shape_str(root.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(root.id())[0] = 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

void Tape::accumulate_parameter_grads() const {
  for (const auto& n : nodes_) {
    if (!n.bound || n.grad.empty()) continue;
    Parameter& p = *n.bound;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    auto dst = p.grad.values();
    auto src = n.grad.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

namespace {

void check_broadcast(const Shape& a, const Shape& b, const char* op) {
  if (numel(b) == 1) return;
  if (b.size() > a.size() || !std::equal(b.rbegin(), b.rend(), a.rbegin())) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(b) + " onto " +
                         shape_str(a));
  }
}

template <class Fwd, class DA, class DB>
Var binary(const Var& a, const Var& b, const char* name, Fwd fwd, DA da, DB db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  check_broadcast(av.shape(), bv.shape(), name);
  Tensor out(av.shape());
  const std::size_t nb = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i % nb]);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, da, db](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    const std::size_t n = y.size();
    if (t.requires_grad(ia)) {
      Tensor& gx = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * da(x[i], y[i % n]);
    }
    if (t.requires_grad(ib)) {
      Tensor& gy = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gy[i % n] += g[i] * db(x[i], y[i % n]);
    }
  });
}

template <class Fwd, class Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, deriv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xin = t.value(ix);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xin[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C[M,N] += A[M,K] * B[K,N]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,K] += G[M,N] * B[K,N]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    double* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// C[K,N] += A[M,K]^T * G[M,N]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var sigmoid(const Var& x) {
  return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(const Var& x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  return unary(
      x,
      [](double v) { return 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v))); },
      [](double v, double) {
        const double th = std::tanh(c * (v + k * v * v * v));
        return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * c * (1.0 + 3.0 * k * v * v);
      });
}

Var clamp(const Var& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var transpose_last2(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2) throw DimensionError("transpose_last2 needs rank >= 2");
  Shape s = xv.shape();
  const std::size_t r = s[s.size() - 2], c = s[s.size() - 1];
  const std::size_t batch = xv.size() / (r * c);
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  Tensor out(s);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = xv[b * r * c + i * c + j];
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, batch, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[b * r * c + i * c + j] += g[b * r * c + j * r + i];
  });
}

Var concat(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank() ||
      !std::equal(av.shape().begin(), av.shape().end() - 1, bv.shape().begin())) {
    throw DimensionError("concat: incompatible shapes " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  const std::size_t ca = av.shape().back(), cb = bv.shape().back();
  const std::size_t rows = av.size() / ca;
  Shape s = av.shape();
  s.back() = ca + cb;
  Tensor out(s);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&av[r * ca], ca, &out[r * (ca + cb)]);
    std::copy_n(&bv[r * cb], cb, &out[r * (ca + cb) + ca]);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, rows, ca, cb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
    }
  });
}

Var gather_rows(const Var& x, std::span<const unsigned char> mask) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || mask.size() != xv.dim(0)) {
    throw DimensionError("gather_rows: mask of length " + std::to_string(mask.size()) +
                         " for shape " + shape_str(xv.shape()));
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < mask.size(); ++r)
    if (mask[r]) rows.push_back(r);
  if (rows.empty()) throw ArgumentError("gather_rows: mask selects no rows");
  const std::size_t c = xv.dim(1);
  Tensor out({rows.size(), c});
  for (std::size_t k = 0; k < rows.size(); ++k) std::copy_n(&xv[rows[k] * c], c, &out[k * c]);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, rows, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (std::size_t j = 0; j < c; ++j) gx[rows[k] * c + j] += g[k * c + j];
  });
}

Var sum_all(const Var& x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean_all(const Var& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean(const Var& x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) throw IndexError("mean: axis out of range for " + shape_str(xv.shape()));
  const Shape s = xv.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  Shape os;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) os.push_back(s[i]);
  if (os.empty()) os.push_back(1);
  Tensor out(os);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < len; ++k)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + k) * inner + i];
  for (double& v : out.values()) v /= static_cast<double>(len);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, outer, inner, len, inv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < len; ++k)
        for (std::size_t i = 0; i < inner; ++i) gx[(o * len + k) * inner + i] += g[o * inner + i] * inv;
  });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Shape as = av.shape();
  const Shape bs = bv.shape();
  std::size_t batch = 1;
  bool shared_b = false;
  if (as.size() == 2 && bs.size() == 2) {
  } else if (as.size() == 3 && bs.size() == 3 && as[0] == bs[0]) {
    batch = as[0];
  } else if (as.size() == 3 && bs.size() == 2) {
    batch = as[0];
    shared_b = true;
  } else {
    throw DimensionError("matmul: unsupported ranks " + shape_str(as) + " x " + shape_str(bs));
  }
  const std::size_t m = as[as.size() - 2], k = as.back();
  const std::size_t kb = bs[bs.size() - 2], n = bs.back();
  if (k != kb) throw DimensionError("matmul: inner extents differ " + shape_str(as) + " x " + shape_str(bs));

  Shape os = as;
  os.back() = n;
  Tensor out(os);
  if (shared_b) {
    gemm_nn(av.values().data(), bv.values().data(), out.values().data(), batch * m, k, n);
  } else {
    for (std::size_t p = 0; p < batch; ++p)
      gemm_nn(&av[p * m * k], &bv[p * k * n], &out[p * m * n], m, k, n);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib},
                         [ia, ib, batch, m, k, n, shared_b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& gx = t.grad_buffer(ia);
      for (std::size_t p = 0; p < batch; ++p)
        gemm_nt(&g[p * m * n], shared_b ? &y[0] : &y[p * k * n], &gx[p * m * k], m, k, n);
    }
    if (t.requires_grad(ib)) {
      Tensor& gy = t.grad_buffer(ib);
      if (shared_b) {
        gemm_tn(&x[0], &g[0], &gy[0], batch * m, k, n);
      } else {
        for (std::size_t p = 0; p < batch; ++p) gemm_tn(&x[p * m * k], &g[p * m * n], &gy[p * k * n], m, k, n);
      }
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Tensor& xv = x.value();
  const std::size_t c = xv.shape().back();
  if (gamma.value().size() != c || beta.value().size() != c) {
    throw DimensionError("layer_norm: affine size does not match last axis of " + shape_str(xv.shape()));
  }
  const std::size_t rows = xv.size() / c;
  Tensor out(xv.shape());
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(rows);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &xv[r * c];
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[r * c + j] = (row[j] - mu) * inv_std[r];
      out[r * c + j] = xhat[r * c + j] * gv[j] + bv[j];
    }
  }
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, rows, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gv = t.value(ig);
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad_buffer(ig);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g[r * c + j] * xhat[r * c + j];
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_buffer(ib);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
        if (t.requires_grad(ix)) {
          Tensor& gx = t.grad_buffer(ix);
          std::vector<double> dxhat(c);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              dxhat[j] = g[r * c + j] * gv[j];
              m1 += dxhat[j];
              m2 += dxhat[j] * xhat[r * c + j];
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j)
              gx[r * c + j] += inv_std[r] * (dxhat[j] - m1 - xhat[r * c + j] * m2);
          }
        }
      });
}

bool MaskedSoftmax::any_empty() const {
  return std::any_of(empty_groups.begin(), empty_groups.end(), [](bool e) { return e; });
}

bool MaskedSoftmax::all_empty() const {
  return std::all_of(empty_groups.begin(), empty_groups.end(), [](bool e) { return e; });
}

MaskedSoftmax masked_softmax(const Var& logits, const Tensor& mask, std::size_t axis) {
  const Tensor& xv = logits.value();
  if (mask.shape() != xv.shape()) {
    throw DimensionError("masked_softmax: mask shape " + shape_str(mask.shape()) +
                         " differs from logits " + shape_str(xv.shape()));
  }
  if (axis >= xv.rank()) throw IndexError("masked_softmax: axis out of range");
  const Shape s = xv.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];

  Tensor out(s);
  std::vector<bool> empty(outer * inner, false);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      auto at = [&](std::size_t k) { return (o * len + k) * inner + in; };
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t k = 0; k < len; ++k) {
        if (mask[at(k)] != 0.0) {
          mx = std::max(mx, xv[at(k)]);
          any = true;
        }
      }
      if (!any) {
        empty[o * inner + in] = true;
        continue;
      }
      double z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        if (mask[at(k)] != 0.0) {
          out[at(k)] = std::exp(xv[at(k)] - mx);
          z += out[at(k)];
        }
      }
      for (std::size_t k = 0; k < len; ++k) out[at(k)] /= z;
    }
  }
  const std::size_t ix = logits.id();
  Var w = logits.tape().record(std::move(out), {ix}, [ix, outer, inner, len](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t e = (o * len + k) * inner + in;
          dot += y[e] * g[e];
        }
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t e = (o * len + k) * inner + in;
          gx[e] += y[e] * (g[e] - dot);
        }
      }
    }
  });
  return {w, std::move(empty)};
}

Var softmax(const Var& logits, std::size_t axis) {
  return masked_softmax(logits, Tensor(logits.shape(), 1.0), axis).weights;
}

// ---------------------------------------------------------------------------
// Gradient checking

namespace {

double scalar_value(const std::function<Var(Tape&)>& f) {
  Tape tape;
  Var out = f(tape);
  if (out.value().size() != 1) throw DimensionError("grad_check: function must return a scalar");
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                           double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ArgumentError("grad_check: eps must lie in [1e-7, 1e-3]");
  std::vector<Tensor> saved_grads;
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->zero_grad();
  }
  {
    Tape tape;
    Var out = f(tape);
    if (out.value().size() != 1) throw DimensionError("grad_check: function must return a scalar");
    if (!std::isfinite(out.value()[0])) throw NumericError("grad_check: non-finite function value");
    tape.backward(out);
    tape.accumulate_parameter_grads();
  }
  std::vector<Tensor> analytic;
  for (std::size_t i = 0; i < params.size(); ++i) {
    analytic.push_back(params[i]->grad);
    params[i]->grad = std::move(saved_grads[i]);
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& value = params[pi]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value[i];
      value[i] = orig + eps;
      const double fp = scalar_value(f);
      value[i] = orig - eps;
      const double fm = scalar_value(f);
      value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      if (!std::isfinite(a) || !std::isfinite(numeric)) throw NumericError("grad_check: non-finite gradient");
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel >= result.max_rel_error) result = {rel, pi, i, a, numeric};
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<Var(Tape&, std::span<const Var>)>& f,
                           std::span<Tensor* const> params, double eps) {
  std::vector<Parameter> owned;
  owned.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) owned.emplace_back("p" + std::to_string(i), *params[i]);
  std::vector<Parameter*> ptrs;
  for (auto& p : owned) ptrs.push_back(&p);
  auto wrapped = [&](Tape& tape) {
    std::vector<Var> leaves;
    for (auto& p : owned) leaves.push_back(tape.param(p));
    return f(tape, leaves);
  };
  return grad_check(wrapped, ptrs, eps);
}

}  // namespace janus
