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

#include <doctest.h>

#include <cmath>

#include "janus/encoder.hpp"
#include "test_util.hpp"

using namespace janus;
using janus::testing::random_tensor;

TEST_CASE("patchify places pixels channel-major then row-major") {
  Tensor s({1, 3, 4, 4});
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
  const Tensor p = patchify(s, 2);
  CHECK(p.shape() == Shape{1, 4, 12});
  // Token 1 is the top-right patch: rows 0-1, cols 2-3.
  const double expected[12] = {2, 3, 6, 7, 18, 19, 22, 23, 34, 35, 38, 39};
  for (std::size_t j = 0; j < 12; ++j) CHECK(p[12 + j] == expected[j]);
  // Token 2 is bottom-left.
  CHECK(p[24] == 8);
}

TEST_CASE("patchify matches an index oracle") {
  const Tensor s = random_tensor({2, 3, 12, 8}, 5);
  const std::size_t p = 4, gy = 3, gx = 2;
  const Tensor out = patchify(s, p);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t n = 0; n < gy * gx; ++n)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x) {
            const std::size_t row = (n / gx) * p + y, col = (n % gx) * p + x;
            CHECK(out[(t * 6 + n) * 48 + c * 16 + y * 4 + x] == s[((t * 3 + c) * 12 + row) * 8 + col]);
          }
}

TEST_CASE("patchify rejects bad shapes") {
  CHECK_THROWS_AS(patchify(Tensor({1, 3, 6, 8}), 4), DimensionError);
  CHECK_THROWS_AS(patchify(Tensor({1, 2, 8, 8}), 4), DimensionError);
  CHECK_THROWS_AS(patchify(Tensor({3, 8, 8}), 4), DimensionError);
}

TEST_CASE("encoder init is seeded and bounded") {
  const EncoderConfig cfg{4, 8, true, 2};
  EncoderParams a = EncoderParams::init(cfg, 11), b = EncoderParams::init(cfg, 11), c = EncoderParams::init(cfg, 12);
  CHECK(a.patch_w.value == b.patch_w.value);
  CHECK(a.mlp_w2.value == b.mlp_w2.value);
  CHECK_FALSE(a.patch_w.value == c.patch_w.value);
  CHECK(a.parameters().size() == 17);
  const double bound = 1.0 / std::sqrt(48.0);
  for (double v : a.patch_w.value.values()) CHECK(std::abs(v) <= bound);
  for (double v : a.ln1_g.value.values()) CHECK(v == 1.0);
  EncoderConfig lin = cfg;
  lin.attention = false;
  CHECK(EncoderParams::init(lin, 11).parameters().size() == 2);
  CHECK_THROWS_AS(EncoderParams::init(EncoderConfig{0, 8, true, 2}, 1), ArgumentError);
}

TEST_CASE("linear encoder is a patch projection") {
  EncoderParams p = EncoderParams::init({4, 5, false, 4}, 3);
  const Tensor s = random_tensor({2, 3, 8, 8}, 9);
  Tape tape;
  const Tensor tok = encode(tape, s, p).value();
  CHECK(tok.shape() == Shape{2, 4, 5});
  const Tensor patches = patchify(s, 4);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = p.patch_b.value[j];
      for (std::size_t k = 0; k < 48; ++k) acc += patches[r * 48 + k] * p.patch_w.value[k * 5 + j];
      CHECK(tok[r * 5 + j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("attention encoder keeps slices independent") {
  EncoderParams p = EncoderParams::init({4, 6, true, 2}, 4);
  Tensor s = random_tensor({2, 3, 8, 8}, 10);
  Tape t1;
  const Tensor a = encode(t1, s, p).value();
  CHECK(a.shape() == Shape{2, 4, 6});
  for (std::size_t i = 3 * 64; i < 6 * 64; ++i) s[i] += 0.5;  // perturb slice 1 only
  Tape t2;
  const Tensor b = encode(t2, s, p).value();
  for (std::size_t i = 0; i < 24; ++i) CHECK(a[i] == b[i]);
  bool changed = false;
  for (std::size_t i = 24; i < 48; ++i) changed = changed || a[i] != b[i];
  CHECK(changed);
}

TEST_CASE("encoder is equivariant to patch permutation") {
  EncoderParams p = EncoderParams::init({4, 6, true, 2}, 6);
  const Tensor s = random_tensor({1, 3, 8, 8}, 12);
  // Swap the top-left and bottom-right patches.
  Tensor sw = s;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) std::swap(sw[(c * 8 + y) * 8 + x], sw[(c * 8 + y + 4) * 8 + x + 4]);
  Tape t1, t2;
  const Tensor a = encode(t1, s, p).value(), b = encode(t2, sw, p).value();
  const std::size_t perm[4] = {3, 1, 2, 0};
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t j = 0; j < 6; ++j) CHECK(b[perm[n] * 6 + j] == doctest::Approx(a[n * 6 + j]).epsilon(1e-12));
}

TEST_CASE("zero input with zero bias gives zero tokens") {
  EncoderParams p = EncoderParams::init({4, 8, false, 4}, 2);
  p.patch_b.value.fill(0.0);
  Tape tape;
  const Tensor tok = encode(tape, Tensor({2, 3, 16, 16}), p).value();
  CHECK(tok.shape() == Shape{2, 16, 8});
  for (double v : tok.values()) CHECK(v == 0.0);
}

TEST_CASE("token count and identity projection") {
  EncoderParams p = EncoderParams::init({16, 8, true, 4}, 2);
  Tape tape;
  CHECK(encode(tape, Tensor({1, 3, 224, 224}), p).value().dim(1) == 196);
  // A single patch with an identity projection reproduces the patch values.
  EncoderParams q = EncoderParams::init({2, 12, false, 4}, 3);
  q.patch_w.value.fill(0.0);
  for (std::size_t i = 0; i < 12; ++i) q.patch_w.value[i * 12 + i] = 1.0;
  q.patch_b.value.fill(0.0);
  const Tensor s = random_tensor({1, 3, 2, 2}, 4);
  Tape t2;
  const Tensor tok = encode(t2, s, q).value();
  const Tensor flat = patchify(s, 2);
  for (std::size_t i = 0; i < 12; ++i) CHECK(tok[i] == flat[i]);
  CHECK_THROWS_AS(encode(t2, Tensor({1, 3, 11, 12}), q), DimensionError);
}

TEST_CASE("shifting an impulse by one patch permutes tokens without attention") {
  EncoderParams p = EncoderParams::init({4, 6, false, 4}, 5);
  Tensor a({1, 3, 12, 12}), b({1, 3, 12, 12});
  a[(0 * 12 + 1) * 12 + 2] = 1.0;  // channel 0, row 1, col 2: token 0
  b[(0 * 12 + 1) * 12 + 6] = 1.0;  // same offset, one patch right: token 1
  Tape t1, t2;
  const Tensor ta = encode(t1, a, p).value(), tb = encode(t2, b, p).value();
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(tb[1 * 6 + j] == ta[0 * 6 + j]);
    CHECK(tb[0 * 6 + j] == ta[1 * 6 + j]);
  }
}

TEST_CASE("encoder gradients match finite differences at d = 8, p = 4") {
  EncoderParams p = EncoderParams::init({4, 8, true, 4}, 8);
  const Tensor s = random_tensor({1, 3, 8, 8}, 15);
  const Tensor w = random_tensor({1, 4, 8}, 16);
  auto params = p.parameters();
  const auto r =
      grad_check([&](Tape& tape) { return sum_all(mul(encode(tape, s, p), tape.constant(w))); }, params, 1e-4);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("encoder gradients match finite differences") {
  for (bool attention : {false, true}) {
    EncoderParams p = EncoderParams::init({2, 4, attention, 2}, 8);
    const Tensor s = random_tensor({2, 3, 4, 4}, 13);
    const Tensor w = random_tensor({2, 4, 4}, 14);
    auto params = p.parameters();
    const auto r = grad_check(
        [&](Tape& tape) { return sum_all(mul(encode(tape, s, p), tape.constant(w))); }, params);
    CHECK(r.max_rel_error < 1e-6);
  }
}
