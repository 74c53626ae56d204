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

#include <algorithm>
#include <cmath>

#include "janus/volume.hpp"
#include "test_util.hpp"

using namespace janus;

namespace {

Volume ramp_x(Extent3 e, Spacing3 s) {
  Volume v(e, s);
  for (std::size_t z = 0; z < e[0]; ++z)
    for (std::size_t y = 0; y < e[1]; ++y)
      for (std::size_t x = 0; x < e[2]; ++x) v.at(z, y, x) = static_cast<double>(x);
  return v;
}

Volume random_volume(Extent3 e, std::uint64_t seed, double lo = -1200, double hi = 1500) {
  Volume v(e, {1.0, 1.0, 1.0});
  v.data = janus::testing::random_vector(v.voxels(), seed, lo, hi);
  return v;
}

double normalized(double hu, std::size_t c) {
  return ((hu + 1000.0) / 2000.0 - kChannelMean[c]) / kChannelStd[c];
}

}  // namespace

TEST_CASE("clip_hu bounds") {
  Volume v({1, 1, 3}, {1, 1, 1});
  v.data = {3000, -1500, 40};
  const Volume c = clip_hu(v);
  CHECK(c.data == std::vector<double>{1000, -1000, 40});
  CHECK(clip_hu(c) == c);
}

TEST_CASE("clip_hu is idempotent on random volumes") {
  for (int k = 0; k < 10; ++k) {
    const Volume v = random_volume({3, 4, 5}, k, -5000, 5000);
    const Volume c = clip_hu(v);
    CHECK(clip_hu(c) == c);
    for (double x : c.data) CHECK((x >= -1000 && x <= 1000));
  }
}

TEST_CASE("resample identity and constants") {
  const Volume v = random_volume({3, 4, 5}, 1);
  CHECK(resample(v, v.spacing) == v);
  Volume k({4, 6, 6}, {3.0, 1.5, 1.5}, 42.0);
  const Volume r = resample(k, {2.0, 1.0, 2.5});
  CHECK(r.extent == resampled_extent(k.extent, k.spacing, {2.0, 1.0, 2.5}));
  for (double x : r.data) CHECK(std::abs(x - 42.0) < 1e-12);
}

TEST_CASE("resample downsamples a linear ramp like the closed form") {
  // Output voxel j sits at physical (j + 0.5) * 2 mm, i.e. source index 2j + 0.5.
  const Volume v = ramp_x({2, 2, 8}, {1.0, 1.0, 1.0});
  const Volume r = resample(v, {1.0, 1.0, 2.0});
  REQUIRE(r.extent == Extent3{2, 2, 4});
  for (std::size_t x = 0; x < 4; ++x) CHECK(std::abs(r.at(1, 1, x) - (2.0 * x + 0.5)) < 1e-9);
}

TEST_CASE("resample stays within the input range") {
  for (int k = 0; k < 5; ++k) {
    Volume v = random_volume({4, 5, 6}, 10 + k);
    v.spacing = {2.0, 1.3, 0.7};
    const Volume r = resample(v, {1.1, 0.9, 1.6});
    const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.end());
    for (double x : r.data) CHECK((x >= *lo - 1e-9 && x <= *hi + 1e-9));
  }
}

TEST_CASE("resample rejects degenerate output") {
  const Volume v({1, 1, 1}, {1, 1, 1});
  CHECK_THROWS_AS(resample(v, {10.0, 1.0, 1.0}), DimensionError);
}

TEST_CASE("center crop keeps the central block") {
  Volume v({10, 10, 10}, {1, 1, 1});
  for (std::size_t i = 0; i < v.voxels(); ++i) v.data[i] = static_cast<double>(i);
  const Volume c = center_crop_or_pad(v, {6, 6, 6});
  for (std::size_t z = 0; z < 6; ++z)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) CHECK(c.at(z, y, x) == v.at(z + 2, y + 2, x + 2));
}

TEST_CASE("center pad surrounds with air") {
  Volume v({4, 4, 4}, {1, 1, 1}, 7.0);
  const Volume p = center_crop_or_pad(v, {6, 6, 6});
  for (std::size_t z = 0; z < 6; ++z)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        const bool inside = z >= 1 && z <= 4 && y >= 1 && y <= 4 && x >= 1 && x <= 4;
        CHECK(p.at(z, y, x) == (inside ? 7.0 : -1000.0));
      }
  CHECK(center_crop_or_pad(v, v.extent) == v);
}

TEST_CASE("tri-slice centers and boundary replication") {
  Volume v({5, 2, 2}, {1, 1, 1});
  for (std::size_t z = 0; z < 5; ++z)
    for (std::size_t i = 0; i < 4; ++i) v.data[z * 4 + i] = 100.0 * static_cast<double>(z);
  const TriSliceBatch b = tri_slice(v, 2, {2, 2});
  CHECK(b.centers == std::vector<std::size_t>{0, 2, 4});
  CHECK(b.slices.shape() == Shape{3, 3, 2, 2});
  const double expected[3][3] = {{0, 0, 100}, {100, 200, 300}, {300, 400, 400}};
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 4; ++p)
        CHECK(std::abs(b.slices[((t * 3 + c) * 4) + p] - normalized(expected[t][c], c)) < 1e-12);
}

TEST_CASE("tri-slice of a single slice repeats it") {
  Volume v({1, 2, 2}, {1, 1, 1}, 50.0);
  const TriSliceBatch b = tri_slice(v, 1, {4, 4});
  CHECK(b.count() == 1);
  CHECK(b.slices.shape() == Shape{1, 3, 4, 4});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < 16; ++p) CHECK(std::abs(b.slices[c * 16 + p] - normalized(50.0, c)) < 1e-12);
}

TEST_CASE("tri-slice count follows the stride") {
  Volume v({160, 2, 2}, {1, 1, 1});
  CHECK(tri_slice(v, 1, {2, 2}).count() == 160);
  CHECK(slice_centers(7, 3) == std::vector<std::size_t>{0, 3, 6});
}

TEST_CASE("bilinear resize identity and constant") {
  const auto src = janus::testing::random_vector(12, 3);
  CHECK(resize_bilinear(src, 3, 4, 3, 4) == src);
  const std::vector<double> k(6, 2.5);
  for (double x : resize_bilinear(k, 2, 3, 5, 7)) CHECK(std::abs(x - 2.5) < 1e-12);
}
