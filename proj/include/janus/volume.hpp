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

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "janus/numerics.hpp"

namespace janus {

using Extent3 = std::array<std::size_t, 3>;   // (D, H, W)
using Spacing3 = std::array<double, 3>;       // (z, y, x) in mm

// Regular 3D grid, z-major (index = (z * H + y) * W + x).
template <class T>
struct Grid3 {
  Extent3 extent{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<T> data;

  Grid3() = default;
  Grid3(Extent3 e, Spacing3 s, T fill = T{}) : extent(e), spacing(s), data(e[0] * e[1] * e[2], fill) {}

  std::size_t depth() const noexcept { return extent[0]; }
  std::size_t height() const noexcept { return extent[1]; }
  std::size_t width() const noexcept { return extent[2]; }
  std::size_t voxels() const noexcept { return data.size(); }
  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return (z * extent[1] + y) * extent[2] + x;
  }
  T& at(std::size_t z, std::size_t y, std::size_t x) { return data[index(z, y, x)]; }
  const T& at(std::size_t z, std::size_t y, std::size_t x) const { return data[index(z, y, x)]; }

  bool operator==(const Grid3&) const = default;
};

// CT volume in Hounsfield units.
using Volume = Grid3<double>;
using BinaryMask = Grid3<std::uint8_t>;

inline constexpr double kHuMin = -1000.0;
inline constexpr double kHuMax = 1000.0;
inline constexpr double kAirHu = -1000.0;

// Per-channel statistics applied after mapping HU to [0, 1].
inline constexpr std::array<double, 3> kChannelMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kChannelStd{0.229, 0.224, 0.225};

void validate(const Volume& v);

Volume clip_hu(const Volume& v, double lo = kHuMin, double hi = kHuMax);

// Trilinear resampling. Voxel centers are aligned (half-voxel convention) and
// out-of-grid samples clamp to the border, so output values stay within the
// input range.
Volume resample(const Volume& v, const Spacing3& target_spacing);
// Nearest-neighbour counterpart for masks; preserves binarity.
BinaryMask resample_nearest(const BinaryMask& m, const Spacing3& target_spacing);
Extent3 resampled_extent(const Extent3& extent, const Spacing3& spacing, const Spacing3& target);

// Symmetric crop (floor of the excess removed from the leading side) or pad.
Volume center_crop_or_pad(const Volume& v, const Extent3& target, double pad_value = kAirHu);
BinaryMask center_crop_or_pad(const BinaryMask& m, const Extent3& target, std::uint8_t pad_value = 0);

struct TriSliceBatch {
  Tensor slices;                     // [T, 3, H', W'] normalized intensities
  std::vector<std::size_t> centers;  // source slice index per tri-slice
  std::size_t stride = 1;

  std::size_t count() const noexcept { return centers.size(); }
};

// Slice centers {0, s, 2s, ...} < depth.
std::vector<std::size_t> slice_centers(std::size_t depth, std::size_t stride);

// Half-pixel-aligned bilinear resize of one H x W plane.
std::vector<double> resize_bilinear(std::span<const double> src, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w);

// Builds [X_{t-1}, X_t, X_{t+1}] tri-slices with replicated boundaries, maps HU
// to [0,1] via (hu + 1000) / 2000, resizes each channel to input_size and
// applies the channel mean/std normalization.
TriSliceBatch tri_slice(const Volume& v, std::size_t stride, std::array<std::size_t, 2> input_size);

}  // namespace janus
