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

#include "janus/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace janus {

namespace {

void check_spacing(const Spacing3& s, const char* what) {
  for (double v : s) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + ": spacing must be positive");
  }
}

// Continuous source coordinate of output voxel i, clamped to the grid.
double source_coord(std::size_t i, double out_spacing, double in_spacing, std::size_t n_in) {
  const double c = (static_cast<double>(i) + 0.5) * out_spacing / in_spacing - 0.5;
  return std::clamp(c, 0.0, static_cast<double>(n_in - 1));
}

struct Lerp {
  std::size_t lo, hi;
  double frac;
};

Lerp lerp_at(double c, std::size_t n) {
  const auto lo = static_cast<std::size_t>(std::floor(c));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, c - static_cast<double>(lo)};
}

template <class T>
Grid3<T> crop_or_pad(const Grid3<T>& g, const Extent3& target, T pad) {
  for (auto t : target) {
    if (t == 0) throw ArgumentError("center_crop_or_pad: target extent must be positive");
  }
  Grid3<T> out(target, g.spacing, pad);
  // Offset of the output origin in source coordinates (negative when padding).
  std::array<long, 3> off{};
  for (int a = 0; a < 3; ++a) {
    const long n = static_cast<long>(g.extent[a]);
    const long t = static_cast<long>(target[a]);
    off[a] = n >= t ? (n - t) / 2 : -((t - n) / 2);
  }
  for (std::size_t z = 0; z < target[0]; ++z) {
    const long sz = static_cast<long>(z) + off[0];
    if (sz < 0 || sz >= static_cast<long>(g.extent[0])) continue;
    for (std::size_t y = 0; y < target[1]; ++y) {
      const long sy = static_cast<long>(y) + off[1];
      if (sy < 0 || sy >= static_cast<long>(g.extent[1])) continue;
      for (std::size_t x = 0; x < target[2]; ++x) {
        const long sx = static_cast<long>(x) + off[2];
        if (sx < 0 || sx >= static_cast<long>(g.extent[2])) continue;
        out.at(z, y, x) = g.at(static_cast<std::size_t>(sz), static_cast<std::size_t>(sy),
                               static_cast<std::size_t>(sx));
      }
    }
  }
  return out;
}

}  // namespace

void validate(const Volume& v) {
  check_spacing(v.spacing, "volume");
  if (v.data.size() != v.extent[0] * v.extent[1] * v.extent[2] || v.data.empty()) {
    throw DimensionError("volume data does not match its extent");
  }
}

Volume clip_hu(const Volume& v, double lo, double hi) {
  Volume out = v;
  for (double& x : out.data) x = std::clamp(x, lo, hi);
  return out;
}

Extent3 resampled_extent(const Extent3& extent, const Spacing3& spacing, const Spacing3& target) {
  check_spacing(target, "resample target");
  Extent3 out{};
  for (int a = 0; a < 3; ++a) {
    const double n = std::round(static_cast<double>(extent[a]) * spacing[a] / target[a]);
    if (n < 1.0) throw DimensionError("resample produces an empty axis");
    out[a] = static_cast<std::size_t>(n);
  }
  return out;
}

Volume resample(const Volume& v, const Spacing3& target_spacing) {
  validate(v);
  const Extent3 e = resampled_extent(v.extent, v.spacing, target_spacing);
  Volume out(e, target_spacing);
  std::vector<Lerp> lz(e[0]), ly(e[1]), lx(e[2]);
  for (std::size_t i = 0; i < e[0]; ++i)
    lz[i] = lerp_at(source_coord(i, target_spacing[0], v.spacing[0], v.extent[0]), v.extent[0]);
  for (std::size_t i = 0; i < e[1]; ++i)
    ly[i] = lerp_at(source_coord(i, target_spacing[1], v.spacing[1], v.extent[1]), v.extent[1]);
  for (std::size_t i = 0; i < e[2]; ++i)
    lx[i] = lerp_at(source_coord(i, target_spacing[2], v.spacing[2], v.extent[2]), v.extent[2]);

  for (std::size_t z = 0; z < e[0]; ++z) {
    for (std::size_t y = 0; y < e[1]; ++y) {
      for (std::size_t x = 0; x < e[2]; ++x) {
        const Lerp& a = lz[z];
        const Lerp& b = ly[y];
        const Lerp& c = lx[x];
        auto plane = [&](std::size_t zz) {
          const double r0 = v.at(zz, b.lo, c.lo) * (1 - c.frac) + v.at(zz, b.lo, c.hi) * c.frac;
          const double r1 = v.at(zz, b.hi, c.lo) * (1 - c.frac) + v.at(zz, b.hi, c.hi) * c.frac;
          return r0 * (1 - b.frac) + r1 * b.frac;
        };
        out.at(z, y, x) = a.frac == 0.0 ? plane(a.lo) : plane(a.lo) * (1 - a.frac) + plane(a.hi) * a.frac;
      }
    }
  }
  return out;
}

BinaryMask resample_nearest(const BinaryMask& m, const Spacing3& target_spacing) {
  check_spacing(m.spacing, "mask");
  const Extent3 e = resampled_extent(m.extent, m.spacing, target_spacing);
  BinaryMask out(e, target_spacing);
  std::array<std::vector<std::size_t>, 3> idx;
  for (int a = 0; a < 3; ++a) {
    idx[a].resize(e[a]);
    for (std::size_t i = 0; i < e[a]; ++i) {
      const double c = source_coord(i, target_spacing[a], m.spacing[a], m.extent[a]);
      idx[a][i] = std::min(static_cast<std::size_t>(std::floor(c + 0.5)), m.extent[a] - 1);
    }
  }
  for (std::size_t z = 0; z < e[0]; ++z)
    for (std::size_t y = 0; y < e[1]; ++y)
      for (std::size_t x = 0; x < e[2]; ++x) out.at(z, y, x) = m.at(idx[0][z], idx[1][y], idx[2][x]);
  return out;
}

Volume center_crop_or_pad(const Volume& v, const Extent3& target, double pad_value) {
  return crop_or_pad(v, target, pad_value);
}

BinaryMask center_crop_or_pad(const BinaryMask& m, const Extent3& target, std::uint8_t pad_value) {
  return crop_or_pad(m, target, pad_value);
}

std::vector<std::size_t> slice_centers(std::size_t depth, std::size_t stride) {
  if (stride == 0) throw ArgumentError("tri-slice stride must be >= 1");
  if (depth == 0) throw DimensionError("tri-slice needs at least one slice");
  std::vector<std::size_t> c;
  for (std::size_t t = 0; t < depth; t += stride) c.push_back(t);
  return c;
}

std::vector<double> resize_bilinear(std::span<const double> src, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w) {
  std::vector<double> out(out_h * out_w);
  if (h == out_h && w == out_w) {
    std::copy(src.begin(), src.end(), out.begin());
    return out;
  }
  for (std::size_t y = 0; y < out_h; ++y) {
    const Lerp b = lerp_at(std::clamp((y + 0.5) * static_cast<double>(h) / out_h - 0.5, 0.0, h - 1.0), h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const Lerp c = lerp_at(std::clamp((x + 0.5) * static_cast<double>(w) / out_w - 0.5, 0.0, w - 1.0), w);
      const double r0 = src[b.lo * w + c.lo] * (1 - c.frac) + src[b.lo * w + c.hi] * c.frac;
      const double r1 = src[b.hi * w + c.lo] * (1 - c.frac) + src[b.hi * w + c.hi] * c.frac;
      out[y * out_w + x] = r0 * (1 - b.frac) + r1 * b.frac;
    }
  }
  return out;
}

TriSliceBatch tri_slice(const Volume& v, std::size_t stride, std::array<std::size_t, 2> input_size) {
  validate(v);
  const auto [oh, ow] = input_size;
  if (oh == 0 || ow == 0) throw ArgumentError("tri_slice: input size must be positive");
  TriSliceBatch batch;
  batch.stride = stride;
  batch.centers = slice_centers(v.depth(), stride);
  const std::size_t h = v.height(), w = v.width(), d = v.depth();
  batch.slices = Tensor({batch.centers.size(), 3, oh, ow});
  std::vector<double> plane(h * w);
  for (std::size_t t = 0; t < batch.centers.size(); ++t) {
    const std::size_t c = batch.centers[t];
    const std::array<std::size_t, 3> src{c == 0 ? 0 : c - 1, c, std::min(c + 1, d - 1)};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double* base = &v.data[src[ch] * h * w];
      for (std::size_t i = 0; i < h * w; ++i) plane[i] = (base[i] - kHuMin) / (kHuMax - kHuMin);
      const auto resized = resize_bilinear(plane, h, w, oh, ow);
      double* dst = &batch.slices[((t * 3) + ch) * oh * ow];
      for (std::size_t i = 0; i < oh * ow; ++i) dst[i] = (resized[i] - kChannelMean[ch]) / kChannelStd[ch];
    }
  }
  return batch;
}

}  // namespace janus
