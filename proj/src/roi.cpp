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

#include "janus/roi.hpp"

#include <algorithm>
#include <cmath>

namespace janus {

std::string to_string(RoiSource s) {
  switch (s) {
    case RoiSource::SingleOrgan: return "single-organ";
    case RoiSource::MultiOrganUnion: return "multi-organ-union";
    case RoiSource::LocalizationBox: return "localization-box";
  }
  return "?";
}

RoiSource roi_source_from_string(const std::string& s) {
  if (s == "single-organ") return RoiSource::SingleOrgan;
  if (s == "multi-organ-union") return RoiSource::MultiOrganUnion;
  if (s == "localization-box") return RoiSource::LocalizationBox;
  throw ConfigError("unknown ROI source '" + s + "'");
}

bool TokenMask::slice_empty(std::size_t t) const {
  const auto* row = &values[t * tokens()];
  return std::none_of(row, row + tokens(), [](std::uint8_t v) { return v != 0; });
}

bool TokenMask::empty() const {
  return std::none_of(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; });
}

Tensor TokenMask::as_tensor() const {
  Tensor out({slices, tokens()});
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] ? 1.0 : 0.0;
  return out;
}

RoiMask compose_mask(int label, std::span<const BinaryMask> channels, RoiSource mode,
                     double dilation_radius_mm) {
  if (channels.empty()) throw ArgumentError("compose_mask: no channels given");
  for (const auto& c : channels) {
    if (c.extent != channels[0].extent) throw DimensionError("compose_mask: channels are on different grids");
  }
  if (dilation_radius_mm < 0.0) throw ArgumentError("compose_mask: negative dilation radius");
  RoiMask out{label, BinaryMask(channels[0].extent, channels[0].spacing, 0), dilation_radius_mm, mode};

  if (mode == RoiSource::SingleOrgan) {
    if (channels.size() != 1) throw ArgumentError("compose_mask: single-organ takes exactly one channel");
    out.mask = channels[0];
    return out;
  }
  for (const auto& c : channels)
    for (std::size_t i = 0; i < c.data.size(); ++i) out.mask.data[i] |= c.data[i] ? 1 : 0;
  if (mode == RoiSource::MultiOrganUnion) return out;

  // Axis-aligned bounding box of the union.
  std::array<std::size_t, 3> lo{out.mask.extent}, hi{0, 0, 0};
  bool any = false;
  for (std::size_t z = 0; z < out.mask.depth(); ++z)
    for (std::size_t y = 0; y < out.mask.height(); ++y)
      for (std::size_t x = 0; x < out.mask.width(); ++x) {
        if (!out.mask.at(z, y, x)) continue;
        any = true;
        lo = {std::min(lo[0], z), std::min(lo[1], y), std::min(lo[2], x)};
        hi = {std::max(hi[0], z), std::max(hi[1], y), std::max(hi[2], x)};
      }
  if (!any) return out;
  for (std::size_t z = lo[0]; z <= hi[0]; ++z)
    for (std::size_t y = lo[1]; y <= hi[1]; ++y)
      for (std::size_t x = lo[2]; x <= hi[2]; ++x) out.mask.at(z, y, x) = 1;
  return out;
}

std::array<std::size_t, 3> dilation_half_widths(double radius_mm, const Spacing3& spacing) {
  std::array<std::size_t, 3> k{};
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0.0)) throw ArgumentError("dilate_mm: spacing must be positive");
    k[a] = static_cast<std::size_t>(std::llround(radius_mm / spacing[a]));
  }
  return k;
}

RoiMask dilate_mm(const RoiMask& m, const Spacing3& spacing) {
  const auto k = dilation_half_widths(m.dilation_radius_mm, spacing);
  RoiMask out = m;
  const auto& e = m.mask.extent;
  // Separable: a box element is the product of three 1D segments.
  std::array<std::size_t, 3> stride{e[1] * e[2], e[2], 1};
  std::vector<int> prefix;
  for (int axis = 0; axis < 3; ++axis) {
    if (k[axis] == 0) continue;
    const std::size_t n = e[axis];
    BinaryMask src = out.mask;
    prefix.assign(n + 1, 0);
    // Iterate every line along `axis`.
    for (std::size_t base = 0; base < src.data.size(); ++base) {
      if ((base / stride[axis]) % n != 0) continue;
      for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (src.data[base + i * stride[axis]] ? 1 : 0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= k[axis] ? i - k[axis] : 0;
        const std::size_t hi = std::min(n - 1, i + k[axis]);
        out.mask.data[base + i * stride[axis]] = prefix[hi + 1] - prefix[lo] > 0 ? 1 : 0;
      }
    }
  }
  return out;
}

std::size_t nearest_source_index(std::size_t i, std::size_t n_in, std::size_t n_out) {
  const double c = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out);
  return std::min(static_cast<std::size_t>(std::floor(c)), n_in - 1);
}

TokenMask to_token_mask(const RoiMask& m, std::span<const std::size_t> centers,
                        std::array<std::size_t, 2> encoder_input, std::size_t patch) {
  const auto [ih, iw] = encoder_input;
  if (patch == 0 || ih % patch != 0 || iw % patch != 0) {
    throw DimensionError("to_token_mask: encoder input not divisible by patch size");
  }
  TokenMask tm;
  tm.slices = centers.size();
  tm.tokens_y = ih / patch;
  tm.tokens_x = iw / patch;
  tm.values.assign(tm.slices * tm.tokens(), 0);
  const std::size_t h = m.mask.height(), w = m.mask.width();
  for (std::size_t t = 0; t < centers.size(); ++t) {
    if (centers[t] >= m.mask.depth()) throw IndexError("to_token_mask: slice centre out of range");
    for (std::size_t a = 0; a < tm.tokens_y; ++a) {
      const std::size_t sy = nearest_source_index(a * patch + patch / 2, h, ih);
      for (std::size_t b = 0; b < tm.tokens_x; ++b) {
        const std::size_t sx = nearest_source_index(b * patch + patch / 2, w, iw);
        tm.values[t * tm.tokens() + a * tm.tokens_x + b] = m.mask.at(centers[t], sy, sx) ? 1 : 0;
      }
    }
  }
  return tm;
}

}  // namespace janus
