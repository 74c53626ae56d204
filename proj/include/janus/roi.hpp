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
#include <span>
#include <string>
#include <vector>

#include "janus/volume.hpp"

namespace janus {

enum class RoiSource { SingleOrgan, MultiOrganUnion, LocalizationBox };

std::string to_string(RoiSource s);
RoiSource roi_source_from_string(const std::string& s);

struct RoiMask {
  int label = 0;
  BinaryMask mask;
  double dilation_radius_mm = 0.0;
  RoiSource source = RoiSource::SingleOrgan;
};

// Binary token membership per tri-slice: values[t * N + a * tokens_x + b].
struct TokenMask {
  std::size_t slices = 0;
  std::size_t tokens_y = 0;
  std::size_t tokens_x = 0;
  std::vector<std::uint8_t> values;

  std::size_t tokens() const noexcept { return tokens_y * tokens_x; }
  std::uint8_t at(std::size_t t, std::size_t i) const { return values[t * tokens() + i]; }
  bool slice_empty(std::size_t t) const;
  bool empty() const;
  // [T, N] tensor of 0.0 / 1.0.
  Tensor as_tensor() const;
};

RoiMask compose_mask(int label, std::span<const BinaryMask> channels, RoiSource mode,
                     double dilation_radius_mm = 0.0);

// Per-axis structuring-element half-widths round(r / spacing).
std::array<std::size_t, 3> dilation_half_widths(double radius_mm, const Spacing3& spacing);

// Box dilation with half-widths from dilation_half_widths(); clipped at borders.
RoiMask dilate_mm(const RoiMask& m, const Spacing3& spacing);

// Nearest-neighbour resize of the 2D mask at each centre to encoder_input,
// then one sample at each patch-centre pixel.
TokenMask to_token_mask(const RoiMask& m, std::span<const std::size_t> centers,
                        std::array<std::size_t, 2> encoder_input, std::size_t patch);

// Source index hit by nearest-neighbour resampling of output pixel i (n_in -> n_out).
std::size_t nearest_source_index(std::size_t i, std::size_t n_in, std::size_t n_out);

}  // namespace janus
