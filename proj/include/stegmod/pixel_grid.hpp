#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stegmod/common.hpp"

namespace stegmod {

// 8-bit raster, row-major, channel-interleaved.
struct PixelGrid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  PixelGrid() = default;
  PixelGrid(int w, int h, int ch)
      : width(w), height(h), channels(ch),
        samples(static_cast<std::size_t>(w) * h * ch, 0) {
    if (w <= 0 || h <= 0 || (ch != 1 && ch != 3)) fail("PixelGrid: bad shape");
  }

  std::size_t sample_count() const { return samples.size(); }

  std::size_t sample_index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }

  std::uint8_t at(int row, int col, int ch) const {
    return samples[sample_index(row, col, ch)];
  }
  std::uint8_t& at(int row, int col, int ch) {
    return samples[sample_index(row, col, ch)];
  }

  bool same_shape(const PixelGrid& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Disjoint horizontal tuples of one channel: each row contributes
// floor(width/order) tuples over consecutive columns; the trailing
// width % order columns belong to no tuple. Values are a snapshot taken
// at partition time.
struct TupleSequence {
  int order = 2;
  int channel = 0;
  std::size_t count = 0;
  std::vector<std::uint32_t> positions;  // count*order flat sample indices
  std::vector<std::uint8_t> values;      // count*order

  std::span<const std::uint32_t> pos(std::size_t i) const {
    return {positions.data() + i * order, static_cast<std::size_t>(order)};
  }
  std::span<const std::uint8_t> val(std::size_t i) const {
    return {values.data() + i * order, static_cast<std::size_t>(order)};
  }
};

TupleSequence partition_tuples(const PixelGrid& grid, int channel, int order);

// Triplet views of the sextuplet partition: first = columns (6k,6k+1,6k+2),
// second = (6k+3,6k+4,6k+5). Used by the third-order modification, where the
// first family may flip its slots 0,1 and the second family its slots 1,2.
std::pair<TupleSequence, TupleSequence> partition_triplet_families(
    const PixelGrid& grid, int channel);

}  // namespace stegmod
