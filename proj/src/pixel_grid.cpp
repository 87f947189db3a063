#include "stegmod/pixel_grid.hpp"

namespace stegmod {

static void check_partition_args(const PixelGrid& grid, int channel, int order) {
  if (grid.width <= 0 || grid.height <= 0) fail("partition_tuples: empty grid");
  if (channel < 0 || channel >= grid.channels)
    fail("partition_tuples: channel out of range");
  if (order < 2 || order > 6) fail("partition_tuples: order must be in [2,6]");
}

TupleSequence partition_tuples(const PixelGrid& grid, int channel, int order) {
  check_partition_args(grid, channel, order);
  TupleSequence seq;
  seq.order = order;
  seq.channel = channel;
  int per_row = grid.width / order;
  seq.count = static_cast<std::size_t>(per_row) * grid.height;
  seq.positions.reserve(seq.count * order);
  seq.values.reserve(seq.count * order);
  for (int r = 0; r < grid.height; ++r) {
    for (int t = 0; t < per_row; ++t) {
      for (int k = 0; k < order; ++k) {
        std::size_t idx = grid.sample_index(r, t * order + k, channel);
        seq.positions.push_back(static_cast<std::uint32_t>(idx));
        seq.values.push_back(grid.samples[idx]);
      }
    }
  }
  return seq;
}

std::pair<TupleSequence, TupleSequence> partition_triplet_families(
    const PixelGrid& grid, int channel) {
  check_partition_args(grid, channel, 6);
  TupleSequence first, second;
  first.order = second.order = 3;
  first.channel = second.channel = channel;
  int per_row = grid.width / 6;
  std::size_t n = static_cast<std::size_t>(per_row) * grid.height;
  first.count = second.count = n;
  first.positions.reserve(n * 3);
  first.values.reserve(n * 3);
  second.positions.reserve(n * 3);
  second.values.reserve(n * 3);
  for (int r = 0; r < grid.height; ++r) {
    for (int t = 0; t < per_row; ++t) {
      for (int k = 0; k < 3; ++k) {
        std::size_t idx = grid.sample_index(r, t * 6 + k, channel);
        first.positions.push_back(static_cast<std::uint32_t>(idx));
        first.values.push_back(grid.samples[idx]);
      }
      for (int k = 3; k < 6; ++k) {
        std::size_t idx = grid.sample_index(r, t * 6 + k, channel);
        second.positions.push_back(static_cast<std::uint32_t>(idx));
        second.values.push_back(grid.samples[idx]);
      }
    }
  }
  return {std::move(first), std::move(second)};
}

}  // namespace stegmod
