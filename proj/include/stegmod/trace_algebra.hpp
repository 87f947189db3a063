#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stegmod/pixel_grid.hpp"

namespace stegmod {

// Differences of the floored half-values of consecutive tuple samples.
// Flipping any sample's LSB leaves the key unchanged, which is what makes
// census bookkeeping survive both embedding and planned modification.
struct TraceKey {
  std::array<std::int8_t, 5> m{};  // m[0..len)
  std::uint8_t len = 1;

  auto operator<=>(const TraceKey&) const = default;
  std::string str() const;
  static TraceKey parse(const std::string& s);  // "0,-1" etc.
};

TraceKey classify_key(std::span<const std::uint8_t> values);

// Subset index inside a trace set: bit i is the LSB of sample i.
int classify_subset(std::span<const std::uint8_t> values);

// A subset named by exact sample differences plus the parity of the first
// sample (E = even, O = odd), e.g. E_{1,2}.
struct SubsetLabel {
  bool first_even = true;
  std::vector<int> diffs;
  int index = 0;  // position in the canonical enumeration
  std::string str() const;
};

// Canonical enumeration of a trace set's 2^order subsets. Built recursively:
// level 1 is [E, O]; extending by key k appends the even-successor difference
// to every subset in order, then the odd-successor difference.
std::vector<SubsetLabel> enumerate_subsets(const TraceKey& key, int order);

std::pair<TraceKey, SubsetLabel> classify_tuple(std::span<const std::uint8_t> values);

struct TupleCensus {
  int order = 2;
  int range_lo = -5;
  int range_hi = 5;
  std::map<TraceKey, std::vector<std::int64_t>> counts;  // each vector 1<<order
  std::int64_t overflow = 0;  // tuples with any key component out of range
  std::int64_t total = 0;

  std::vector<std::int64_t> counts_or_zero(const TraceKey& k) const;
  std::int64_t trace_set_size(const TraceKey& k) const;
};

// OpenMP-partitioned fold; partial censuses merge by addition.
TupleCensus census(const TupleSequence& seq, int lo = -5, int hi = 5);

namespace reference {
// Serial fold kept as the comparison baseline for tests and benchmarks.
TupleCensus census(const TupleSequence& seq, int lo = -5, int hi = 5);
}  // namespace reference

nlohmann::json census_to_json(const TupleCensus& c);
TupleCensus census_from_json(const nlohmann::json& j);

// Mixing matrix for independent LSB flips of each of `order` samples with
// probability p. dim = 2^order; entry (i,j) = p^d (1-p)^(order-d) with d the
// Hamming distance between subset indices. Built by the block recursion
// [[ (1-p)T, pT ], [ pT, (1-p)T ]]; the inverse uses the same recursion with
// 1/(1-2p) scaling and is undefined at p = 1/2.
struct KernelMatrix {
  int order = 1;
  double p = 0.0;
  int dim = 2;
  std::vector<double> fwd;
  std::vector<double> inv_;  // empty when p == 1/2

  double fwd_at(int i, int j) const { return fwd[static_cast<std::size_t>(i) * dim + j]; }
  bool has_inverse() const { return !inv_.empty(); }
  const std::vector<double>& inverse() const;
  double inv_at(int i, int j) const;
};

KernelMatrix transition_kernel(int order, double p);

}  // namespace stegmod
