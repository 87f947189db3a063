#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "stegmod/pixel_grid.hpp"
#include "stegmod/trace_algebra.hpp"

namespace stegmod {

// Secret shared by sender and receiver. Path and keystream are derived from
// it under distinct labels so neither leaks the other.
struct KeyMaterial {
  std::vector<std::uint8_t> secret;
};

// Keyed synchronous byte stream (classic 256-state swap generator with the
// first 1024 bytes dropped). Bits come out of each byte MSB first.
class StreamCipher {
 public:
  StreamCipher(std::span<const std::uint8_t> secret, std::string_view label);

  std::uint8_t next_byte();
  int next_bit();
  std::uint64_t next_u64();

 private:
  std::array<std::uint8_t, 256> s_{};
  std::uint8_t i_ = 0, j_ = 0;
  int bit_pos_ = 8;
  std::uint8_t cur_ = 0;
};

std::uint64_t derive_seed64(const KeyMaterial& key, std::string_view label);

// Trace keys excluded from embedding, per family. Order 2 uses only the
// first set; order 3 keeps the leading and trailing triplet families apart.
struct OmittedMask {
  int order = 3;
  std::array<std::set<TraceKey>, 2> omitted;

  bool is_omitted(int family, const TraceKey& k) const {
    return omitted[static_cast<std::size_t>(family)].count(k) != 0;
  }
};

// Raw fixed-length encoding: 11 bits for order 2; for order 3, 121 bits per
// family (row-major over the [-5,5] x [-5,5] key grid), leading family first.
std::vector<std::uint8_t> encode_omitted_mask(const OmittedMask& mask);
OmittedMask decode_omitted_mask(std::span<const std::uint8_t> bits, int order);

int mask_bit_count(int order);        // 11 or 242
int mask_block_bits(int order);       // 16-bit tag + mask bits

// Keyed pseudo-random walk over every candidate sample: order 3 skips the
// two middle columns of each sextuplet and incomplete sextuplets, order 2
// skips a trailing odd column. Identical for embed and extract.
std::vector<std::int64_t> derive_path(const KeyMaterial& key, int width, int height,
                                      int channels, int order);

// Per path position: 1 when the position's tuple has an in-range trace key.
// Trace keys survive LSB flips, so the extractor recomputes the same flags
// from the stego image.
std::vector<std::uint8_t> in_range_flags(const PixelGrid& grid,
                                         const std::vector<std::int64_t>& path, int order);

// Per path position: the canonical index of the position's (family, trace
// key) pair, numbered exactly like the mask bits, or -1 when the key falls
// outside the tracked range. Flip-invariant like the keys themselves.
std::vector<std::int32_t> key_indices(const PixelGrid& grid,
                                      const std::vector<std::int64_t>& path, int order);

// Per path position: 1 when the position's tuple has an in-range, non-omitted
// trace key. These are the payload slots.
std::vector<std::uint8_t> embeddable_flags(const PixelGrid& grid,
                                           const std::vector<std::int64_t>& path, int order,
                                           const OmittedMask& mask);

enum class SlotKind : std::uint8_t {
  placeholder,  // skipped pixel (omitted or out-of-range tuple), keeps the cipher in sync
  block,        // header: tag bit or a key's omission flag
  payload,      // length prefix or message bit
  unused        // embeddable but beyond the message: pixel left untouched
};

struct MasterSequence {
  std::vector<std::uint8_t> bits;  // one per path position
  std::vector<SlotKind> kind;
  std::int64_t block_start = -1;   // path index of the first tag slot
};

// Header-and-payload layout. The 16-bit tag rides the first in-range
// positions of the path; after it, each trace key's omission flag rides the
// first tuple of that key (keys with no tuple past the tag simply send no
// flag - there is nothing downstream the flag could guard). Both carriers
// are flip-invariant, so the receiver locates every header slot before it
// knows the mask. Spreading the flags across their own keys also means an
// omitted trace set absorbs at most one keystream-random write, which keeps
// its census intact. Remaining embeddable positions carry a 32-bit
// big-endian message bit count and the message, in path order; embeddable
// positions past the message stay untouched, so the embedding rate is set
// by the message length.
MasterSequence build_master_sequence(std::span<const std::uint8_t> message,
                                     const std::vector<std::int32_t>& key_idx,
                                     const std::vector<std::uint8_t>& embeddable, int order,
                                     const OmittedMask& mask);

std::int64_t message_capacity_bits(const PixelGrid& grid, const KeyMaterial& key, int order,
                                   const OmittedMask& mask);

PixelGrid embed_message(const PixelGrid& modified_cover, const KeyMaterial& key,
                        std::span<const std::uint8_t> message, int order,
                        const OmittedMask& mask);

// Recovers the message: verifies the tag on the first in-range positions,
// reads each key's omission flag off that key's first tuple after the tag,
// then reassembles the payload from the remaining embeddable positions.
std::vector<std::uint8_t> extract_message(const PixelGrid& stego, const KeyMaterial& key,
                                          int order);

}  // namespace stegmod
