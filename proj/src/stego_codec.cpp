#include "stegmod/stego_codec.hpp"

#include <algorithm>
#include <random>

#include "stegmod/common.hpp"

namespace stegmod {
namespace {

constexpr std::uint16_t kMaskTag = 0xC3A5;
constexpr int kTagBits = 16;
constexpr int kLengthBits = 32;
constexpr int kKeyRange = 5;  // census range the masks cover

void check_order(int order) {
  if (order != 2 && order != 3) fail("embedding strategy order must be 2 or 3");
}

struct TupleRef {
  int family = 0;
  int len = 0;
  std::array<std::int64_t, 3> pos{-1, -1, -1};
};

// The tuple a candidate sample belongs to. Candidates never sit on the two
// middle columns of a sextuplet (order 3) or past the last full pair/sextuplet.
TupleRef tuple_of(const PixelGrid& grid, std::int64_t sample, int order) {
  const auto ch = static_cast<std::int64_t>(grid.channels);
  const std::int64_t pixel = sample / ch;
  const int channel = static_cast<int>(sample % ch);
  const int col = static_cast<int>(pixel % grid.width);
  const int row = static_cast<int>(pixel / grid.width);
  TupleRef t;
  if (order == 2) {
    const int c0 = col & ~1;
    t.family = 0;
    t.len = 2;
    for (int s = 0; s < 2; ++s)
      t.pos[static_cast<std::size_t>(s)] =
          static_cast<std::int64_t>(grid.sample_index(row, c0 + s, channel));
    return t;
  }
  const int within = col % 6;
  const int base = col - within + (within >= 3 ? 3 : 0);
  t.family = within >= 3 ? 1 : 0;
  t.len = 3;
  for (int s = 0; s < 3; ++s)
    t.pos[static_cast<std::size_t>(s)] =
        static_cast<std::int64_t>(grid.sample_index(row, base + s, channel));
  return t;
}

bool candidate_column(int col, int width, int order) {
  if (order == 2) return col < 2 * (width / 2);
  if (col >= 6 * (width / 6)) return false;
  const int within = col % 6;
  return within != 2 && within != 3;
}

std::vector<std::uint8_t> tag_bits() {
  std::vector<std::uint8_t> b(kTagBits);
  for (int t = 0; t < kTagBits; ++t)
    b[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>((kMaskTag >> (15 - t)) & 1);
  return b;
}

std::vector<std::uint8_t> range_flags(const PixelGrid& grid,
                                      const std::vector<std::int64_t>& path, int order,
                                      const OmittedMask* mask) {
  std::vector<std::uint8_t> flags(path.size(), 0);
  std::array<std::uint8_t, 3> vals{};
  for (std::size_t i = 0; i < path.size(); ++i) {
    const TupleRef t = tuple_of(grid, path[i], order);
    for (int s = 0; s < t.len; ++s)
      vals[static_cast<std::size_t>(s)] =
          grid.samples[static_cast<std::size_t>(t.pos[static_cast<std::size_t>(s)])];
    const TraceKey k = classify_key({vals.data(), static_cast<std::size_t>(t.len)});
    bool ok = true;
    for (int c = 0; c < k.len; ++c)
      ok = ok && k.m[static_cast<std::size_t>(c)] >= -kKeyRange && k.m[static_cast<std::size_t>(c)] <= kKeyRange;
    if (ok && (!mask || !mask->is_omitted(t.family, k))) flags[i] = 1;
  }
  return flags;
}

}  // namespace

StreamCipher::StreamCipher(std::span<const std::uint8_t> secret, std::string_view label) {
  if (secret.empty() || secret.size() > 200) fail("secret key must be 1..200 bytes");
  std::vector<std::uint8_t> key(label.begin(), label.end());
  key.push_back(0);
  key.insert(key.end(), secret.begin(), secret.end());
  for (int i = 0; i < 256; ++i) s_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  std::uint8_t j = 0;
  for (int i = 0; i < 256; ++i) {
    j = static_cast<std::uint8_t>(j + s_[static_cast<std::size_t>(i)] + key[i % key.size()]);
    std::swap(s_[static_cast<std::size_t>(i)], s_[j]);
  }
  for (int k = 0; k < 1024; ++k) next_byte();
  bit_pos_ = 8;
}

std::uint8_t StreamCipher::next_byte() {
  i_ = static_cast<std::uint8_t>(i_ + 1);
  j_ = static_cast<std::uint8_t>(j_ + s_[i_]);
  std::swap(s_[i_], s_[j_]);
  return s_[static_cast<std::uint8_t>(s_[i_] + s_[j_])];
}

int StreamCipher::next_bit() {
  if (bit_pos_ >= 8) {
    cur_ = next_byte();
    bit_pos_ = 0;
  }
  const int b = (cur_ >> (7 - bit_pos_)) & 1;
  ++bit_pos_;
  return b;
}

std::uint64_t StreamCipher::next_u64() {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v = (v << 8) | next_byte();
  return v;
}

std::uint64_t derive_seed64(const KeyMaterial& key, std::string_view label) {
  StreamCipher c(key.secret, label);
  return c.next_u64();
}

int mask_bit_count(int order) {
  check_order(order);
  return order == 2 ? 11 : 242;
}

int mask_block_bits(int order) { return kTagBits + mask_bit_count(order); }

std::vector<std::uint8_t> encode_omitted_mask(const OmittedMask& mask) {
  check_order(mask.order);
  const int side = 2 * kKeyRange + 1;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(mask_bit_count(mask.order)), 0);
  const int families = mask.order == 2 ? 1 : 2;
  for (int f = 0; f < 2; ++f) {
    if (f >= families && !mask.omitted[static_cast<std::size_t>(f)].empty())
      fail("order-2 mask cannot omit triplet-family keys");
    for (const TraceKey& k : mask.omitted[static_cast<std::size_t>(f)]) {
      if (k.len != mask.order - 1) fail("omitted key order does not match the mask");
      std::int64_t bit = f * side * side;
      std::int64_t stride = 1;
      for (int c = k.len - 1; c >= 0; --c) {
        const int m = k.m[static_cast<std::size_t>(c)];
        if (m < -kKeyRange || m > kKeyRange) fail("omitted key outside the mask key range");
        bit += (m + kKeyRange) * stride;
        stride *= side;
      }
      bits[static_cast<std::size_t>(bit)] = 1;
    }
  }
  return bits;
}

OmittedMask decode_omitted_mask(std::span<const std::uint8_t> bits, int order) {
  check_order(order);
  if (static_cast<int>(bits.size()) != mask_bit_count(order)) fail("mask bit length mismatch");
  const int side = 2 * kKeyRange + 1;
  OmittedMask mask;
  mask.order = order;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i]) continue;
    TraceKey k;
    if (order == 2) {
      k.len = 1;
      k.m[0] = static_cast<std::int8_t>(static_cast<int>(i) - kKeyRange);
      mask.omitted[0].insert(k);
    } else {
      const int f = static_cast<int>(i) / (side * side);
      const int rest = static_cast<int>(i) % (side * side);
      k.len = 2;
      k.m[0] = static_cast<std::int8_t>(rest / side - kKeyRange);
      k.m[1] = static_cast<std::int8_t>(rest % side - kKeyRange);
      mask.omitted[static_cast<std::size_t>(f)].insert(k);
    }
  }
  return mask;
}

std::vector<std::int64_t> derive_path(const KeyMaterial& key, int width, int height,
                                      int channels, int order) {
  check_order(order);
  if (width <= 0 || height <= 0 || channels <= 0) fail("path needs a real image geometry");
  std::vector<std::int64_t> path;
  const std::int64_t n = static_cast<std::int64_t>(width) * height * channels;
  path.reserve(static_cast<std::size_t>(n));
  for (std::int64_t s = 0; s < n; ++s) {
    const int col = static_cast<int>((s / channels) % width);
    if (candidate_column(col, width, order)) path.push_back(s);
  }
  std::mt19937_64 rng(derive_seed64(key, "path"));
  shuffle_vec(rng, path);
  return path;
}

std::vector<std::uint8_t> in_range_flags(const PixelGrid& grid,
                                         const std::vector<std::int64_t>& path, int order) {
  check_order(order);
  return range_flags(grid, path, order, nullptr);
}

std::vector<std::int32_t> key_indices(const PixelGrid& grid,
                                      const std::vector<std::int64_t>& path, int order) {
  check_order(order);
  const int side = 2 * kKeyRange + 1;
  std::vector<std::int32_t> idx(path.size(), -1);
  std::array<std::uint8_t, 3> vals{};
  for (std::size_t i = 0; i < path.size(); ++i) {
    const TupleRef t = tuple_of(grid, path[i], order);
    for (int s = 0; s < t.len; ++s)
      vals[static_cast<std::size_t>(s)] =
          grid.samples[static_cast<std::size_t>(t.pos[static_cast<std::size_t>(s)])];
    const TraceKey k = classify_key({vals.data(), static_cast<std::size_t>(t.len)});
    std::int32_t c = t.family;
    bool ok = true;
    for (int d = 0; d < k.len; ++d) {
      const int m = k.m[static_cast<std::size_t>(d)];
      ok = ok && m >= -kKeyRange && m <= kKeyRange;
      c = c * side + (m + kKeyRange);
    }
    if (ok) idx[i] = c;
  }
  return idx;
}

std::vector<std::uint8_t> embeddable_flags(const PixelGrid& grid,
                                           const std::vector<std::int64_t>& path, int order,
                                           const OmittedMask& mask) {
  check_order(order);
  if (mask.order != order) fail("mask order does not match the embedding order");
  return range_flags(grid, path, order, &mask);
}

MasterSequence build_master_sequence(std::span<const std::uint8_t> message,
                                     const std::vector<std::int32_t>& key_idx,
                                     const std::vector<std::uint8_t>& embeddable, int order,
                                     const OmittedMask& mask) {
  check_order(order);
  if (key_idx.size() != embeddable.size()) fail("flag vectors disagree on the path length");
  const int nkeys = mask_bit_count(order);
  const std::int64_t msg_bits = 8 * static_cast<std::int64_t>(message.size());
  if (msg_bits > 0xffffffffll) fail("message too long for the length prefix");

  const auto tag = tag_bits();
  const auto mask_bits = encode_omitted_mask(mask);

  MasterSequence seq;
  seq.bits.assign(key_idx.size(), 1);
  seq.kind.assign(key_idx.size(), SlotKind::placeholder);

  // Tag on the first in-range positions, whatever their keys: in-range is
  // flip-invariant, so the receiver finds these slots before it knows the
  // mask.
  int rank = 0;
  std::int64_t tag_last = -1;
  for (std::size_t i = 0; i < key_idx.size() && rank < kTagBits; ++i) {
    if (key_idx[i] < 0) continue;
    if (seq.block_start < 0) seq.block_start = static_cast<std::int64_t>(i);
    seq.bits[i] = tag[static_cast<std::size_t>(rank)];
    seq.kind[i] = SlotKind::block;
    tag_last = static_cast<std::int64_t>(i);
    ++rank;
  }
  if (rank < kTagBits) fail("image too small for the header");

  // Each key's omission flag rides the key's own first tuple after the tag.
  // An omitted trace set therefore absorbs at most this one random write; a
  // key with no tuple there sends no flag, and none is ever needed, because
  // no downstream position belongs to it.
  std::vector<std::uint8_t> flag_sent(static_cast<std::size_t>(nkeys), 0);
  for (std::size_t i = static_cast<std::size_t>(tag_last) + 1; i < key_idx.size(); ++i) {
    const std::int32_t c = key_idx[i];
    if (c < 0 || flag_sent[static_cast<std::size_t>(c)]) continue;
    flag_sent[static_cast<std::size_t>(c)] = 1;
    seq.bits[i] = mask_bits[static_cast<std::size_t>(c)];
    seq.kind[i] = SlotKind::block;
  }

  // Payload on the remaining embeddable positions: 32-bit big-endian bit
  // count, then the message. Embeddable positions past the message stay
  // untouched, so the embedding rate is set by the message length.
  std::int64_t sent = 0;
  for (std::size_t i = static_cast<std::size_t>(tag_last) + 1; i < key_idx.size(); ++i) {
    if (seq.kind[i] != SlotKind::placeholder || !embeddable[i]) continue;
    if (sent < kLengthBits + msg_bits) {
      std::uint8_t b;
      if (sent < kLengthBits) {
        b = static_cast<std::uint8_t>((static_cast<std::uint64_t>(msg_bits) >> (kLengthBits - 1 - sent)) & 1);
      } else {
        const std::int64_t off = sent - kLengthBits;
        b = static_cast<std::uint8_t>((message[static_cast<std::size_t>(off / 8)] >> (7 - off % 8)) & 1);
      }
      seq.bits[i] = b;
      seq.kind[i] = SlotKind::payload;
      ++sent;
      continue;
    }
    seq.kind[i] = SlotKind::unused;
  }
  if (sent < kLengthBits + msg_bits)
    fail("message too long: image offers " + std::to_string(std::max<std::int64_t>(0, sent - kLengthBits)) +
         " bits");
  return seq;
}

std::int64_t message_capacity_bits(const PixelGrid& grid, const KeyMaterial& key, int order,
                                   const OmittedMask& mask) {
  const auto path = derive_path(key, grid.width, grid.height, grid.channels, order);
  const auto key_idx = key_indices(grid, path, order);
  const auto embeddable = embeddable_flags(grid, path, order, mask);
  int rank = 0;
  std::int64_t tag_last = -1;
  for (std::size_t i = 0; i < key_idx.size() && rank < kTagBits; ++i)
    if (key_idx[i] >= 0) {
      tag_last = static_cast<std::int64_t>(i);
      ++rank;
    }
  if (rank < kTagBits) fail("image too small for the header");
  std::vector<std::uint8_t> flag_sent(static_cast<std::size_t>(mask_bit_count(order)), 0);
  std::int64_t slots = 0;
  for (std::size_t i = static_cast<std::size_t>(tag_last) + 1; i < key_idx.size(); ++i) {
    const std::int32_t c = key_idx[i];
    if (c >= 0 && !flag_sent[static_cast<std::size_t>(c)]) {
      flag_sent[static_cast<std::size_t>(c)] = 1;  // the key's flag slot
      continue;
    }
    if (embeddable[i]) ++slots;
  }
  return std::max<std::int64_t>(0, slots - kLengthBits);
}

PixelGrid embed_message(const PixelGrid& modified_cover, const KeyMaterial& key,
                        std::span<const std::uint8_t> message, int order,
                        const OmittedMask& mask) {
  const auto path =
      derive_path(key, modified_cover.width, modified_cover.height, modified_cover.channels, order);
  const auto key_idx = key_indices(modified_cover, path, order);
  const auto embeddable = embeddable_flags(modified_cover, path, order, mask);
  const MasterSequence seq = build_master_sequence(message, key_idx, embeddable, order, mask);

  PixelGrid stego = modified_cover;
  StreamCipher cipher(key.secret, "stream");
  for (std::size_t i = 0; i < path.size(); ++i) {
    const int ks = cipher.next_bit();  // consumed at every position to stay in sync
    if (seq.kind[i] != SlotKind::block && seq.kind[i] != SlotKind::payload) continue;
    const auto s = static_cast<std::size_t>(path[i]);
    stego.samples[s] =
        static_cast<std::uint8_t>((stego.samples[s] & ~1u) | (static_cast<unsigned>(seq.bits[i] ^ ks) & 1u));
  }
  return stego;
}

std::vector<std::uint8_t> extract_message(const PixelGrid& stego, const KeyMaterial& key,
                                          int order) {
  check_order(order);
  const auto path = derive_path(key, stego.width, stego.height, stego.channels, order);
  const int nkeys = mask_bit_count(order);
  const auto key_idx = key_indices(stego, path, order);

  std::vector<std::uint8_t> plain(path.size());
  {
    StreamCipher cipher(key.secret, "stream");
    for (std::size_t i = 0; i < path.size(); ++i)
      plain[i] = static_cast<std::uint8_t>((stego.samples[static_cast<std::size_t>(path[i])] & 1) ^
                                           cipher.next_bit());
  }

  const auto bad = []() {
    fail("no message tag found (wrong key, wrong order, or not a stego image)");
  };

  // Trace keys survive LSB flips, so every header slot sits exactly where
  // the embedder put it: the tag on the first in-range positions, then each
  // key's omission flag on that key's first tuple.
  const auto tag = tag_bits();
  int rank = 0;
  std::int64_t tag_last = -1;
  for (std::size_t i = 0; i < key_idx.size() && rank < kTagBits; ++i) {
    if (key_idx[i] < 0) continue;
    if (plain[i] != tag[static_cast<std::size_t>(rank)]) bad();
    tag_last = static_cast<std::int64_t>(i);
    ++rank;
  }
  if (rank < kTagBits) bad();

  std::vector<std::uint8_t> mask_bits(static_cast<std::size_t>(nkeys), 0);
  std::vector<std::uint8_t> flag_seen(static_cast<std::size_t>(nkeys), 0);
  std::vector<std::uint8_t> header_slot(key_idx.size(), 0);
  for (std::size_t i = static_cast<std::size_t>(tag_last) + 1; i < key_idx.size(); ++i) {
    const std::int32_t c = key_idx[i];
    if (c < 0 || flag_seen[static_cast<std::size_t>(c)]) continue;
    flag_seen[static_cast<std::size_t>(c)] = 1;
    mask_bits[static_cast<std::size_t>(c)] = plain[i];
    header_slot[i] = 1;
  }
  const OmittedMask mask = decode_omitted_mask(mask_bits, order);
  const auto flags = embeddable_flags(stego, path, order, mask);

  std::vector<std::uint8_t> payload;
  for (std::size_t i = static_cast<std::size_t>(tag_last) + 1; i < path.size(); ++i)
    if (!header_slot[i] && flags[i]) payload.push_back(plain[i]);
  if (static_cast<std::int64_t>(payload.size()) < kLengthBits) bad();
  std::uint64_t msg_bits = 0;
  for (int t = 0; t < kLengthBits; ++t) msg_bits = (msg_bits << 1) | payload[static_cast<std::size_t>(t)];
  if (msg_bits % 8 != 0 || msg_bits > payload.size() - kLengthBits) bad();

  std::vector<std::uint8_t> message(msg_bits / 8, 0);
  for (std::uint64_t b = 0; b < msg_bits; ++b) {
    const std::uint8_t bit = payload[static_cast<std::size_t>(kLengthBits + b)];
    message[static_cast<std::size_t>(b / 8)] =
        static_cast<std::uint8_t>(message[static_cast<std::size_t>(b / 8)] | (bit << (7 - b % 8)));
  }
  return message;
}

}  // namespace stegmod
