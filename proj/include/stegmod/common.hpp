#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace stegmod {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}, h);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Bounded draw and unit uniform implemented directly on the engine output.
// std::uniform_int_distribution is implementation-defined, which would make
// stego output depend on the standard library; these do not.
template <class Rng>
std::uint64_t bounded(Rng& g, std::uint64_t n) {
  if (n == 0) fail("bounded: empty range");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = g();
  } while (v >= limit);
  return v % n;
}

template <class Rng>
double uniform01(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <class Rng, class T>
void shuffle_vec(Rng& g, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace stegmod
