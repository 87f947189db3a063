#include "stegmod/synth.hpp"

#include <cmath>
#include <random>

namespace stegmod {

namespace {

// Two-sided geometric step: P(|d| = k) ~ exp(-k/b), sign uniform.
int walk_step(std::mt19937_64& rng, double scale) {
  double q = std::exp(-1.0 / scale);
  int mag = 0;
  while (uniform01(rng) < q && mag < 24) ++mag;
  if (mag == 0) return 0;
  return (rng() & 1) ? mag : -mag;
}

int reflect(int v, int lo, int hi) {
  while (v < lo || v > hi) {
    if (v < lo) v = 2 * lo - v;
    if (v > hi) v = 2 * hi - v;
  }
  return v;
}

}  // namespace

PixelGrid synth_natural_cover(int width, int height, int channels,
                              std::uint64_t seed, double step_scale,
                              double lsb_noise) {
  if (lsb_noise < 0 || lsb_noise > 1) fail("synth_natural_cover: bad noise level");
  PixelGrid g(width, height, channels);
  std::mt19937_64 rng(seed);
  for (int ch = 0; ch < channels; ++ch)
    for (int r = 0; r < height; ++r) {
      int v = 40 + static_cast<int>(bounded(rng, 176));
      for (int c = 0; c < width; ++c) {
        v = reflect(v + walk_step(rng, step_scale), 0, 255);
        int out = v;
        // fine-grain sensor dither; without it the low-order structure is
        // far more regular than photographic content ever is
        if (uniform01(rng) < lsb_noise) out = reflect(v + ((rng() & 1) ? 1 : -1), 0, 255);
        g.at(r, c, ch) = static_cast<std::uint8_t>(out);
      }
    }
  return g;
}

PixelGrid synth_symmetric_cover(int width, int height, int channels,
                                std::uint64_t seed, double step_scale) {
  PixelGrid g(width, height, channels);
  std::mt19937_64 rng(seed);
  for (int ch = 0; ch < channels; ++ch)
    for (int r = 0; r + 1 < height; r += 2) {
      int v = 40 + static_cast<int>(bounded(rng, 176));
      for (int c = 0; c < width; ++c) {
        v = reflect(v + walk_step(rng, step_scale), 0, 254);
        g.at(r, c, ch) = static_cast<std::uint8_t>(v);
        g.at(r + 1, c, ch) = static_cast<std::uint8_t>(v + 1);
      }
    }
  if (height & 1) {
    // A constant trailing row adds only even-difference tuples, which keeps
    // the odd-difference balance the detectors rely on exact.
    int r = height - 1;
    for (int ch = 0; ch < channels; ++ch)
      for (int c = 0; c < width; ++c) g.at(r, c, ch) = 128;
  }
  return g;
}

PixelGrid synth_noise_cover(int width, int height, int channels,
                            std::uint64_t seed) {
  PixelGrid g(width, height, channels);
  std::mt19937_64 rng(seed);
  for (auto& s : g.samples) s = static_cast<std::uint8_t>(rng() & 0xff);
  return g;
}

PixelGrid lsb_embed_random(const PixelGrid& grid, double rate, std::uint64_t seed) {
  if (rate < 0 || rate > 1) fail("lsb_embed_random: rate must be in [0,1]");
  PixelGrid out = grid;
  std::mt19937_64 rng(seed);
  for (auto& s : out.samples)
    if (uniform01(rng) < rate)
      s = static_cast<std::uint8_t>((s & ~1u) | (rng() & 1));
  return out;
}

}  // namespace stegmod
