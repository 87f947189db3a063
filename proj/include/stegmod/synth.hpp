#pragma once

#include <cstdint>

#include "stegmod/pixel_grid.hpp"

namespace stegmod {

// Row-wise random walk with two-sided geometric steps plus per-sample +-1
// dither. step_scale is the decay scale b in P(step = d) ~ exp(-|d|/b);
// lsb_noise is the dither probability. Both knobs shape the within-trace-set
// balance: smoother walks and weaker dither starve the transition subsets,
// which lowers modification capacity the way heavily denoised or synthetic
// content does.
PixelGrid synth_natural_cover(int width, int height, int channels,
                              std::uint64_t seed, double step_scale = 0.8,
                              double lsb_noise = 0.15);

// Rows come in pairs: an even row holding a walk over [0,254] and an odd row
// equal to it plus one. Every horizontal tuple then has an exact
// opposite-parity partner, so |E| = |O| holds exactly for every difference
// sequence at every order.
PixelGrid synth_symmetric_cover(int width, int height, int channels,
                                std::uint64_t seed, double step_scale = 0.8);

// Uniform bytes.
PixelGrid synth_noise_cover(int width, int height, int channels,
                            std::uint64_t seed);

// Returns a copy with the LSB of each sample overwritten by a fresh random
// bit with probability rate. This is what plain LSB replacement of a random
// message at the given rate does in distribution.
PixelGrid lsb_embed_random(const PixelGrid& grid, double rate, std::uint64_t seed);

}  // namespace stegmod
