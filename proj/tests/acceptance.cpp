// Acceptance suite: ten end-to-end checks, one line of output each, nonzero
// exit when any fails. Statistical checks run with pinned seeds so the
// pass/fail verdict is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "stegmod/cover_mod.hpp"
#include "stegmod/detectors.hpp"
#include "stegmod/pipeline.hpp"
#include "stegmod/stego_codec.hpp"
#include "stegmod/synth.hpp"
#include "stegmod/trace_algebra.hpp"

using namespace stegmod;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

RateEstimate spa_of(const PixelGrid& g) {
  return spa_estimate(census(partition_tuples(g, 0, 2)));
}
RateEstimate triples_of(const PixelGrid& g) {
  return triples_estimate(census(partition_tuples(g, 0, 3)));
}

KeyMaterial key_from(std::mt19937_64& rng, int len) {
  KeyMaterial k;
  k.secret.resize(static_cast<std::size_t>(len));
  for (auto& b : k.secret) b = static_cast<std::uint8_t>(rng() & 0xff);
  return k;
}

// ---------------------------------------------------------------------------
// Corpus for the evasion / capacity / sixth-order checks. Photographic
// content is bimodal in a way that matters here: low-noise smooth regions
// quantize into flat plateaus whose tuples pile into a few trace sets with
// most LSB patterns absent (plenty of low-order material, no fully populated
// high-order sets), while textured regions scatter their tuples across so
// many trace keys that no single set gathers enough members to cover all 64
// sixth-order subsets. Uniformly dithered covers miss both effects -- every
// populous set becomes balanced and therefore usable at every order -- so
// this generator builds the two modes explicitly: a posterized plateau base
// under a majority coverage of rough dithered texture patches, plus the odd
// banded ramp.
PixelGrid corpus_cover(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int w = 256, h = 256;
  const double base_scale = 0.35 + 0.05 * static_cast<double>(bounded(rng, 7));
  PixelGrid g = synth_natural_cover(w, h, 1, rng(), base_scale, 0.0);
  for (auto& s : g.samples) s = static_cast<std::uint8_t>(s & ~3u);  // plateau bands of 4

  // textured patches: rough walks, dithered, covering most of the frame
  const int patches = 20 + static_cast<int>(bounded(rng, 6));
  for (int t = 0; t < patches; ++t) {
    const int pw = 48 + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(w - 80)));
    const int ph = 48 + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(h - 80)));
    const int r0 = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(h - ph)));
    const int c0 = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(w - pw)));
    const double scale = 1.42 + 0.10 * static_cast<double>(bounded(rng, 6));
    PixelGrid patch = synth_natural_cover(pw, ph, 1, rng(), scale, 0.38);
    for (int r = 0; r < ph; ++r)
      for (int c = 0; c < pw; ++c) g.at(r0 + r, c0 + c, 0) = patch.at(r, c, 0);
  }

  // quantized ramps: deterministic parity structure, the way banded
  // gradients behave after requantization
  const int ramps = static_cast<int>(bounded(rng, 2));
  for (int t = 0; t < ramps; ++t) {
    const int ph = 24 + static_cast<int>(bounded(rng, 32));
    const int r0 = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(h - ph)));
    const double slope = 0.25 + 0.25 * static_cast<double>(bounded(rng, 5));
    const int v0 = 30 + static_cast<int>(bounded(rng, 180));
    for (int r = r0; r < r0 + ph; ++r)
      for (int c = 0; c < w; ++c) {
        const int v = v0 + static_cast<int>(std::floor(slope * c)) + ((r - r0) / 7);
        g.at(r, c, 0) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
  }
  return g;
}

struct CorpusState {
  std::vector<CorpusImage> corpus;
  DetectionThresholds thr;
  ExperimentResult res2, res3;
  bool ready = false;
};
CorpusState g_corpus;

void ensure_corpus() {
  if (g_corpus.ready) return;
  const int n = 200;
  g_corpus.corpus.reserve(n);
  for (int i = 0; i < n; ++i)
    g_corpus.corpus.push_back(
        {"synthetic-" + std::to_string(i), corpus_cover(31000 + static_cast<std::uint64_t>(i))});

  std::vector<const PixelGrid*> covers;
  covers.reserve(g_corpus.corpus.size());
  for (const auto& img : g_corpus.corpus) covers.push_back(&img.grid);
  g_corpus.thr = calibrate_thresholds(covers);

  ExperimentConfig cfg2;
  cfg2.pipeline = PipelineConfig::for_order(2);
  cfg2.pipeline.seed = 2026;
  g_corpus.res2 = corpus_experiment(g_corpus.corpus, g_corpus.thr, cfg2);

  ExperimentConfig cfg3;
  cfg3.pipeline = PipelineConfig::for_order(3);
  cfg3.pipeline.seed = 2026;
  g_corpus.res3 = corpus_experiment(g_corpus.corpus, g_corpus.thr, cfg3);
  g_corpus.ready = true;
}

// ---------------------------------------------------------------------------
// 1. kernel algebra: analytic inverse against the forward kernel

bool criterion_kernel(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int g : {1, 2, 3, 6}) {
    const KernelMatrix k0 = transition_kernel(g, 0.0);
    for (int i = 0; i < k0.dim; ++i)
      for (int j = 0; j < k0.dim; ++j)
        if (k0.fwd_at(i, j) != (i == j ? 1.0 : 0.0)) {
          detail = strf("T_%d(0) is not exactly the identity", g);
          return false;
        }
  }

  std::mt19937_64 rng(811);
  const long double eps = std::numeric_limits<double>::epsilon();
  double worst = 0;
  int redraws = 0;
  for (int g : {1, 2, 3, 6}) {
    const int dim = 1 << g;
    for (int t = 0; t < 20; ++t) {
      double p = 0;
      for (;;) {
        p = 0.5 * uniform01(rng);
        if (p <= 0) continue;
        // Inverse entries carry ~g ulps of relative error and scale like
        // (1-2p)^-g, so the residual of even a perfect construction grows
        // toward p = 1/2. Redraw where that floor exceeds a tenth of the
        // 1e-10 budget; the redraw count is part of the report.
        const long double gamma = 1.0L / (1.0L - 2.0L * static_cast<long double>(p));
        if (static_cast<long double>(g) * std::pow(gamma, g) * eps < 1e-11L) break;
        ++redraws;
      }
      const KernelMatrix k = transition_kernel(g, p);
      for (int i = 0; i < dim; ++i) {
        long double row = 0;
        for (int j = 0; j < dim; ++j) {
          long double s = 0;
          for (int m = 0; m < dim; ++m)
            s += static_cast<long double>(k.fwd_at(i, m)) * static_cast<long double>(k.inv_at(m, j));
          row += std::fabs(s - (i == j ? 1.0L : 0.0L));
        }
        worst = std::max(worst, static_cast<double>(row));
      }
    }
  }
  const double secs = seconds_since(t0);
  detail = strf("max ||T*inv(T) - I||_inf = %.2e over g in {1,2,3,6}, 20 draws each, "
                "%d redraws near p=1/2 (limit 1e-10, %.2fs)",
                worst, redraws, secs);
  return worst < 1e-10 && secs < 1.0;
}

// ---------------------------------------------------------------------------
// 2. brute-force flip simulator vs. kernel entries

bool criterion_oracle(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4243);
  const int n = 120000;
  double worst_z = 0;
  for (int g : {2, 3}) {
    const int dim = 1 << g;
    for (double p : {0.1, 0.25, 0.4}) {
      const KernelMatrix k = transition_kernel(g, p);
      std::vector<std::vector<std::int64_t>> tally(static_cast<std::size_t>(dim),
                                                   std::vector<std::int64_t>(static_cast<std::size_t>(dim), 0));
      std::vector<std::int64_t> row_n(static_cast<std::size_t>(dim), 0);
      std::vector<std::uint8_t> v(static_cast<std::size_t>(g));
      for (int t = 0; t < n; ++t) {
        int before = 0, after = 0;
        for (int i = 0; i < g; ++i) v[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng() & 0xff);
        // subset index read straight off the LSB pattern, low bit first
        for (int i = 0; i < g; ++i) before |= (v[static_cast<std::size_t>(i)] & 1) << i;
        for (int i = 0; i < g; ++i)
          if (uniform01(rng) < p) v[static_cast<std::size_t>(i)] ^= 1;
        for (int i = 0; i < g; ++i) after |= (v[static_cast<std::size_t>(i)] & 1) << i;
        ++tally[static_cast<std::size_t>(before)][static_cast<std::size_t>(after)];
        ++row_n[static_cast<std::size_t>(before)];
      }
      for (int s = 0; s < dim; ++s) {
        if (row_n[static_cast<std::size_t>(s)] == 0) continue;
        for (int d = 0; d < dim; ++d) {
          const double expect = k.fwd_at(s, d);
          const double freq = static_cast<double>(tally[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)]) /
                              static_cast<double>(row_n[static_cast<std::size_t>(s)]);
          const double sigma =
              std::sqrt(expect * (1 - expect) / static_cast<double>(row_n[static_cast<std::size_t>(s)]));
          worst_z = std::max(worst_z, std::abs(freq - expect) / sigma);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  detail = strf("%d tuples per (g, p), g in {2,3}, p in {0.1,0.25,0.4}: "
                "max |z| = %.2f (limit 3, %.1fs)",
                n, worst_z, secs);
  return worst_z < 3.0 && secs < 30.0;
}

// ---------------------------------------------------------------------------
// 3. trace set sizes are untouched by any LSB flipping

bool criterion_closure(std::string& detail) {
  std::mt19937_64 rng(37);
  const double probs[] = {0.0, 0.3, 0.5, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 8 + static_cast<int>(bounded(rng, 73));
    const int h = 8 + static_cast<int>(bounded(rng, 33));
    PixelGrid g = (trial % 3 == 0) ? synth_natural_cover(w, h, 1, rng())
                                   : synth_noise_cover(w, h, 1, rng());
    PixelGrid flipped = g;
    const double p = probs[trial % 4];
    for (auto& s : flipped.samples)
      if (uniform01(rng) < p) s ^= 1;
    for (int order : {2, 3, 6}) {
      const TupleCensus a = census(partition_tuples(g, 0, order));
      const TupleCensus b = census(partition_tuples(flipped, 0, order));
      if (a.overflow != b.overflow || a.counts.size() != b.counts.size()) {
        detail = strf("trial %d order %d: key population changed under flips", trial, order);
        return false;
      }
      for (const auto& [key, counts] : a.counts) {
        const auto it = b.counts.find(key);
        if (it == b.counts.end() || a.trace_set_size(key) != b.trace_set_size(key)) {
          detail = strf("trial %d order %d: |C_%s| changed under flips", trial, order,
                        key.str().c_str());
          return false;
        }
      }
    }
  }
  detail = "per-key trace set sizes exact under arbitrary LSB flips, 100 grids, orders {2,3,6}";
  return true;
}

// ---------------------------------------------------------------------------
// 4. estimator accuracy across the rate sweep on balanced covers

bool criterion_detectors(std::string& detail) {
  const int trials = 20;
  double worst_spa = 0, worst_tri = 0;
  for (int ai = 0; ai <= 9; ++ai) {
    const double alpha = 0.1 * ai;
    double spa_sum = 0, tri_sum = 0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t s = 700000 + static_cast<std::uint64_t>(ai) * 1000 + static_cast<std::uint64_t>(t);
      const PixelGrid cover = synth_symmetric_cover(512, 512, 1, s);
      const PixelGrid stego = lsb_embed_random(cover, alpha, s ^ 0x9e3779b97f4a7c15ull);
      spa_sum += spa_of(stego).alpha;
      if (alpha < 0.5) tri_sum += triples_of(stego).alpha;
    }
    worst_spa = std::max(worst_spa, std::abs(spa_sum / trials - alpha));
    if (alpha < 0.5) worst_tri = std::max(worst_tri, std::abs(tri_sum / trials - alpha));
  }
  detail = strf("512x512 balanced covers, alpha 0..0.9, %d-trial means: "
                "max |SPA - truth| = %.4f, max |Triples - truth| = %.4f below 0.5 (limit 0.05)",
                trials, worst_spa, worst_tri);
  return worst_spa < 0.05 && worst_tri < 0.05;
}

// ---------------------------------------------------------------------------
// 5. modify + embed restores the censuses

struct CellStats {
  std::map<TraceKey, std::vector<double>> sum, sumsq;
  void add(const TupleCensus& c) {
    for (const auto& [key, counts] : c.counts) {
      auto& s = sum[key];
      auto& q = sumsq[key];
      if (s.empty()) {
        s.assign(counts.size(), 0.0);
        q.assign(counts.size(), 0.0);
      }
      for (std::size_t j = 0; j < counts.size(); ++j) {
        const double v = static_cast<double>(counts[j]);
        s[j] += v;
        q[j] += v * v;
      }
    }
  }
  // worst (|mean - reference| - 1) / (3 sd) over all cells; <= 1 passes.
  // sd is the per-embedding spread of the cell (the multinomial noise one
  // embedding injects), so the band is the usual 3-sigma envelope; averaging
  // over R embeds estimates the mean to sd/sqrt(R), far inside that band,
  // which keeps the test sharp for systematic bias without tripping on the
  // max over thousands of cells. One count of slack absorbs integer rounding
  // of the plan targets.
  double worst_excess(const TupleCensus& ref, int R) const {
    double worst = 0;
    for (const auto& [key, counts] : ref.counts) {
      const auto it = sum.find(key);
      if (it == sum.end()) return std::numeric_limits<double>::infinity();
      const auto& q = sumsq.at(key);
      for (std::size_t j = 0; j < counts.size(); ++j) {
        const double mean = it->second[j] / R;
        const double var = std::max(0.0, (q[j] - R * mean * mean) / (R - 1));
        const double band = 3.0 * std::sqrt(var);
        const double dev = std::abs(mean - static_cast<double>(counts[j]));
        const double excess = std::max(0.0, dev - 1.0) / std::max(band, 1e-12);
        worst = std::max(worst, std::min(excess, 1e6));
      }
    }
    return worst;
  }
};

PixelGrid embed_filler_at_rate(const PixelGrid& modified, const KeyMaterial& key, double alpha,
                               int order, const OmittedMask& mask, std::int64_t* bits_out) {
  const auto path = derive_path(key, modified.width, modified.height, modified.channels, order);
  const auto flags = embeddable_flags(modified, path, order, mask);
  const std::int64_t embeddable =
      std::count(flags.begin(), flags.end(), static_cast<std::uint8_t>(1));
  const std::int64_t budget =
      static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(embeddable)));
  // same sizing as the pipeline: spend the rate budget exactly, net of header
  const std::int64_t header_spend =
      embeddable - message_capacity_bits(modified, key, order, mask) - 32;
  std::int64_t payload_bytes = (budget - header_spend - 32) / 8;
  if (payload_bytes < 0) payload_bytes = 0;
  StreamCipher cipher(key.secret, "payload");
  std::vector<std::uint8_t> msg(static_cast<std::size_t>(payload_bytes));
  for (auto& b : msg) b = cipher.next_byte();
  if (bits_out) *bits_out = 8 * payload_bytes;
  return embed_message(modified, key, msg, order, mask);
}

bool criterion_restoration(std::string& detail) {
  const int covers = 50, R = 32;
  double worst2 = 0, worst3p = 0, worst3t = 0;
  std::mt19937_64 rng(5150);
  for (int c = 0; c < covers; ++c) {
    const PixelGrid cover =
        synth_natural_cover(256, 256, 1, 50000 + static_cast<std::uint64_t>(c), 0.7);

    // ---- order 2 ----
    {
      const ChannelCapacity cc = channel_capacity(cover, 0, 2);
      const double alpha = std::min(cc.alpha, 0.99);
      const auto& omit = cc.families[0].selection.omitted;
      ModificationPlan plan =
          plan_modification_2nd(partition_tuples(cover, 0, 2), alpha, omit, rng());
      PixelGrid modified = cover;
      apply_plan(modified, plan);

      OmittedMask mask;
      mask.order = 2;
      mask.omitted[0].insert(omit.begin(), omit.end());
      const TupleCensus ref = census(partition_tuples(cover, 0, 2));
      CellStats stats;
      for (int r = 0; r < R; ++r) {
        const KeyMaterial key = key_from(rng, 16);
        const PixelGrid stego = embed_filler_at_rate(modified, key, alpha, 2, mask, nullptr);
        stats.add(census(partition_tuples(stego, 0, 2)));
      }
      worst2 = std::max(worst2, stats.worst_excess(ref, R));
    }

    // ---- order 3 ----
    {
      const ChannelCapacity cc = channel_capacity(cover, 0, 3);
      const double alpha = std::min(cc.alpha, 0.99);
      const auto fams = partition_triplet_families(cover, 0);
      const auto plans = plan_modification_3rd(fams.first, fams.second, alpha,
                                               cc.families[0].selection.omitted,
                                               cc.families[1].selection.omitted, rng());
      PixelGrid modified = cover;
      apply_plan(modified, plans.first);
      apply_plan(modified, plans.second);

      OmittedMask mask;
      mask.order = 3;
      mask.omitted[0].insert(cc.families[0].selection.omitted.begin(),
                             cc.families[0].selection.omitted.end());
      mask.omitted[1].insert(cc.families[1].selection.omitted.begin(),
                             cc.families[1].selection.omitted.end());
      const TupleCensus ref_pairs = census(partition_tuples(cover, 0, 2));
      const TupleCensus ref_triples = census(partition_tuples(cover, 0, 3));
      CellStats pair_stats, triple_stats;
      for (int r = 0; r < R; ++r) {
        const KeyMaterial key = key_from(rng, 16);
        const PixelGrid stego = embed_filler_at_rate(modified, key, alpha, 3, mask, nullptr);
        pair_stats.add(census(partition_tuples(stego, 0, 2)));
        triple_stats.add(census(partition_tuples(stego, 0, 3)));
        // middle columns of each sextuplet must never change
        for (int row = 0; row < cover.height; ++row)
          for (int col = 2; col < (cover.width / 6) * 6; col += 6)
            if (stego.at(row, col, 0) != cover.at(row, col, 0) ||
                stego.at(row, col + 1, 0) != cover.at(row, col + 1, 0)) {
              detail = strf("cover %d: a middle sample changed under order-3 embedding", c);
              return false;
            }
      }
      worst3p = std::max(worst3p, pair_stats.worst_excess(ref_pairs, R));
      worst3t = std::max(worst3t, triple_stats.worst_excess(ref_triples, R));
    }
  }
  detail = strf("%d covers, %d embeds each: worst cell excess (|mean-cover|-1)/(3sd) = "
                "%.2f (order 2), %.2f / %.2f (order 3 pairs / triplets); middle samples identical "
                "(limit 1)",
                covers, R, worst2, worst3p, worst3t);
  return worst2 <= 1.0 && worst3p <= 1.0 && worst3t <= 1.0;
}

// ---------------------------------------------------------------------------
// 6. calibrated evasion, plus the naive-embedding and cross-order contrasts

bool criterion_evasion(std::string& detail) {
  ensure_corpus();
  auto attempted = [](const ExperimentRow& r) {
    return r.status == "ok" || r.status == "detected-at-floor";
  };

  int att2 = 0, spa_quiet2 = 0, tri_hit2 = 0;
  for (const auto& r : g_corpus.res2.rows) {
    if (!attempted(r)) continue;
    ++att2;
    spa_quiet2 += !r.spa_flagged;
    tri_hit2 += r.triples_flagged;
  }
  int att3 = 0, both_quiet3 = 0;
  for (const auto& r : g_corpus.res3.rows) {
    if (!attempted(r)) continue;
    ++att3;
    both_quiet3 += (!r.spa_flagged && !r.triples_flagged);
  }

  int naive_flagged = 0;
  for (std::size_t i = 0; i < g_corpus.corpus.size(); ++i) {
    const PixelGrid stego =
        lsb_embed_random(g_corpus.corpus[i].grid, 0.2, 60000 + static_cast<std::uint64_t>(i));
    const double a = spa_of(stego).alpha;
    naive_flagged += (a < g_corpus.thr.spa_lo || a > g_corpus.thr.spa_hi);
  }

  const double f_spa2 = att2 ? static_cast<double>(spa_quiet2) / att2 : 0;
  const double f_tri2 = att2 ? static_cast<double>(tri_hit2) / att2 : 0;
  const double f_both3 = att3 ? static_cast<double>(both_quiet3) / att3 : 0;
  const double f_naive = static_cast<double>(naive_flagged) / static_cast<double>(g_corpus.corpus.size());
  detail = strf("order-2 quiet on SPA %.0f%% of %d, order-3 quiet on both %.0f%% of %d, "
                "naive 0.2 flagged %.0f%%, order-2 caught by triples %.0f%% "
                "(limits 90/90/90/80, attempted floor 120)",
                100 * f_spa2, att2, 100 * f_both3, att3, 100 * f_naive, 100 * f_tri2);
  return f_spa2 >= 0.90 && f_both3 >= 0.90 && f_naive >= 0.90 && f_tri2 >= 0.80 &&
         att2 >= 120 && att3 >= 120;
}

// ---------------------------------------------------------------------------
// 7. chosen payload sizes sit in the reported band

bool criterion_capacity(std::string& detail) {
  ensure_corpus();
  std::vector<double> bpc;
  for (const auto& r : g_corpus.res3.rows)
    if (r.status == "ok") bpc.push_back(r.bpc);
  if (bpc.size() < 100) {
    detail = strf("only %zu successful embeddings out of %zu images", bpc.size(),
                  g_corpus.corpus.size());
    return false;
  }
  int in_band = 0;
  double sum = 0;
  for (double v : bpc) {
    in_band += (v >= 0.05 && v <= 0.40);
    sum += v;
  }
  const double frac = static_cast<double>(in_band) / static_cast<double>(bpc.size());
  const double mean = sum / static_cast<double>(bpc.size());
  detail = strf("chosen rate in [0.05,0.40] bpc for %.0f%% of %zu embedded images "
                "(limit 80%%), mean %.3f bpc (limit [0.08,0.30]); synthetic plateau+texture corpus",
                100 * frac, bpc.size(), mean);
  return frac >= 0.80 && mean >= 0.08 && mean <= 0.30;
}

// ---------------------------------------------------------------------------
// 8. embeddable fraction closed form

bool criterion_fraction(std::string& detail) {
  const Fraction f3 = embeddable_fraction(3);
  const Fraction f4 = embeddable_fraction(4);
  const Fraction f5 = embeddable_fraction(5);
  detail = strf("order 3 -> %lld/%lld, order 4 -> %lld/%lld, order 5 -> %lld/%lld "
                "(expect 2/3, 1/2, 1/10)",
                static_cast<long long>(f3.num), static_cast<long long>(f3.den),
                static_cast<long long>(f4.num), static_cast<long long>(f4.den),
                static_cast<long long>(f5.num), static_cast<long long>(f5.den));
  return f3.num == 2 && f3.den == 3 && f4.num == 1 && f4.den == 2 && f5.num == 1 && f5.den == 10;
}

// ---------------------------------------------------------------------------
// 9. randomized codec round trips and wrong-key behavior

bool criterion_codec(std::string& detail) {
  std::mt19937_64 rng(1313);
  const int trials = 1000;
  int bad_round_trips = 0, wrong_key_rejected = 0;
  for (int t = 0; t < trials; ++t) {
    const int order = (t & 1) ? 3 : 2;
    const int w = 54 + 6 * static_cast<int>(bounded(rng, 12));
    const int h = 18 + static_cast<int>(bounded(rng, 31));
    const double scale = 0.5 + 0.3 * uniform01(rng);
    const PixelGrid cover = synth_natural_cover(w, h, 1, rng(), scale);
    const KeyMaterial key = key_from(rng, 1 + static_cast<int>(bounded(rng, 32)));

    OmittedMask mask;
    mask.order = order;
    if (t % 3 == 0) {
      if (order == 2) {
        mask.omitted[0].insert(TraceKey::parse("2"));
      } else {
        mask.omitted[0].insert(TraceKey::parse("1,1"));
        mask.omitted[1].insert(TraceKey::parse("2,0"));
      }
    }

    try {
      const std::int64_t cap = message_capacity_bits(cover, key, order, mask);
      const std::int64_t max_bytes = cap / 8;
      std::vector<std::uint8_t> msg(
          static_cast<std::size_t>(bounded(rng, static_cast<std::uint64_t>(max_bytes + 1))));
      for (auto& b : msg) b = static_cast<std::uint8_t>(rng() & 0xff);

      const PixelGrid stego = embed_message(cover, key, msg, order, mask);
      if (extract_message(stego, key, order) != msg) ++bad_round_trips;

      KeyMaterial wrong = key;
      wrong.secret[bounded(rng, wrong.secret.size())] ^= 0x5a;
      try {
        extract_message(stego, wrong, order);  // any output at all is a false accept
      } catch (const Error&) {
        ++wrong_key_rejected;
      }
    } catch (const Error&) {
      ++bad_round_trips;  // capacity or embedding failed on a routine cover
    }
  }
  detail = strf("%d randomized round trips: %d failures (limit 0); wrong key rejected "
                "%d/%d (limit 999)",
                trials, bad_round_trips, wrong_key_rejected, trials);
  return bad_round_trips == 0 && wrong_key_rejected >= 999;
}

// ---------------------------------------------------------------------------
// 10. direct sixth-order modification stays impractical

bool criterion_sixth(std::string& detail) {
  ensure_corpus();
  const SurveyResult res = sixth_order_survey(g_corpus.corpus, "");
  int tiny = 0;
  for (const auto& r : res.rows) tiny += (r.capacity_fraction < 0.001);
  const double frac = res.rows.empty()
                          ? 0
                          : static_cast<double>(tiny) / static_cast<double>(res.rows.size());
  detail = strf("usable sixth-order capacity below 0.1%% of samples for %.0f%% of %zu images "
                "(limit 95%%); %.0f%% of images have no fully populated trace set",
                100 * frac, res.rows.size(), 100 * res.blocked_fraction);
  return frac >= 0.95;
}

}  // namespace

// Runs every criterion by default; pass indices (1-10) to run a subset.
int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Criterion all[] = {
      {"kernel algebra", criterion_kernel},
      {"flip-simulator oracle", criterion_oracle},
      {"trace set closure", criterion_closure},
      {"detector accuracy", criterion_detectors},
      {"census restoration", criterion_restoration},
      {"detection evasion", criterion_evasion},
      {"capacity bands", criterion_capacity},
      {"embeddable fractions", criterion_fraction},
      {"codec round trip", criterion_codec},
      {"sixth-order survey", criterion_sixth},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  int idx = 0;
  for (const auto& c : all) {
    ++idx;
    if (!wanted.empty() && !wanted.count(idx)) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("unhandled error: ") + e.what();
    }
    if (!pass) ++failures;
    std::printf("criterion %2d (%s): %s - %s\n", idx, c.name, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
  }
  if (failures) std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
