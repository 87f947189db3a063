#include "stegmod/detectors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "stegmod/common.hpp"

namespace stegmod {
namespace {

// Shared scan grid for both estimators. The sample point closest to full
// embedding is skipped: pulled-back counts are scale-degenerate there and
// the polynomial weighting makes the immediate neighborhood carry the same
// information anyway.
constexpr double kScanLo = -0.5;
constexpr double kScanHi = 1.02;
constexpr double kScanStep = 1e-3;
constexpr int kScanPoints = 1521;  // inclusive of both ends
constexpr double kSkipHalfWidth = 1e-6;

double scan_alpha(int i) { return kScanLo + kScanStep * i; }

bool skip_point(double alpha) { return std::abs(alpha - 1.0) < kSkipHalfWidth; }

// Minimize obj over the grid, then refine once through the parabola vertex of
// the best point and its neighbors. Values are stored per index so the argmin
// is identical no matter how many threads filled them in.
template <class F>
RateEstimate scan_minimum(F&& obj, bool parallel) {
  std::vector<double> q(kScanPoints, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < kScanPoints; ++i) {
    const double a = scan_alpha(i);
    if (!skip_point(a)) q[static_cast<std::size_t>(i)] = obj(a);
  }
  int best = 0;
  for (int i = 1; i < kScanPoints; ++i)
    if (q[static_cast<std::size_t>(i)] < q[static_cast<std::size_t>(best)]) best = i;

  double alpha = scan_alpha(best);
  double value = q[static_cast<std::size_t>(best)];
  if (best > 0 && best < kScanPoints - 1) {
    const double qm = q[static_cast<std::size_t>(best) - 1];
    const double qp = q[static_cast<std::size_t>(best) + 1];
    if (std::isfinite(qm) && std::isfinite(qp)) {
      const double denom = qp - 2 * value + qm;
      if (denom > 1e-300) {
        double av = alpha - 0.5 * kScanStep * (qp - qm) / denom;
        av = std::clamp(av, alpha - kScanStep, alpha + kScanStep);
        if (!skip_point(av)) {
          const double qv = obj(av);
          if (qv < value) {
            alpha = av;
            value = qv;
          }
        }
      }
    }
  }
  return {alpha, value};
}

// Dense per-key count table for one component range. Missing keys are zero.
std::vector<std::array<double, 4>> pair_table(const TupleCensus& c, int& K) {
  if (c.order != 2) fail("pair estimator needs an order-2 census");
  K = c.range_hi - c.range_lo + 1;
  std::vector<std::array<double, 4>> t(static_cast<std::size_t>(K), {0, 0, 0, 0});
  double total = 0;
  for (const auto& [key, counts] : c.counts) {
    if (key.len != 1) fail("pair estimator needs single-difference keys");
    const int km = key.m[0] - c.range_lo;
    for (int j = 0; j < 4; ++j) {
      t[static_cast<std::size_t>(km)][static_cast<std::size_t>(j)] =
          static_cast<double>(counts[static_cast<std::size_t>(j)]);
      total += static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
  }
  if (total <= 0) fail("census has no tuples inside the scan range");
  return t;
}

std::vector<std::array<double, 8>> triplet_table(const TupleCensus& c, int& K) {
  if (c.order != 3) fail("triplet estimator needs an order-3 census");
  K = c.range_hi - c.range_lo + 1;
  std::vector<std::array<double, 8>> t(static_cast<std::size_t>(K) * K);
  for (auto& row : t) row.fill(0);
  double total = 0;
  for (const auto& [key, counts] : c.counts) {
    if (key.len != 2) fail("triplet estimator needs two-difference keys");
    const int km = key.m[0] - c.range_lo;
    const int kn = key.m[1] - c.range_lo;
    auto& row = t[static_cast<std::size_t>(km) * K + kn];
    for (int j = 0; j < 8; ++j) {
      row[static_cast<std::size_t>(j)] = static_cast<double>(counts[static_cast<std::size_t>(j)]);
      total += static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
  }
  if (total <= 0) fail("census has no tuples inside the scan range");
  return t;
}

template <int Dim>
std::array<int, Dim> hamming_row(int row) {
  std::array<int, Dim> pc{};
  for (int j = 0; j < Dim; ++j)
    pc[static_cast<std::size_t>(j)] = std::popcount(static_cast<unsigned>(row ^ j));
  return pc;
}

RateEstimate spa_impl(const TupleCensus& pairs, bool parallel) {
  int K = 0;
  const auto cnt = pair_table(pairs, K);
  // Weight rows that isolate |E_{2m+1}| and |O_{2m+1}| after the pull-back:
  // subset indices 2 (first sample even, second odd) and 1 (the reverse).
  static const auto pcE = hamming_row<4>(2);
  static const auto pcO = hamming_row<4>(1);
  auto obj = [&](double alpha) {
    const double p = alpha / 2;
    const double a = 1 - p, b = -p;
    const double w[3] = {a * a, a * b, b * b};
    double quad = 0;
    for (int m = 0; m + 1 < K; ++m) {
      const auto& cm = cnt[static_cast<std::size_t>(m)];
      const auto& cn = cnt[static_cast<std::size_t>(m) + 1];
      double e = 0, o = 0;
      for (int j = 0; j < 4; ++j) {
        e += w[pcE[static_cast<std::size_t>(j)]] * cm[static_cast<std::size_t>(j)];
        o += w[pcO[static_cast<std::size_t>(j)]] * cn[static_cast<std::size_t>(j)];
      }
      const double r = e - o;
      quad += r * r;
    }
    return quad;
  };
  return scan_minimum(obj, parallel);
}

RateEstimate triples_impl(const TupleCensus& triplets, bool parallel) {
  int K = 0;
  const auto cnt = triplet_table(triplets, K);
  // Rows isolating |E_{2m+1,2n+1}| (LSB pattern 0,1,0 = index 2) and
  // |O_{2m+1,2n+1}| (pattern 1,0,1 = index 5).
  static const auto pcE = hamming_row<8>(2);
  static const auto pcO = hamming_row<8>(5);
  auto obj = [&](double alpha) {
    const double p = alpha / 2;
    const double a = 1 - p, b = -p;
    const double w[4] = {a * a * a, a * a * b, a * b * b, b * b * b};
    double quad = 0;
    for (int m = 0; m + 1 < K; ++m) {
      for (int n = 0; n + 1 < K; ++n) {
        const auto& ce = cnt[static_cast<std::size_t>(m) * K + (n + 1)];
        const auto& co = cnt[(static_cast<std::size_t>(m) + 1) * K + n];
        double e = 0, o = 0;
        for (int j = 0; j < 8; ++j) {
          e += w[pcE[static_cast<std::size_t>(j)]] * ce[static_cast<std::size_t>(j)];
          o += w[pcO[static_cast<std::size_t>(j)]] * co[static_cast<std::size_t>(j)];
        }
        const double r = e - o;
        quad += r * r;
      }
    }
    return quad;
  };
  return scan_minimum(obj, parallel);
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) fail("percentile of an empty sample");
  if (v.size() == 1) return v[0];
  const double rank = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(rank);
  if (i + 1 >= v.size()) return v.back();
  const double frac = rank - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

}  // namespace

RateEstimate spa_estimate(const TupleCensus& pairs) { return spa_impl(pairs, true); }
RateEstimate triples_estimate(const TupleCensus& triplets) { return triples_impl(triplets, true); }

namespace reference {
RateEstimate spa_estimate(const TupleCensus& pairs) { return spa_impl(pairs, false); }
RateEstimate triples_estimate(const TupleCensus& triplets) { return triples_impl(triplets, false); }
}  // namespace reference

double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) fail("gamma_q arguments out of domain");
  if (x == 0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1) {
    // series for P(a, x), then complement
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1 - a;
  double c = 1 / tiny;
  double d = 1 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - lg);
}

Chi2Result histogram_chi2(const PixelGrid& grid, int channel) {
  if (channel >= grid.channels) fail("chi-square channel out of range");
  std::array<double, 256> bins{};
  const std::size_t n = grid.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (channel >= 0 &&
        static_cast<int>(i % static_cast<std::size_t>(grid.channels)) != channel)
      continue;
    bins[grid.samples[i]] += 1;
  }
  Chi2Result r;
  int pairs = 0;
  for (int k = 0; k < 128; ++k) {
    const double a = bins[static_cast<std::size_t>(2 * k)];
    const double b = bins[static_cast<std::size_t>(2 * k) + 1];
    const double s = a + b;
    if (s <= 0) continue;
    r.statistic += (a - b) * (a - b) / s;
    ++pairs;
  }
  r.dof = pairs - 1;
  r.p_value = r.dof > 0 ? gamma_q(r.dof / 2.0, r.statistic / 2.0) : 1.0;
  return r;
}

DetectionThresholds calibrate_thresholds(const std::vector<const PixelGrid*>& covers) {
  if (covers.size() < 100) fail("threshold calibration needs at least 100 covers");
  std::vector<double> spa_vals, tri_vals;
  for (const PixelGrid* g : covers) {
    if (!g) fail("null cover passed to calibration");
    for (int ch = 0; ch < g->channels; ++ch) {
      spa_vals.push_back(spa_estimate(census(partition_tuples(*g, ch, 2))).alpha);
      tri_vals.push_back(triples_estimate(census(partition_tuples(*g, ch, 3))).alpha);
    }
  }
  DetectionThresholds t;
  t.spa_lo = percentile(spa_vals, 2.5);
  t.spa_hi = percentile(spa_vals, 97.5);
  t.triples_lo = percentile(tri_vals, 2.5);
  t.triples_hi = percentile(tri_vals, 97.5);
  t.calibration_images = static_cast<int>(covers.size());
  return t;
}

nlohmann::json thresholds_to_json(const DetectionThresholds& t) {
  return {{"spa", {{"lo", t.spa_lo}, {"hi", t.spa_hi}}},
          {"triples", {{"lo", t.triples_lo}, {"hi", t.triples_hi}}},
          {"calibration_images", t.calibration_images}};
}

DetectionThresholds thresholds_from_json(const nlohmann::json& j) {
  DetectionThresholds t;
  t.spa_lo = j.at("spa").at("lo").get<double>();
  t.spa_hi = j.at("spa").at("hi").get<double>();
  t.triples_lo = j.at("triples").at("lo").get<double>();
  t.triples_hi = j.at("triples").at("hi").get<double>();
  t.calibration_images = j.at("calibration_images").get<int>();
  return t;
}

DetectionReport detect(const PixelGrid& grid, const DetectionThresholds& thr) {
  DetectionReport rep;
  for (int ch = 0; ch < grid.channels; ++ch) {
    ChannelReport cr;
    cr.channel = ch;
    cr.spa = spa_estimate(census(partition_tuples(grid, ch, 2)));
    cr.triples = triples_estimate(census(partition_tuples(grid, ch, 3)));
    cr.chi2 = histogram_chi2(grid, ch);
    cr.spa_flagged = cr.spa.alpha < thr.spa_lo || cr.spa.alpha > thr.spa_hi;
    cr.triples_flagged = cr.triples.alpha < thr.triples_lo || cr.triples.alpha > thr.triples_hi;
    rep.flagged = rep.flagged || cr.spa_flagged || cr.triples_flagged;
    rep.channels.push_back(cr);
  }
  return rep;
}

}  // namespace stegmod
