#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "stegmod/trace_algebra.hpp"

namespace stegmod {

struct RateEstimate {
  double alpha = 0;     // estimated embedding rate
  double residual = 0;  // objective value at the optimum
};

// Least-squares rate estimate from a pair census. For a candidate rate the
// measured counts are pulled back through the flip kernel and the putative
// cover's odd-difference balance |E_{2m+1}| = |O_{2m+1}| is scored. The
// violations are weighted by (1-alpha)^2 so they stay polynomial in alpha;
// this keeps the objective finite and informative through alpha = 1, where
// the raw inverse diverges.
RateEstimate spa_estimate(const TupleCensus& pairs);

// Triplet analog scoring |E_{2m+1,2n+1}| = |O_{2m+1,2n+1}| with cubic
// weighting. Known to lose accuracy above roughly half-rate embedding.
RateEstimate triples_estimate(const TupleCensus& triplets);

namespace reference {
// Serial scans, same arithmetic; kept for tests and benchmarks.
RateEstimate spa_estimate(const TupleCensus& pairs);
RateEstimate triples_estimate(const TupleCensus& triplets);
}  // namespace reference

struct Chi2Result {
  double statistic = 0;
  double p_value = 1;  // upper tail: near 1 when value pairs are evened out
  int dof = 0;
};

// First-order histogram attack comparing each (2k, 2k+1) bin pair against
// its mean. channel = -1 pools all channels.
Chi2Result histogram_chi2(const PixelGrid& grid, int channel = -1);

struct DetectionThresholds {
  double spa_lo = 0, spa_hi = 0;
  double triples_lo = 0, triples_hi = 0;
  int calibration_images = 0;
};

// [2.5, 97.5] percentile bands of both estimators over unembedded covers.
// Requires at least 100 covers.
DetectionThresholds calibrate_thresholds(const std::vector<const PixelGrid*>& covers);

nlohmann::json thresholds_to_json(const DetectionThresholds& t);
DetectionThresholds thresholds_from_json(const nlohmann::json& j);

struct ChannelReport {
  int channel = 0;
  RateEstimate spa, triples;
  Chi2Result chi2;
  bool spa_flagged = false;
  bool triples_flagged = false;
};

struct DetectionReport {
  std::vector<ChannelReport> channels;
  bool flagged = false;  // any channel outside either band
};

DetectionReport detect(const PixelGrid& grid, const DetectionThresholds& thr);

// Regularized upper incomplete gamma Q(a, x); exposed for the chi-square
// p-value and its tests.
double gamma_q(double a, double x);

}  // namespace stegmod
