#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "stegmod/cover_mod.hpp"
#include "stegmod/detectors.hpp"
#include "stegmod/stego_codec.hpp"

namespace stegmod {

struct PipelineConfig {
  int order = 3;             // modification / embedding strategy order
  double fixed_alpha = -1;   // >= 0 pins the rate; otherwise max-rate policy
  double alpha_floor = 0.02; // tuning loop gives up below this
  int max_tuning_steps = 12; // each step scales the rate by 0.9
  bool evade_spa = true;     // detectors the tuning loop must silence
  bool evade_triples = true;
  std::uint64_t seed = 1;

  static PipelineConfig for_order(int order) {
    PipelineConfig c;
    c.order = order;
    c.evade_triples = order >= 3;  // second-order plans cannot beat the triplet attack
    return c;
  }
};

struct PipelineOutcome {
  std::string status;  // ok | zero-capacity | detected-at-floor | infeasible
  double alpha = 0;    // final tuple-level embedding rate
  double bpc = 0;      // embedded bits per channel sample
  std::int64_t message_bits = 0;
  int omitted_keys = 0;
  int tuning_steps = 0;
  OmittedMask mask;
  PixelGrid stego;
  DetectionReport report;  // both detectors on the final stego
};

// capacity -> mask -> plan -> apply -> embed -> detect, retrying at 0.9x the
// rate (replanning from the pristine cover) until the configured detectors
// stay quiet. The payload is a keystream-derived filler sized to the rate, so
// the plan and the realized flip probability always agree.
PipelineOutcome run_pipeline(const PixelGrid& cover, const KeyMaterial& key,
                             const DetectionThresholds& thr, const PipelineConfig& cfg);

struct CorpusImage {
  std::string name;
  PixelGrid grid;
};

struct ExperimentConfig {
  PipelineConfig pipeline;
  bool screen_covers = true;        // drop covers the detectors already flag
  std::string output_dir;           // empty: keep results in memory only
};

struct ExperimentRow {
  std::string image;
  int channel = 0;
  std::string status;
  double alpha = 0;
  double bpc = 0;
  double capacity_alpha = 0;
  int omitted_keys = 0;
  std::int64_t message_bits = 0;
  int tuning_steps = 0;
  double spa_alpha = 0;
  bool spa_flagged = false;
  double triples_alpha = 0;
  bool triples_flagged = false;
  double chi2_p = 1;
};

struct ExperimentSummary {
  int images = 0;
  int screened_out = 0;
  int ok = 0;
  int detected = 0;
  int zero_capacity = 0;
  int errored = 0;
  double mean_bpc = 0;
  double median_bpc = 0;
  double p10_bpc = 0;
  double p90_bpc = 0;
  double mean_alpha = 0;
  double evasion_rate = 0;  // ok / (ok + detected)
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // one per (image, channel)
  ExperimentSummary summary;
};

nlohmann::json summary_to_json(const ExperimentSummary& s);

// Runs the pipeline over a corpus with per-image keys derived from the seed
// and image name. Deterministic for a fixed (corpus, thresholds, config).
// When output_dir is set, writes rows.csv, capacity_hist.csv, summary.json.
ExperimentResult corpus_experiment(const std::vector<CorpusImage>& corpus,
                                   const DetectionThresholds& thr,
                                   const ExperimentConfig& cfg);

struct SurveyRow {
  std::string image;
  int channel = 0;
  std::int64_t keys_seen = 0;
  std::int64_t usable_keys = 0;
  double alpha = 0;
  double capacity_fraction = 0;
};

struct SurveyResult {
  std::vector<SurveyRow> rows;
  double blocked_fraction = 0;        // images with no usable trace set at all
  double mean_capacity_fraction = 0;  // over all rows
};

// Direct sixth-order modification feasibility across a corpus; writes
// survey.csv when output_dir is set.
SurveyResult sixth_order_survey(const std::vector<CorpusImage>& corpus,
                                const std::string& output_dir);

}  // namespace stegmod
