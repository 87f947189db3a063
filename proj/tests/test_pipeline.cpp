#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stegmod/pipeline.hpp"
#include "stegmod/synth.hpp"

using namespace stegmod;

namespace {

DetectionThresholds loose_bands() {
  DetectionThresholds t;
  t.spa_lo = -0.03;
  t.spa_hi = 0.03;
  t.triples_lo = -0.06;
  t.triples_hi = 0.06;
  t.calibration_images = 0;
  return t;
}

KeyMaterial make_key(const std::string& pass) {
  KeyMaterial k;
  k.secret.assign(pass.begin(), pass.end());
  return k;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pipeline beats the pair attack at order 2") {
  PixelGrid cover = synth_natural_cover(256, 256, 1, 404);
  auto key = make_key("pipeline order two");
  PipelineConfig cfg = PipelineConfig::for_order(2);
  CHECK(!cfg.evade_triples);

  PipelineOutcome out = run_pipeline(cover, key, loose_bands(), cfg);
  CHECK(out.status == "ok");
  CHECK(out.alpha > 0.0);
  CHECK(out.message_bits > 0);
  REQUIRE(out.stego.same_shape(cover));
  REQUIRE(out.report.channels.size() == 1);
  CHECK(!out.report.channels[0].spa_flagged);

  // The report really describes the returned stego image.
  RateEstimate spa = spa_estimate(census(partition_tuples(out.stego, 0, 2)));
  CHECK(spa.alpha == out.report.channels[0].spa.alpha);

  // Accounting: header + length prefix + message per channel sample, and the
  // writes landing on embeddable pixels use the alpha budget to within the
  // 8-bit granularity of the message length. The header/capacity split only
  // depends on trace keys, which LSB writes never change, so the stego image
  // stands in for the modified cover here.
  const auto path = derive_path(key, cover.width, cover.height, cover.channels, 2);
  const auto flags = embeddable_flags(out.stego, path, 2, out.mask);
  const std::int64_t embeddable =
      std::count(flags.begin(), flags.end(), static_cast<std::uint8_t>(1));
  const std::int64_t header_spend =
      embeddable - message_capacity_bits(out.stego, key, 2, out.mask) - 32;
  // 16 tag slots (minus any that land on omitted tuples) plus one flag per
  // kept key: between 1 and the full conservative block
  CHECK(header_spend >= 1);
  CHECK(header_spend <= mask_block_bits(2));
  const double expected_bpc =
      static_cast<double>(header_spend + 32 + out.message_bits) /
      static_cast<double>(cover.sample_count());
  CHECK(out.bpc == doctest::Approx(expected_bpc).epsilon(1e-12));
  const auto budget =
      static_cast<std::int64_t>(std::floor(out.alpha * static_cast<double>(embeddable)));
  const std::int64_t spent = header_spend + 32 + out.message_bits;
  CHECK(budget - spent >= 0);
  CHECK(budget - spent < 8);

  // Same inputs, same stego.
  PipelineOutcome rerun = run_pipeline(cover, key, loose_bands(), cfg);
  CHECK(rerun.stego.samples == out.stego.samples);
  CHECK(rerun.alpha == out.alpha);
}

TEST_CASE("pipeline silences both attacks at order 3") {
  PixelGrid cover = synth_natural_cover(256, 256, 1, 505);
  auto key = make_key("pipeline order three");
  PipelineOutcome out = run_pipeline(cover, key, loose_bands(), PipelineConfig::for_order(3));
  REQUIRE(out.status == "ok");
  CHECK(!out.report.channels[0].spa_flagged);
  CHECK(!out.report.channels[0].triples_flagged);
  CHECK(out.bpc > 0.0);

  // The message round-trips out of the pipeline's stego.
  auto recovered = extract_message(out.stego, key, 3);
  CHECK(static_cast<std::int64_t>(recovered.size()) * 8 == out.message_bits);
}

TEST_CASE("fixed rate pins the pipeline") {
  PixelGrid cover = synth_natural_cover(192, 192, 1, 606);
  auto key = make_key("fixed rate");
  PipelineConfig cfg = PipelineConfig::for_order(3);
  cfg.fixed_alpha = 0.10;
  PipelineOutcome out = run_pipeline(cover, key, loose_bands(), cfg);
  CHECK(out.alpha <= 0.10 + 1e-12);
  if (out.tuning_steps == 0) CHECK(out.alpha == doctest::Approx(0.10));
}

TEST_CASE("corpus experiment is deterministic and writes its tables") {
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 6; ++i) {
    corpus.push_back({"img" + std::to_string(i) + ".pgm",
                      synth_natural_cover(128, 128, 1, 9000 + static_cast<unsigned>(i))});
  }
  const auto dir_a = std::filesystem::temp_directory_path() / "stegmod_exp_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "stegmod_exp_b";
  std::filesystem::create_directories(dir_a);
  std::filesystem::create_directories(dir_b);

  ExperimentConfig cfg;
  cfg.pipeline = PipelineConfig::for_order(3);
  cfg.pipeline.seed = 42;
  cfg.output_dir = dir_a.string();
  ExperimentResult a = corpus_experiment(corpus, loose_bands(), cfg);
  cfg.output_dir = dir_b.string();
  ExperimentResult b = corpus_experiment(corpus, loose_bands(), cfg);

  REQUIRE(a.rows.size() == corpus.size());
  REQUIRE(b.rows.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].image == b.rows[i].image);
    CHECK(a.rows[i].status == b.rows[i].status);
    CHECK(a.rows[i].alpha == b.rows[i].alpha);
    CHECK(a.rows[i].bpc == b.rows[i].bpc);
    CHECK(a.rows[i].spa_alpha == b.rows[i].spa_alpha);
  }
  CHECK(a.summary.images == 6);
  CHECK(a.summary.ok + a.summary.detected + a.summary.zero_capacity + a.summary.errored +
            a.summary.screened_out ==
        6);

  for (const char* name : {"rows.csv", "capacity_hist.csv", "summary.json"}) {
    CHECK(std::filesystem::exists(dir_a / name));
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  CHECK(summary_to_json(a.summary).contains("mean_bpc"));
}

TEST_CASE("screening removes covers the detectors already dislike") {
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 3; ++i)
    corpus.push_back({"clean" + std::to_string(i) + ".pgm",
                      synth_natural_cover(128, 128, 1, 500 + static_cast<unsigned>(i))});
  corpus.push_back(
      {"hot.pgm", lsb_embed_random(synth_natural_cover(128, 128, 1, 999), 0.4, 1000)});

  ExperimentConfig cfg;
  cfg.pipeline = PipelineConfig::for_order(2);
  ExperimentResult res = corpus_experiment(corpus, loose_bands(), cfg);
  CHECK(res.summary.screened_out == 1);
  bool found = false;
  for (const auto& row : res.rows)
    if (row.image == "hot.pgm") {
      found = true;
      CHECK(row.status == "screened-out");
    }
  CHECK(found);
}

TEST_CASE("sixth order survey marks hopeless covers") {
  PixelGrid flat(120, 30, 1);
  for (auto& s : flat.samples) s = 100;
  std::vector<CorpusImage> corpus = {{"flat.pgm", flat},
                                     {"noise.pgm", synth_noise_cover(120, 30, 1, 4)}};
  SurveyResult res = sixth_order_survey(corpus, "");
  REQUIRE(res.rows.size() == 2);
  // A constant image has one giant trace set sitting entirely in one subset:
  // no usable material at all.
  CHECK(res.rows[0].usable_keys == 0);
  CHECK(res.rows[0].capacity_fraction == 0.0);
  CHECK(res.blocked_fraction > 0.0);
  CHECK(res.blocked_fraction <= 1.0);
  CHECK(res.mean_capacity_fraction >= 0.0);
}
