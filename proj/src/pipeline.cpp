#include "stegmod/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stegmod/common.hpp"

namespace stegmod {
namespace {

constexpr double kMaxPlanAlpha = 0.99;  // the planner's pull-back needs alpha < 1

struct ChannelPlanning {
  std::vector<ModificationPlan> plans;  // 1 per channel (order 2) or 2 (order 3)
};

// Capacity selections per channel, a mask that merges the omitted keys of
// every channel, and the overall rate all channels can sustain.
struct CapacityDecision {
  double alpha = 0;
  OmittedMask mask;
  int omitted_keys = 0;
};

CapacityDecision decide_capacity(const PixelGrid& cover, int order) {
  CapacityDecision d;
  d.mask.order = order;
  d.alpha = 1.0;
  for (int ch = 0; ch < cover.channels; ++ch) {
    const ChannelCapacity cc = channel_capacity(cover, ch, order);
    d.alpha = std::min(d.alpha, cc.alpha);
    for (const auto& fam : cc.families) {
      const int f = fam.family == PlanFamily::trail_triplets ? 1 : 0;
      for (const TraceKey& k : fam.selection.omitted)
        d.mask.omitted[static_cast<std::size_t>(f)].insert(k);
    }
  }
  d.omitted_keys = static_cast<int>(d.mask.omitted[0].size() + d.mask.omitted[1].size());
  return d;
}

PixelGrid plan_and_apply(const PixelGrid& cover, int order, double alpha,
                         const OmittedMask& mask, std::uint64_t seed) {
  PixelGrid modified = cover;
  std::uint64_t state = seed;
  for (int ch = 0; ch < cover.channels; ++ch) {
    const std::uint64_t ch_seed = splitmix64(state);
    if (order == 2) {
      const auto seq = partition_tuples(cover, ch, 2);
      const std::vector<TraceKey> omitted(mask.omitted[0].begin(), mask.omitted[0].end());
      apply_plan(modified, plan_modification_2nd(seq, alpha, omitted, ch_seed));
    } else {
      const auto fams = partition_triplet_families(cover, ch);
      const std::vector<TraceKey> lead(mask.omitted[0].begin(), mask.omitted[0].end());
      const std::vector<TraceKey> trail(mask.omitted[1].begin(), mask.omitted[1].end());
      const auto plans = plan_modification_3rd(fams.first, fams.second, alpha, lead, trail, ch_seed);
      apply_plan(modified, plans.first);
      apply_plan(modified, plans.second);
    }
  }
  return modified;
}

std::vector<std::uint8_t> filler_payload(const KeyMaterial& key, std::int64_t bytes) {
  StreamCipher c(key.secret, "payload");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(bytes));
  for (auto& b : out) b = c.next_byte();
  return out;
}

bool tuning_flagged(const DetectionReport& rep, const PipelineConfig& cfg) {
  for (const auto& ch : rep.channels) {
    if (cfg.evade_spa && ch.spa_flagged) return true;
    if (cfg.evade_triples && ch.triples_flagged) return true;
  }
  return false;
}

double percentile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0;
  if (v.size() == 1) return v[0];
  const double rank = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(rank);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (rank - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail("cannot write " + p.string());
  out << content;
  if (!out) fail("short write to " + p.string());
}

}  // namespace

PipelineOutcome run_pipeline(const PixelGrid& cover, const KeyMaterial& key,
                             const DetectionThresholds& thr, const PipelineConfig& cfg) {
  if (cfg.order != 2 && cfg.order != 3) fail("pipeline order must be 2 or 3");
  PipelineOutcome out;
  const CapacityDecision cap = decide_capacity(cover, cfg.order);
  out.mask = cap.mask;
  out.omitted_keys = cap.omitted_keys;

  double alpha = std::min(cap.alpha, kMaxPlanAlpha);
  if (cfg.fixed_alpha >= 0) alpha = std::min(alpha, cfg.fixed_alpha);

  const double total_samples = static_cast<double>(cover.sample_count());

  for (int step = 0;; ++step) {
    out.tuning_steps = step;
    out.alpha = alpha;
    if (alpha <= 0) {
      out.status = "zero-capacity";
      return out;
    }

    PixelGrid modified;
    try {
      modified = plan_and_apply(cover, cfg.order, alpha, cap.mask, cfg.seed);
    } catch (const Error&) {
      out.status = "infeasible";
      return out;
    }

    const auto path = derive_path(key, cover.width, cover.height, cover.channels, cfg.order);
    const auto flags = embeddable_flags(modified, path, cfg.order, cap.mask);
    const std::int64_t embeddable =
        std::count(flags.begin(), flags.end(), static_cast<std::uint8_t>(1));
    const std::int64_t budget =
        static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(embeddable)));
    // size the payload so the writes that land on embeddable pixels use the
    // rate budget exactly: the plan's restoration assumes those pixels carry
    // fresh bits at rate alpha, and undershooting leaves its distortion behind
    const std::int64_t capacity = message_capacity_bits(modified, key, cfg.order, cap.mask);
    const std::int64_t header_spend = embeddable - capacity - 32;
    const std::int64_t payload_bytes = (budget - header_spend - 32) / 8;
    if (payload_bytes < 0) {
      out.status = "zero-capacity";
      return out;
    }

    const auto message = filler_payload(key, payload_bytes);
    try {
      out.stego = embed_message(modified, key, message, cfg.order, cap.mask);
    } catch (const Error&) {
      // the image cannot even seat the mask block
      out.status = "infeasible";
      return out;
    }
    out.message_bits = 8 * payload_bytes;
    out.bpc = static_cast<double>(header_spend + 32 + out.message_bits) / total_samples;
    out.report = detect(out.stego, thr);

    if (!tuning_flagged(out.report, cfg)) {
      out.status = "ok";
      return out;
    }
    const double next = alpha * 0.9;
    if (step >= cfg.max_tuning_steps || next < cfg.alpha_floor) {
      out.status = "detected-at-floor";
      return out;
    }
    alpha = next;
  }
}

nlohmann::json summary_to_json(const ExperimentSummary& s) {
  return {{"images", s.images},
          {"screened_out", s.screened_out},
          {"ok", s.ok},
          {"detected", s.detected},
          {"zero_capacity", s.zero_capacity},
          {"errored", s.errored},
          {"mean_bpc", s.mean_bpc},
          {"median_bpc", s.median_bpc},
          {"p10_bpc", s.p10_bpc},
          {"p90_bpc", s.p90_bpc},
          {"mean_alpha", s.mean_alpha},
          {"evasion_rate", s.evasion_rate}};
}

ExperimentResult corpus_experiment(const std::vector<CorpusImage>& corpus,
                                   const DetectionThresholds& thr,
                                   const ExperimentConfig& cfg) {
  if (corpus.empty()) fail("corpus experiment needs at least one image");
  ExperimentResult res;
  res.summary.images = static_cast<int>(corpus.size());
  std::vector<std::vector<ExperimentRow>> per_image(corpus.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(corpus.size()); ++idx) {
    const CorpusImage& img = corpus[static_cast<std::size_t>(idx)];
    std::vector<ExperimentRow> rows;
    try {
      const DetectionReport cover_rep = detect(img.grid, thr);
      if (cfg.screen_covers && cover_rep.flagged) {
        ExperimentRow r;
        r.image = img.name;
        r.channel = -1;
        r.status = "screened-out";
        rows.push_back(r);
      } else {
        std::uint64_t key_state = cfg.pipeline.seed ^ fnv1a64(img.name);
        KeyMaterial key;
        for (int b = 0; b < 2; ++b) {
          const std::uint64_t w = splitmix64(key_state);
          for (int k = 0; k < 8; ++k)
            key.secret.push_back(static_cast<std::uint8_t>(w >> (8 * k)));
        }
        PipelineConfig pc = cfg.pipeline;
        pc.seed = splitmix64(key_state);
        const PipelineOutcome po = run_pipeline(img.grid, key, thr, pc);
        for (int ch = 0; ch < img.grid.channels; ++ch) {
          ExperimentRow r;
          r.image = img.name;
          r.channel = ch;
          r.status = po.status;
          r.alpha = po.alpha;
          r.bpc = po.bpc;
          r.capacity_alpha = po.alpha;
          r.omitted_keys = po.omitted_keys;
          r.message_bits = po.message_bits;
          r.tuning_steps = po.tuning_steps;
          if (po.status == "ok" || po.status == "detected-at-floor") {
            const auto& cr = po.report.channels[static_cast<std::size_t>(ch)];
            r.spa_alpha = cr.spa.alpha;
            r.spa_flagged = cr.spa_flagged;
            r.triples_alpha = cr.triples.alpha;
            r.triples_flagged = cr.triples_flagged;
            r.chi2_p = cr.chi2.p_value;
          }
          rows.push_back(r);
        }
      }
    } catch (const std::exception& e) {
      ExperimentRow r;
      r.image = img.name;
      r.channel = -1;
      r.status = std::string("error: ") + e.what();
      rows.push_back(r);
    }
    per_image[static_cast<std::size_t>(idx)] = std::move(rows);
  }

  // image-level tallies (an image's rows share one pipeline outcome)
  std::vector<double> bpcs, alphas;
  for (const auto& rows : per_image) {
    if (rows.empty()) continue;
    const ExperimentRow& first = rows[0];
    if (first.status == "ok") {
      ++res.summary.ok;
      bpcs.push_back(first.bpc);
      alphas.push_back(first.alpha);
    } else if (first.status == "screened-out") {
      ++res.summary.screened_out;
    } else if (first.status == "detected-at-floor") {
      ++res.summary.detected;
    } else if (first.status == "zero-capacity" || first.status == "infeasible") {
      ++res.summary.zero_capacity;
    } else {
      ++res.summary.errored;
    }
  }
  for (auto& rows : per_image)
    for (auto& r : rows) res.rows.push_back(std::move(r));
  std::sort(bpcs.begin(), bpcs.end());
  if (!bpcs.empty()) {
    double sum = 0;
    for (double b : bpcs) sum += b;
    res.summary.mean_bpc = sum / static_cast<double>(bpcs.size());
    res.summary.median_bpc = percentile_sorted(bpcs, 50);
    res.summary.p10_bpc = percentile_sorted(bpcs, 10);
    res.summary.p90_bpc = percentile_sorted(bpcs, 90);
  }
  if (!alphas.empty()) {
    double sum = 0;
    for (double a : alphas) sum += a;
    res.summary.mean_alpha = sum / static_cast<double>(alphas.size());
  }
  if (res.summary.ok + res.summary.detected > 0)
    res.summary.evasion_rate = static_cast<double>(res.summary.ok) /
                               static_cast<double>(res.summary.ok + res.summary.detected);

  if (!cfg.output_dir.empty()) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    std::string csv =
        "image,channel,status,order,alpha,bpc,capacity_alpha,omitted_keys,message_bits,"
        "tuning_steps,spa_alpha,spa_flagged,triples_alpha,triples_flagged,chi2_p\n";
    for (const auto& r : res.rows) {
      csv += r.image + ',' + std::to_string(r.channel) + ',' + r.status + ',' +
             std::to_string(cfg.pipeline.order) + ',' + fmt(r.alpha) + ',' + fmt(r.bpc) + ',' +
             fmt(r.capacity_alpha) + ',' + std::to_string(r.omitted_keys) + ',' +
             std::to_string(r.message_bits) + ',' + std::to_string(r.tuning_steps) + ',' +
             fmt(r.spa_alpha) + ',' + (r.spa_flagged ? "1" : "0") + ',' + fmt(r.triples_alpha) +
             ',' + (r.triples_flagged ? "1" : "0") + ',' + fmt(r.chi2_p) + '\n';
    }
    write_text_file(dir / "rows.csv", csv);

    std::array<int, 100> hist{};
    for (double b : bpcs) {
      const int bin = std::clamp(static_cast<int>(b * 100.0), 0, 99);
      ++hist[static_cast<std::size_t>(bin)];
    }
    std::string hist_csv = "bpc_lo,bpc_hi,images\n";
    for (int k = 0; k < 100; ++k)
      hist_csv += fmt(k / 100.0) + ',' + fmt((k + 1) / 100.0) + ',' +
                  std::to_string(hist[static_cast<std::size_t>(k)]) + '\n';
    write_text_file(dir / "capacity_hist.csv", hist_csv);

    write_text_file(dir / "summary.json", summary_to_json(res.summary).dump(2) + "\n");
  }
  return res;
}

SurveyResult sixth_order_survey(const std::vector<CorpusImage>& corpus,
                                const std::string& output_dir) {
  if (corpus.empty()) fail("survey needs at least one image");
  SurveyResult res;
  int blocked = 0;
  double fraction_sum = 0;
  for (const auto& img : corpus) {
    std::int64_t usable_total = 0;
    for (int ch = 0; ch < img.grid.channels; ++ch) {
      const auto seq = partition_tuples(img.grid, ch, 6);
      const TupleCensus c6 = census(seq);
      const auto samples =
          static_cast<std::int64_t>(img.grid.sample_count()) / img.grid.channels;
      const SixthOrderReport rep = feasibility_report_6th(c6, samples);
      SurveyRow row;
      row.image = img.name;
      row.channel = ch;
      row.keys_seen = rep.keys_seen;
      row.usable_keys = static_cast<std::int64_t>(rep.usable_keys.size());
      row.alpha = rep.alpha;
      row.capacity_fraction = rep.capacity_fraction;
      usable_total += row.usable_keys;
      fraction_sum += row.capacity_fraction;
      res.rows.push_back(row);
    }
    if (usable_total == 0) ++blocked;
  }
  res.blocked_fraction = static_cast<double>(blocked) / static_cast<double>(corpus.size());
  res.mean_capacity_fraction = fraction_sum / static_cast<double>(res.rows.size());

  if (!output_dir.empty()) {
    const std::filesystem::path dir(output_dir);
    std::filesystem::create_directories(dir);
    std::string csv = "image,channel,keys_seen,usable_keys,alpha,capacity_fraction\n";
    for (const auto& r : res.rows)
      csv += r.image + ',' + std::to_string(r.channel) + ',' + std::to_string(r.keys_seen) +
             ',' + std::to_string(r.usable_keys) + ',' + fmt(r.alpha) + ',' +
             fmt(r.capacity_fraction) + '\n';
    write_text_file(dir / "survey.csv", csv);
  }
  return res;
}

}  // namespace stegmod
