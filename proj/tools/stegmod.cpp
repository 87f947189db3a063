// Command-line front end: analysis, cover modification, keyed embedding and
// extraction, corpus experiments.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stegmod/cover_mod.hpp"
#include "stegmod/detectors.hpp"
#include "stegmod/image_io.hpp"
#include "stegmod/pipeline.hpp"
#include "stegmod/stego_codec.hpp"
#include "stegmod/synth.hpp"

namespace {

using nlohmann::json;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) stegmod::fail("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) stegmod::fail("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) stegmod::fail("short write to " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) stegmod::fail("cannot write " + path);
  out << text;
}

stegmod::KeyMaterial key_from_options(const std::string& key_file, const std::string& pass) {
  stegmod::KeyMaterial key;
  if (!key_file.empty() && !pass.empty())
    stegmod::fail("give either --key-file or --passphrase, not both");
  if (!key_file.empty()) {
    key.secret = read_file(key_file);
  } else if (!pass.empty()) {
    key.secret.assign(pass.begin(), pass.end());
  } else {
    stegmod::fail("a key is required (--key-file or --passphrase)");
  }
  return key;
}

std::vector<stegmod::CorpusImage> load_corpus(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (stegmod::format_from_path(e.path().string())) paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<stegmod::CorpusImage> corpus;
  for (const auto& p : paths) {
    try {
      corpus.push_back({std::filesystem::path(p).filename().string(),
                        stegmod::load_image_file(p)});
    } catch (const std::exception& e) {
      std::cerr << "skipping " << p << ": " << e.what() << "\n";
    }
  }
  if (corpus.empty()) stegmod::fail("no readable images in " + dir);
  return corpus;
}

json analyze_image(const stegmod::PixelGrid& grid,
                   const std::optional<stegmod::DetectionThresholds>& thr) {
  json channels = json::array();
  bool any_flagged = false;
  for (int ch = 0; ch < grid.channels; ++ch) {
    const auto spa = stegmod::spa_estimate(stegmod::census(stegmod::partition_tuples(grid, ch, 2)));
    const auto tri =
        stegmod::triples_estimate(stegmod::census(stegmod::partition_tuples(grid, ch, 3)));
    const auto chi = stegmod::histogram_chi2(grid, ch);
    json row = {{"channel", ch},
                {"spa_alpha", spa.alpha},
                {"triples_alpha", tri.alpha},
                {"chi2_p", chi.p_value}};
    if (thr) {
      const bool spa_f = spa.alpha < thr->spa_lo || spa.alpha > thr->spa_hi;
      const bool tri_f = tri.alpha < thr->triples_lo || tri.alpha > thr->triples_hi;
      row["spa_flagged"] = spa_f;
      row["triples_flagged"] = tri_f;
      row["flagged"] = spa_f || tri_f;
      any_flagged = any_flagged || spa_f || tri_f;
    }
    channels.push_back(row);
  }
  json out = {{"width", grid.width},
              {"height", grid.height},
              {"channels", channels}};
  if (thr) out["flagged"] = any_flagged;
  return out;
}

// Bundle written by `modify` and consumed by `embed`: enough to rebuild the
// omitted-key mask and to know the rate the cover was prepared for.
json modify_bundle(int order, double alpha, const stegmod::OmittedMask& mask,
                   const std::vector<json>& channel_plans) {
  json omitted = json::array();
  for (int f = 0; f < 2; ++f)
    for (const auto& k : mask.omitted[static_cast<std::size_t>(f)])
      omitted.push_back({{"family", f}, {"key", k.str()}});
  return {{"order", order},
          {"alpha", alpha},
          {"omitted", omitted},
          {"channel_plans", channel_plans}};
}

stegmod::OmittedMask mask_from_bundle(const json& j) {
  stegmod::OmittedMask mask;
  mask.order = j.at("order").get<int>();
  for (const auto& e : j.at("omitted")) {
    const int f = e.at("family").get<int>();
    if (f < 0 || f > 1) stegmod::fail("bad family in plan bundle");
    mask.omitted[static_cast<std::size_t>(f)].insert(
        stegmod::TraceKey::parse(e.at("key").get<std::string>()));
  }
  return mask;
}

int run(int argc, char** argv) {
  CLI::App app{"trace-set steganography toolkit"};
  app.require_subcommand(1);

  // ---- analyze ----
  std::string an_image, an_thresholds, an_out;
  auto* analyze = app.add_subcommand("analyze", "estimate embedding rates of an image");
  analyze->add_option("image", an_image)->required();
  analyze->add_option("--thresholds", an_thresholds, "calibrated thresholds JSON");
  analyze->add_option("--out", an_out, "write the report here instead of stdout");

  // ---- modify ----
  std::string mo_cover, mo_out, mo_plan;
  int mo_order = 3;
  double mo_alpha = -1;
  std::uint64_t mo_seed = 1;
  auto* modify = app.add_subcommand("modify", "prepare a cover for census-preserving embedding");
  modify->add_option("cover", mo_cover)->required();
  modify->add_option("--order", mo_order)->check(CLI::IsMember({2, 3}));
  modify->add_option("--alpha", mo_alpha, "target rate; default: maximum feasible")
      ->check(CLI::Range(0.0, 1.0));
  modify->add_option("--seed", mo_seed);
  modify->add_option("--out", mo_out, "modified cover image")->required();
  modify->add_option("--plan", mo_plan, "plan bundle JSON")->required();

  // ---- embed ----
  std::string em_cover, em_out, em_plan, em_msg, em_key, em_pass;
  auto* embed = app.add_subcommand("embed", "embed a message into a modified cover");
  embed->add_option("cover", em_cover, "modified cover image")->required();
  embed->add_option("--plan", em_plan, "plan bundle from `modify`")->required();
  embed->add_option("--message", em_msg, "message file")->required();
  embed->add_option("--key-file", em_key);
  embed->add_option("--passphrase", em_pass);
  embed->add_option("--out", em_out, "stego image (lossless format)")->required();

  // ---- extract ----
  std::string ex_stego, ex_out, ex_key, ex_pass;
  int ex_order = 3;
  auto* extract = app.add_subcommand("extract", "recover a message from a stego image");
  extract->add_option("stego", ex_stego)->required();
  extract->add_option("--order", ex_order)->check(CLI::IsMember({2, 3}));
  extract->add_option("--key-file", ex_key);
  extract->add_option("--passphrase", ex_pass);
  extract->add_option("--out", ex_out, "message file")->required();

  // ---- calibrate ----
  std::string ca_dir, ca_out;
  auto* calibrate = app.add_subcommand("calibrate", "derive detector thresholds from covers");
  calibrate->add_option("corpus", ca_dir, "directory of cover images")->required();
  calibrate->add_option("--out", ca_out, "thresholds JSON")->required();

  // ---- bench ----
  std::string be_dir, be_thr, be_out;
  int be_order = 3;
  double be_alpha = -1;
  std::uint64_t be_seed = 1;
  bool be_no_screen = false;
  auto* bench = app.add_subcommand("bench", "run the full pipeline over a corpus");
  bench->add_option("corpus", be_dir)->required();
  bench->add_option("--thresholds", be_thr, "calibrated thresholds JSON")->required();
  bench->add_option("--order", be_order)->check(CLI::IsMember({2, 3}));
  bench->add_option("--alpha", be_alpha, "fixed rate; default: per-image maximum")
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--seed", be_seed);
  bench->add_option("--out", be_out, "output directory for CSV/JSON")->required();
  bench->add_flag("--no-screen", be_no_screen, "keep covers the detectors flag");

  // ---- survey6 ----
  std::string s6_dir, s6_out;
  auto* survey6 = app.add_subcommand("survey6", "sixth-order modification feasibility survey");
  survey6->add_option("corpus", s6_dir)->required();
  survey6->add_option("--out", s6_out, "output directory");

  // ---- synth ----
  std::string sy_kind = "natural", sy_out;
  int sy_w = 512, sy_h = 512, sy_ch = 1;
  double sy_scale = 0.8;
  std::uint64_t sy_seed = 1;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cover image");
  synth->add_option("--kind", sy_kind)->check(CLI::IsMember({"natural", "symmetric", "noise"}));
  synth->add_option("--width", sy_w);
  synth->add_option("--height", sy_h);
  synth->add_option("--channels", sy_ch)->check(CLI::IsMember({1, 3}));
  synth->add_option("--seed", sy_seed);
  synth->add_option("--step-scale", sy_scale);
  synth->add_option("--out", sy_out)->required();

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) {
    const auto grid = stegmod::load_image_file(an_image);
    std::optional<stegmod::DetectionThresholds> thr;
    if (!an_thresholds.empty())
      thr = stegmod::thresholds_from_json(json::parse(read_file(an_thresholds)));
    const json report = analyze_image(grid, thr);
    if (an_out.empty())
      std::cout << report.dump(2) << "\n";
    else
      write_text(an_out, report.dump(2) + "\n");
    return 0;
  }

  if (modify->parsed()) {
    const auto cover = stegmod::load_image_file(mo_cover);
    stegmod::OmittedMask mask;
    mask.order = mo_order;
    double alpha = 1.0;
    for (int ch = 0; ch < cover.channels; ++ch) {
      const auto cc = stegmod::channel_capacity(cover, ch, mo_order);
      alpha = std::min(alpha, cc.alpha);
      for (const auto& fam : cc.families) {
        const int f = fam.family == stegmod::PlanFamily::trail_triplets ? 1 : 0;
        for (const auto& k : fam.selection.omitted)
          mask.omitted[static_cast<std::size_t>(f)].insert(k);
      }
    }
    if (mo_alpha >= 0) alpha = std::min(alpha, mo_alpha);
    alpha = std::min(alpha, 0.99);

    stegmod::PixelGrid modified = cover;
    std::vector<json> channel_plans;
    std::uint64_t state = mo_seed;
    for (int ch = 0; ch < cover.channels; ++ch) {
      const std::uint64_t ch_seed = stegmod::splitmix64(state);
      if (mo_order == 2) {
        const auto seq = stegmod::partition_tuples(cover, ch, 2);
        const std::vector<stegmod::TraceKey> omit(mask.omitted[0].begin(), mask.omitted[0].end());
        const auto plan = stegmod::plan_modification_2nd(seq, alpha, omit, ch_seed);
        stegmod::apply_plan(modified, plan);
        channel_plans.push_back(stegmod::plan_to_json(plan));
      } else {
        const auto fams = stegmod::partition_triplet_families(cover, ch);
        const std::vector<stegmod::TraceKey> lead(mask.omitted[0].begin(), mask.omitted[0].end());
        const std::vector<stegmod::TraceKey> trail(mask.omitted[1].begin(), mask.omitted[1].end());
        const auto plans =
            stegmod::plan_modification_3rd(fams.first, fams.second, alpha, lead, trail, ch_seed);
        stegmod::apply_plan(modified, plans.first);
        stegmod::apply_plan(modified, plans.second);
        channel_plans.push_back(stegmod::plan_to_json(plans.first));
        channel_plans.push_back(stegmod::plan_to_json(plans.second));
      }
    }
    stegmod::write_image_file(modified, mo_out);
    write_text(mo_plan, modify_bundle(mo_order, alpha, mask, channel_plans).dump() + "\n");
    std::cout << "alpha " << alpha << ", omitted keys "
              << mask.omitted[0].size() + mask.omitted[1].size() << "\n";
    return 0;
  }

  if (embed->parsed()) {
    const auto cover = stegmod::load_image_file(em_cover);
    const json bundle = json::parse(read_file(em_plan));
    const auto mask = mask_from_bundle(bundle);
    const int order = bundle.at("order").get<int>();
    const double alpha = bundle.at("alpha").get<double>();
    const auto key = key_from_options(em_key, em_pass);
    const auto message = read_file(em_msg);

    const auto path = stegmod::derive_path(key, cover.width, cover.height, cover.channels, order);
    const auto flags = stegmod::embeddable_flags(cover, path, order, mask);
    const auto embeddable =
        std::count(flags.begin(), flags.end(), static_cast<std::uint8_t>(1));
    const auto budget = static_cast<std::int64_t>(alpha * static_cast<double>(embeddable));
    const auto capacity = stegmod::message_capacity_bits(cover, key, order, mask);
    const std::int64_t need = (embeddable - capacity) + 8 * static_cast<std::int64_t>(message.size());
    if (need > budget)
      stegmod::fail("message needs " + std::to_string(need) + " bits but the plan's rate admits " +
                    std::to_string(budget));
    const auto stego = stegmod::embed_message(cover, key, message, order, mask);
    if (stegmod::format_from_path(em_out) == stegmod::ImageFormat::bmp ||
        stegmod::format_from_path(em_out) == stegmod::ImageFormat::png ||
        stegmod::format_from_path(em_out) == stegmod::ImageFormat::pgm ||
        stegmod::format_from_path(em_out) == stegmod::ImageFormat::ppm) {
      stegmod::write_image_file(stego, em_out);
    } else {
      stegmod::fail("stego output must be a lossless raster (.pgm/.ppm/.png/.bmp)");
    }
    std::cout << "embedded " << 8 * message.size() << " bits\n";
    return 0;
  }

  if (extract->parsed()) {
    const auto stego = stegmod::load_image_file(ex_stego);
    const auto key = key_from_options(ex_key, ex_pass);
    const auto message = stegmod::extract_message(stego, key, ex_order);
    write_file(ex_out, message);
    std::cout << "extracted " << 8 * message.size() << " bits\n";
    return 0;
  }

  if (calibrate->parsed()) {
    const auto corpus = load_corpus(ca_dir);
    std::vector<const stegmod::PixelGrid*> covers;
    covers.reserve(corpus.size());
    for (const auto& img : corpus) covers.push_back(&img.grid);
    const auto thr = stegmod::calibrate_thresholds(covers);
    write_text(ca_out, stegmod::thresholds_to_json(thr).dump(2) + "\n");
    std::cout << "calibrated on " << corpus.size() << " covers\n";
    return 0;
  }

  if (bench->parsed()) {
    const auto corpus = load_corpus(be_dir);
    const auto thr = stegmod::thresholds_from_json(json::parse(read_file(be_thr)));
    stegmod::ExperimentConfig cfg;
    cfg.pipeline = stegmod::PipelineConfig::for_order(be_order);
    cfg.pipeline.fixed_alpha = be_alpha;
    cfg.pipeline.seed = be_seed;
    cfg.screen_covers = !be_no_screen;
    cfg.output_dir = be_out;
    const auto res = stegmod::corpus_experiment(corpus, thr, cfg);
    std::cout << stegmod::summary_to_json(res.summary).dump(2) << "\n";
    return 0;
  }

  if (survey6->parsed()) {
    const auto corpus = load_corpus(s6_dir);
    const auto res = stegmod::sixth_order_survey(corpus, s6_out);
    json out = {{"images", corpus.size()},
                {"blocked_fraction", res.blocked_fraction},
                {"mean_capacity_fraction", res.mean_capacity_fraction}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (synth->parsed()) {
    stegmod::PixelGrid grid;
    if (sy_kind == "natural")
      grid = stegmod::synth_natural_cover(sy_w, sy_h, sy_ch, sy_seed, sy_scale);
    else if (sy_kind == "symmetric")
      grid = stegmod::synth_symmetric_cover(sy_w, sy_h, sy_ch, sy_seed, sy_scale);
    else
      grid = stegmod::synth_noise_cover(sy_w, sy_h, sy_ch, sy_seed);
    stegmod::write_image_file(grid, sy_out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
