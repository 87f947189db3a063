#include "stegmod/cover_mod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "stegmod/common.hpp"

namespace stegmod {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Applies the inverse flip kernel to an integer count vector.
std::vector<double> pull_back(const std::vector<std::int64_t>& counts, int order, double p) {
  const KernelMatrix k = transition_kernel(order, p);
  const int dim = k.dim;
  std::vector<double> t(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < dim; ++i) {
    double acc = 0;
    for (int j = 0; j < dim; ++j)
      acc += k.inv_at(i, j) * static_cast<double>(counts[static_cast<std::size_t>(j)]);
    t[static_cast<std::size_t>(i)] = acc;
  }
  return t;
}

// Round-off floor for capacity decisions. Inverse-kernel entries grow like
// gamma^order, so genuine negatives must be separated from amplified noise.
double noise_floor(double alpha, int order, double total) {
  const double gamma = 1.0 / std::max(1e-12, 1.0 - alpha);
  return 1e-11 * (1.0 + total) * std::pow(std::max(gamma, 1.0), order);
}

std::array<std::int64_t, 4> round_targets(const std::array<double, 4>& t, std::int64_t total) {
  std::array<std::int64_t, 4> out{};
  std::array<double, 4> frac{};
  std::int64_t base = 0;
  for (int j = 0; j < 4; ++j) {
    const double v = std::max(0.0, t[static_cast<std::size_t>(j)]);
    const double fl = std::floor(v);
    out[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(fl);
    frac[static_cast<std::size_t>(j)] = v - fl;
    base += out[static_cast<std::size_t>(j)];
  }
  std::int64_t rem = total - base;
  std::array<int, 4> idx{0, 1, 2, 3};
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (frac[static_cast<std::size_t>(a)] != frac[static_cast<std::size_t>(b)])
      return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
    return a < b;
  });
  for (int r = 0; rem > 0; ++r, --rem) out[static_cast<std::size_t>(idx[static_cast<std::size_t>(r % 4)])] += 1;
  return out;
}

}  // namespace

int family_order(PlanFamily f) { return f == PlanFamily::pairs ? 2 : 3; }

std::array<int, 2> member_slots(PlanFamily f) {
  switch (f) {
    case PlanFamily::pairs:
    case PlanFamily::lead_triplets:
      return {0, 1};
    case PlanFamily::trail_triplets:
      return {1, 2};
  }
  fail("unknown plan family");
}

int member_of_subset(PlanFamily f, int subset) {
  switch (f) {
    case PlanFamily::pairs:
      return subset & 3;
    case PlanFamily::lead_triplets:
      return subset & 3;
    case PlanFamily::trail_triplets:
      return (subset >> 1) & 3;
  }
  fail("unknown plan family");
}

int group_of_subset(PlanFamily f, int subset) {
  switch (f) {
    case PlanFamily::pairs:
      return 0;
    case PlanFamily::lead_triplets:
      return (subset >> 2) & 1;
    case PlanFamily::trail_triplets:
      return subset & 1;
  }
  fail("unknown plan family");
}

const char* family_name(PlanFamily f) {
  switch (f) {
    case PlanFamily::pairs:
      return "pairs";
    case PlanFamily::lead_triplets:
      return "triplets-lead";
    case PlanFamily::trail_triplets:
      return "triplets-trail";
  }
  fail("unknown plan family");
}

PlanFamily family_from_name(const std::string& s) {
  if (s == "pairs") return PlanFamily::pairs;
  if (s == "triplets-lead") return PlanFamily::lead_triplets;
  if (s == "triplets-trail") return PlanFamily::trail_triplets;
  fail("unknown plan family name: " + s);
}

std::string UnitKey::str() const { return key.str() + "|g" + std::to_string(group); }

std::map<TraceKey, std::vector<double>> target_census(const TupleCensus& c, double alpha) {
  if (alpha < 0 || alpha >= 1) fail("target census needs a rate in [0, 1)");
  std::map<TraceKey, std::vector<double>> out;
  for (const auto& [key, counts] : c.counts) out.emplace(key, pull_back(counts, c.order, alpha / 2));
  return out;
}

double trace_set_capacity(const std::vector<std::int64_t>& counts, int order) {
  if (order < 2 || order > 6) fail("trace set capacity: unsupported order");
  const auto dim = static_cast<std::size_t>(1) << order;
  if (counts.size() != dim) fail("trace set capacity: count vector has wrong length");
  double total = 0;
  bool any_empty = false;
  for (std::int64_t c : counts) {
    if (c < 0) fail("trace set capacity: negative count");
    total += static_cast<double>(c);
    any_empty = any_empty || c == 0;
  }
  if (total == 0) return kInf;

  auto worst = [&](double alpha) {
    const auto t = pull_back(counts, order, alpha / 2);
    return *std::min_element(t.begin(), t.end());
  };
  // An empty subset that must donate caps the rate at exactly zero.
  if (any_empty && worst(1e-6) < -noise_floor(1e-6, order, total)) return 0.0;

  constexpr int kSteps = 64;
  constexpr double kTop = 1.0 - 1e-9;
  double lo = 0.0;
  double hi = -1.0;
  for (int k = 1; k <= kSteps; ++k) {
    const double a = std::min(static_cast<double>(k) / kSteps, kTop);
    if (worst(a) < -noise_floor(a, order, total)) {
      hi = a;
      break;
    }
    lo = a;
  }
  if (hi < 0) return kInf;
  for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (worst(mid) < -noise_floor(mid, order, total))
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

RateSelection select_max_rate(const std::vector<KeyCapacity>& keys, double n_samples) {
  if (n_samples <= 0) fail("rate selection needs a positive sample budget");
  if (keys.empty()) fail("rate selection: no trace sets available");
  std::vector<double> candidates;
  candidates.reserve(keys.size());
  for (const auto& k : keys) candidates.push_back(k.alpha);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_alpha = 0, best_score = -1;
  for (double a : candidates) {
    double omitted = 0;
    for (const auto& k : keys)
      if (k.alpha < a) omitted += static_cast<double>(k.size);
    const double score = std::min(a, 1.0) * (1.0 - omitted / n_samples);
    // ties go to the lower rate: same payload, fewer changes
    if (score > best_score + 1e-15) {
      best_score = score;
      best_alpha = a;
    }
  }
  if (best_score <= 0) fail("zero embedding capacity: every trace set is exhausted");

  RateSelection sel;
  sel.alpha = std::min(best_alpha, 1.0);
  sel.score = best_score;
  for (const auto& k : keys)
    if (k.alpha < best_alpha) sel.omitted.push_back(k.key);
  std::sort(sel.omitted.begin(), sel.omitted.end());
  return sel;
}

namespace {

bool key_in_range(const TraceKey& k, int lo, int hi) {
  for (int i = 0; i < k.len; ++i)
    if (k.m[static_cast<std::size_t>(i)] < lo || k.m[static_cast<std::size_t>(i)] > hi) return false;
  return true;
}

ModificationPlan make_plan(const TupleSequence& seq, PlanFamily fam, double alpha,
                           const std::vector<TraceKey>& omitted, std::uint64_t seed) {
  const int order = family_order(fam);
  if (seq.order != order) fail("plan family does not match tuple order");
  if (alpha < 0 || alpha >= 1) fail("modification plan needs a rate in [0, 1)");

  ModificationPlan plan;
  plan.family = fam;
  plan.chosen_alpha = alpha;
  plan.omitted_keys = omitted;
  std::sort(plan.omitted_keys.begin(), plan.omitted_keys.end());
  const std::set<TraceKey> skip(omitted.begin(), omitted.end());

  // bucket tuple ids by unit and member
  std::map<UnitKey, std::array<std::vector<std::int64_t>, 4>> buckets;
  for (std::size_t i = 0; i < seq.count; ++i) {
    const auto vals = seq.val(i);
    const TraceKey key = classify_key(vals);
    if (!key_in_range(key, -5, 5) || skip.count(key)) continue;
    const int subset = classify_subset(vals);
    auto& unit = buckets[UnitKey{key, group_of_subset(fam, subset)}];
    unit[static_cast<std::size_t>(member_of_subset(fam, subset))].push_back(static_cast<std::int64_t>(i));
  }

  std::mt19937_64 rng(seed ^ fnv1a64(family_name(fam)));
  const KernelMatrix kern = transition_kernel(2, alpha / 2);
  for (auto& [unit, members] : buckets) {
    std::array<std::int64_t, 4> n{};
    double total = 0;
    for (int j = 0; j < 4; ++j) {
      n[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(members[static_cast<std::size_t>(j)].size());
      total += static_cast<double>(n[static_cast<std::size_t>(j)]);
    }
    std::array<double, 4> t{};
    for (int i = 0; i < 4; ++i) {
      double acc = 0;
      for (int j = 0; j < 4; ++j) acc += kern.inv_at(i, j) * static_cast<double>(n[static_cast<std::size_t>(j)]);
      t[static_cast<std::size_t>(i)] = acc;
      if (acc < -1e-7 * (1.0 + total))
        fail("infeasible modification plan: unit " + unit.str() +
             " runs a member dry at rate " + std::to_string(alpha));
    }
    plan.targets.emplace(unit, t);

    const auto target = round_targets(t, n[0] + n[1] + n[2] + n[3]);
    std::array<std::int64_t, 4> deficit{};
    bool any = false;
    for (int j = 0; j < 4; ++j) {
      deficit[static_cast<std::size_t>(j)] = target[static_cast<std::size_t>(j)] - n[static_cast<std::size_t>(j)];
      any = any || deficit[static_cast<std::size_t>(j)] != 0;
    }
    if (!any) continue;

    // donors hand out a random sample of their tuples
    for (int j = 0; j < 4; ++j)
      if (deficit[static_cast<std::size_t>(j)] < 0) shuffle_vec(rng, members[static_cast<std::size_t>(j)]);

    while (true) {
      int recv = -1, donor = -1;
      for (int j = 0; j < 4; ++j) {
        if (deficit[static_cast<std::size_t>(j)] > 0 &&
            (recv < 0 || deficit[static_cast<std::size_t>(j)] > deficit[static_cast<std::size_t>(recv)]))
          recv = j;
        if (deficit[static_cast<std::size_t>(j)] < 0 &&
            (donor < 0 || deficit[static_cast<std::size_t>(j)] < deficit[static_cast<std::size_t>(donor)]))
          donor = j;
      }
      if (recv < 0) break;
      if (donor < 0) fail("modification plan lost conservation (internal)");
      const std::int64_t q =
          std::min(deficit[static_cast<std::size_t>(recv)], -deficit[static_cast<std::size_t>(donor)]);
      auto& pool = members[static_cast<std::size_t>(donor)];
      for (std::int64_t c = 0; c < q; ++c) {
        ModMove mv;
        mv.unit = unit;
        mv.from = donor;
        mv.to = recv;
        const auto pos = seq.pos(static_cast<std::size_t>(pool.back()));
        pool.pop_back();
        for (int s = 0; s < order; ++s) mv.pos[static_cast<std::size_t>(s)] = pos[static_cast<std::size_t>(s)];
        plan.moves.push_back(mv);
      }
      deficit[static_cast<std::size_t>(recv)] -= q;
      deficit[static_cast<std::size_t>(donor)] += q;
    }
  }
  return plan;
}

}  // namespace

ModificationPlan plan_modification_2nd(const TupleSequence& pairs, double alpha,
                                       const std::vector<TraceKey>& omitted,
                                       std::uint64_t seed) {
  return make_plan(pairs, PlanFamily::pairs, alpha, omitted, seed);
}

std::pair<ModificationPlan, ModificationPlan> plan_modification_3rd(
    const TupleSequence& lead, const TupleSequence& trail, double alpha,
    const std::vector<TraceKey>& omitted_lead, const std::vector<TraceKey>& omitted_trail,
    std::uint64_t seed) {
  return {make_plan(lead, PlanFamily::lead_triplets, alpha, omitted_lead, seed),
          make_plan(trail, PlanFamily::trail_triplets, alpha, omitted_trail, seed)};
}

std::int64_t apply_plan(PixelGrid& grid, const ModificationPlan& plan) {
  const int order = family_order(plan.family);
  const auto slots = member_slots(plan.family);
  const auto limit = static_cast<std::int64_t>(grid.samples.size());
  std::int64_t changed = 0;
  std::array<std::uint8_t, 3> vals{};
  for (const auto& mv : plan.moves) {
    for (int s = 0; s < order; ++s) {
      const std::int64_t p = mv.pos[static_cast<std::size_t>(s)];
      if (p < 0 || p >= limit) fail("plan move points outside the image");
      vals[static_cast<std::size_t>(s)] = grid.samples[static_cast<std::size_t>(p)];
    }
    const std::span<const std::uint8_t> view(vals.data(), static_cast<std::size_t>(order));
    const int subset = classify_subset(view);
    if (classify_key(view) != mv.unit.key || group_of_subset(plan.family, subset) != mv.unit.group ||
        member_of_subset(plan.family, subset) != mv.from)
      fail("plan does not match the image (wrong cover, or already applied)");
    const int diff = mv.from ^ mv.to;
    for (int b = 0; b < 2; ++b) {
      if ((diff >> b) & 1) {
        grid.samples[static_cast<std::size_t>(mv.pos[static_cast<std::size_t>(slots[static_cast<std::size_t>(b)])])] ^= 1;
        ++changed;
      }
    }
  }
  return changed;
}

ChannelCapacity channel_capacity(const PixelGrid& grid, int channel, int order) {
  if (order != 2 && order != 3) fail("channel capacity supports orders 2 and 3");
  ChannelCapacity cc;
  cc.order = order;

  auto survey = [&](const TupleSequence& seq, PlanFamily fam) {
    FamilyCapacity fc;
    fc.family = fam;
    const TupleCensus c = census(seq);
    fc.in_range_tuples = c.total - c.overflow;
    // the omitted sizes are tuple counts, so the budget they are weighed
    // against must be the family's whole tuple population
    const double n_tuples = static_cast<double>(c.total);
    for (const auto& [key, counts] : c.counts) {
      KeyCapacity kc;
      kc.key = key;
      kc.size = c.trace_set_size(key);
      if (fam == PlanFamily::pairs) {
        kc.alpha = trace_set_capacity(counts, 2);
      } else {
        // split by the invariant bit; both halves must stay feasible
        std::array<std::vector<std::int64_t>, 2> grp;
        grp[0].assign(4, 0);
        grp[1].assign(4, 0);
        for (int s = 0; s < 8; ++s)
          grp[static_cast<std::size_t>(group_of_subset(fam, s))]
             [static_cast<std::size_t>(member_of_subset(fam, s))] += counts[static_cast<std::size_t>(s)];
        kc.alpha = std::min(trace_set_capacity(grp[0], 2), trace_set_capacity(grp[1], 2));
      }
      fc.keys.push_back(kc);
    }
    fc.selection = select_max_rate(fc.keys, n_tuples);
    return fc;
  };

  if (order == 2) {
    cc.families.push_back(survey(partition_tuples(grid, channel, 2), PlanFamily::pairs));
  } else {
    const auto fams = partition_triplet_families(grid, channel);
    cc.families.push_back(survey(fams.first, PlanFamily::lead_triplets));
    cc.families.push_back(survey(fams.second, PlanFamily::trail_triplets));
  }
  cc.alpha = kInf;
  for (const auto& f : cc.families) cc.alpha = std::min(cc.alpha, f.selection.alpha);
  return cc;
}

SixthOrderReport feasibility_report_6th(const TupleCensus& c6, std::int64_t channel_samples) {
  if (c6.order != 6) fail("sixth-order report needs an order-6 census");
  if (channel_samples <= 0) fail("sixth-order report needs the channel sample count");
  SixthOrderReport rep;
  rep.keys_seen = static_cast<std::int64_t>(c6.counts.size());
  std::vector<KeyCapacity> caps;
  std::int64_t usable_tuples = 0;
  for (const auto& [key, counts] : c6.counts) {
    const bool full = std::all_of(counts.begin(), counts.end(), [](std::int64_t v) { return v > 0; });
    if (!full) continue;
    rep.usable_keys.push_back(key);
    KeyCapacity kc;
    kc.key = key;
    kc.size = c6.trace_set_size(key);
    kc.alpha = trace_set_capacity(counts, 6);
    caps.push_back(kc);
    usable_tuples += kc.size;
  }
  if (caps.empty()) return rep;  // alpha and fraction stay 0
  try {
    const RateSelection sel = select_max_rate(caps, static_cast<double>(c6.total));
    rep.alpha = sel.alpha;
    std::int64_t kept = 0;
    const std::set<TraceKey> omitted(sel.omitted.begin(), sel.omitted.end());
    for (const auto& kc : caps)
      if (!omitted.count(kc.key)) kept += kc.size;
    rep.capacity_fraction =
        rep.alpha * 6.0 * static_cast<double>(kept) / static_cast<double>(channel_samples);
  } catch (const Error&) {
    rep.alpha = 0;
    rep.capacity_fraction = 0;
  }
  return rep;
}

Fraction embeddable_fraction(int order) {
  if (order < 2) fail("embeddable fraction needs order >= 2");
  if (order > 42) fail("embeddable fraction: order too large for exact arithmetic");
  std::int64_t l = 1;
  for (std::int64_t k = 2; k <= order; ++k) l = std::lcm(l, k);
  Fraction f;
  f.num = 2 * (order / 2 + 1);
  f.den = l;
  if (f.num > f.den) f.num = f.den;  // an order-2 plan leaves every sample available
  const std::int64_t g = std::gcd(f.num, f.den);
  f.num /= g;
  f.den /= g;
  return f;
}

nlohmann::json plan_to_json(const ModificationPlan& p) {
  nlohmann::json targets = nlohmann::json::object();
  for (const auto& [unit, t] : p.targets) targets[unit.str()] = t;
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& mv : p.moves) {
    nlohmann::json jm = {{"key", mv.unit.key.str()},
                         {"group", mv.unit.group},
                         {"from", mv.from},
                         {"to", mv.to},
                         {"pos", nlohmann::json::array()}};
    for (int s = 0; s < family_order(p.family); ++s)
      jm["pos"].push_back(mv.pos[static_cast<std::size_t>(s)]);
    moves.push_back(std::move(jm));
  }
  nlohmann::json omitted = nlohmann::json::array();
  for (const auto& k : p.omitted_keys) omitted.push_back(k.str());
  return {{"family", family_name(p.family)},
          {"alpha", p.chosen_alpha},
          {"targets", std::move(targets)},
          {"moves", std::move(moves)},
          {"omitted_keys", std::move(omitted)}};
}

ModificationPlan plan_from_json(const nlohmann::json& j) {
  ModificationPlan p;
  p.family = family_from_name(j.at("family").get<std::string>());
  p.chosen_alpha = j.at("alpha").get<double>();
  for (const auto& [name, arr] : j.at("targets").items()) {
    const auto bar = name.find("|g");
    if (bar == std::string::npos) fail("malformed plan target name: " + name);
    UnitKey u;
    u.key = TraceKey::parse(name.substr(0, bar));
    u.group = std::stoi(name.substr(bar + 2));
    std::array<double, 4> t{};
    for (int i = 0; i < 4; ++i) t[static_cast<std::size_t>(i)] = arr.at(i).get<double>();
    p.targets.emplace(u, t);
  }
  for (const auto& jm : j.at("moves")) {
    ModMove mv;
    mv.unit.key = TraceKey::parse(jm.at("key").get<std::string>());
    mv.unit.group = jm.at("group").get<int>();
    mv.from = jm.at("from").get<int>();
    mv.to = jm.at("to").get<int>();
    const auto& pos = jm.at("pos");
    for (std::size_t s = 0; s < pos.size() && s < 3; ++s)
      mv.pos[s] = pos.at(s).get<std::int64_t>();
    p.moves.push_back(mv);
  }
  for (const auto& k : j.at("omitted_keys")) p.omitted_keys.push_back(TraceKey::parse(k.get<std::string>()));
  return p;
}

}  // namespace stegmod
