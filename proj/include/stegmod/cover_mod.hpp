#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stegmod/trace_algebra.hpp"

namespace stegmod {

// The three tuple populations a modification plan can act on. Third-order
// planning splits each sextuplet into a leading and a trailing triplet; the
// embedder only ever touches the first two samples of a leading triplet and
// the last two of a trailing one, so each triplet keeps one LSB invariant
// and its remaining two bits mix exactly like a pair.
enum class PlanFamily { pairs, lead_triplets, trail_triplets };

int family_order(PlanFamily f);                  // tuple order: 2 or 3
std::array<int, 2> member_slots(PlanFamily f);   // tuple slots carrying the two mobile bits
int member_of_subset(PlanFamily f, int subset);  // mobile bits of a subset index
int group_of_subset(PlanFamily f, int subset);   // invariant bit (0 for pairs)
const char* family_name(PlanFamily f);
PlanFamily family_from_name(const std::string& s);

// One planning unit: the tuples of a trace set sharing the invariant bit.
struct UnitKey {
  TraceKey key;
  int group = 0;
  auto operator<=>(const UnitKey&) const = default;
  std::string str() const;
};

struct ModMove {
  UnitKey unit;
  int from = 0;                                // member index before the move
  int to = 0;                                  // member index after
  std::array<std::int64_t, 3> pos{-1, -1, -1};  // sample indices of the tuple
};

struct ModificationPlan {
  PlanFamily family = PlanFamily::pairs;
  double chosen_alpha = 0;
  std::map<UnitKey, std::array<double, 4>> targets;  // real-valued member targets
  std::vector<ModMove> moves;
  std::vector<TraceKey> omitted_keys;
};

nlohmann::json plan_to_json(const ModificationPlan& p);
ModificationPlan plan_from_json(const nlohmann::json& j);

// Pull the census back through the inverse flip kernel: the member counts a
// cover must hold so that embedding at `alpha` lands on the original census.
std::map<TraceKey, std::vector<double>> target_census(const TupleCensus& c, double alpha);

// Smallest rate at which some target component of this count vector reaches
// zero; +infinity when none does on [0, 1). An already-empty component that
// must donate makes the capacity exactly zero.
double trace_set_capacity(const std::vector<std::int64_t>& counts, int order);

struct KeyCapacity {
  TraceKey key;
  double alpha = 0;        // capacity of this trace set
  std::int64_t size = 0;   // tuples in the set
};

struct RateSelection {
  double alpha = 0;   // chosen rate, capped at 1
  double score = 0;   // rate x kept fraction at the optimum
  std::vector<TraceKey> omitted;  // keys whose capacity falls below the choice
};

// Maximize rate x (1 - omitted/N) over the candidate capacities. N must be
// in the same units as the candidate sizes (tuples), normally the family's
// whole tuple population, so omitted/N is the excluded fraction.
RateSelection select_max_rate(const std::vector<KeyCapacity>& keys, double n_samples);

ModificationPlan plan_modification_2nd(const TupleSequence& pairs, double alpha,
                                       const std::vector<TraceKey>& omitted,
                                       std::uint64_t seed);

std::pair<ModificationPlan, ModificationPlan> plan_modification_3rd(
    const TupleSequence& lead, const TupleSequence& trail, double alpha,
    const std::vector<TraceKey>& omitted_lead, const std::vector<TraceKey>& omitted_trail,
    std::uint64_t seed);

// Executes the moves, flipping only the mobile-slot LSBs. Throws if any
// tuple no longer classifies as its move expects (wrong cover, or the plan
// was already applied). Returns the number of changed samples.
std::int64_t apply_plan(PixelGrid& grid, const ModificationPlan& plan);

// Capacity survey of one channel at order 2 or 3, including rate selection.
struct FamilyCapacity {
  PlanFamily family = PlanFamily::pairs;
  std::vector<KeyCapacity> keys;  // in-range keys only
  std::int64_t in_range_tuples = 0;
  RateSelection selection;
};

struct ChannelCapacity {
  int order = 2;
  std::vector<FamilyCapacity> families;  // one entry for pairs, two for triplets
  double alpha = 0;                      // min of the family selections
};

ChannelCapacity channel_capacity(const PixelGrid& grid, int channel, int order);

// Direct sixth-order feasibility: only trace sets with all 64 subsets
// populated are usable, and the payload they admit is a tiny fraction of
// the image on natural covers.
struct SixthOrderReport {
  std::vector<TraceKey> usable_keys;
  std::int64_t keys_seen = 0;
  double alpha = 0;              // selection over usable keys; 0 when none
  double capacity_fraction = 0;  // payload bits per channel sample
};

SixthOrderReport feasibility_report_6th(const TupleCensus& c6, std::int64_t channel_samples);

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

// Fraction of samples an order-k modification leaves available to the
// embedder, exact: 2(floor(k/2)+1)/lcm(1..k), capped at 1.
Fraction embeddable_fraction(int order);

}  // namespace stegmod
