#include "stegmod/trace_algebra.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <cstdlib>

namespace stegmod {

std::string TraceKey::str() const {
  std::string s;
  for (int i = 0; i < len; ++i) {
    if (i) s.push_back(',');
    s += std::to_string(static_cast<int>(m[i]));
  }
  return s;
}

TraceKey TraceKey::parse(const std::string& s) {
  TraceKey k;
  k.len = 0;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string part = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                : comma - pos);
    if (part.empty()) fail("TraceKey::parse: empty component in '" + s + "'");
    int v = std::atoi(part.c_str());
    if (k.len >= 5) fail("TraceKey::parse: too many components in '" + s + "'");
    if (v < -128 || v > 127) fail("TraceKey::parse: component out of range");
    k.m[k.len++] = static_cast<std::int8_t>(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (k.len == 0) fail("TraceKey::parse: empty key");
  return k;
}

TraceKey classify_key(std::span<const std::uint8_t> values) {
  if (values.size() < 2 || values.size() > 6) fail("classify_key: bad tuple size");
  TraceKey k;
  k.len = static_cast<std::uint8_t>(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    k.m[i] = static_cast<std::int8_t>((values[i + 1] >> 1) - (values[i] >> 1));
  return k;
}

int classify_subset(std::span<const std::uint8_t> values) {
  int idx = 0;
  for (std::size_t i = 0; i < values.size(); ++i) idx |= (values[i] & 1) << i;
  return idx;
}

std::string SubsetLabel::str() const {
  std::string s = first_even ? "E_{" : "O_{";
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(diffs[i]);
  }
  s.push_back('}');
  return s;
}

std::vector<SubsetLabel> enumerate_subsets(const TraceKey& key, int order) {
  if (order < 2 || order > 6) fail("enumerate_subsets: order must be in [2,6]");
  if (key.len != order - 1) fail("enumerate_subsets: key length does not match order");
  // Level 1: single sample, split only by parity.
  std::vector<SubsetLabel> level(2);
  level[0].first_even = true;
  level[1].first_even = false;
  for (int step = 0; step < order - 1; ++step) {
    int k = key.m[step];
    std::vector<SubsetLabel> next;
    next.reserve(level.size() * 2);
    for (int half = 0; half < 2; ++half) {
      for (const SubsetLabel& s : level) {
        // Parity of the running sum (first parity + differences so far)
        // decides which two exact differences are compatible with key k.
        int parity = s.first_even ? 0 : 1;
        for (int d : s.diffs) parity ^= d & 1;
        int beta = (parity == 0) ? 0 : -1;
        SubsetLabel t = s;
        t.diffs.push_back(2 * k + beta + half);
        next.push_back(std::move(t));
      }
    }
    level = std::move(next);
  }
  for (std::size_t i = 0; i < level.size(); ++i) level[i].index = static_cast<int>(i);
  return level;
}

std::pair<TraceKey, SubsetLabel> classify_tuple(std::span<const std::uint8_t> values) {
  TraceKey key = classify_key(values);
  SubsetLabel label;
  label.first_even = (values[0] & 1) == 0;
  label.diffs.reserve(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    label.diffs.push_back(static_cast<int>(values[i + 1]) - static_cast<int>(values[i]));
  label.index = classify_subset(values);
  return {key, label};
}

std::vector<std::int64_t> TupleCensus::counts_or_zero(const TraceKey& k) const {
  auto it = counts.find(k);
  if (it != counts.end()) return it->second;
  return std::vector<std::int64_t>(std::size_t(1) << order, 0);
}

std::int64_t TupleCensus::trace_set_size(const TraceKey& k) const {
  auto it = counts.find(k);
  if (it == counts.end()) return 0;
  std::int64_t n = 0;
  for (auto v : it->second) n += v;
  return n;
}

namespace {

void census_accumulate(TupleCensus& c, const TupleSequence& seq,
                       std::size_t begin, std::size_t end) {
  int dim = 1 << c.order;
  for (std::size_t i = begin; i < end; ++i) {
    auto v = seq.val(i);
    TraceKey key = classify_key(v);
    bool in_range = true;
    for (int d = 0; d < key.len; ++d)
      if (key.m[d] < c.range_lo || key.m[d] > c.range_hi) in_range = false;
    if (!in_range) {
      ++c.overflow;
      continue;
    }
    auto it = c.counts.find(key);
    if (it == c.counts.end())
      it = c.counts.emplace(key, std::vector<std::int64_t>(dim, 0)).first;
    ++it->second[classify_subset(v)];
  }
}

TupleCensus census_impl(const TupleSequence& seq, int lo, int hi, bool parallel) {
  if (lo > hi) fail("census: bad range");
  TupleCensus out;
  out.order = seq.order;
  out.range_lo = lo;
  out.range_hi = hi;
  out.total = static_cast<std::int64_t>(seq.count);

  int threads = 1;
#ifdef _OPENMP
  if (parallel) threads = omp_get_max_threads();
#else
  (void)parallel;
#endif
  if (threads <= 1 || seq.count < 4096) {
    census_accumulate(out, seq, 0, seq.count);
    return out;
  }
#ifdef _OPENMP
  std::vector<TupleCensus> parts(threads);
  for (auto& p : parts) {
    p.order = seq.order;
    p.range_lo = lo;
    p.range_hi = hi;
  }
#pragma omp parallel num_threads(threads)
  {
    int t = omp_get_thread_num();
    std::size_t chunk = (seq.count + threads - 1) / threads;
    std::size_t b = std::min(seq.count, chunk * t);
    std::size_t e = std::min(seq.count, b + chunk);
    census_accumulate(parts[t], seq, b, e);
  }
  for (auto& p : parts) {
    out.overflow += p.overflow;
    for (auto& [k, v] : p.counts) {
      auto it = out.counts.find(k);
      if (it == out.counts.end()) {
        out.counts.emplace(k, std::move(v));
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) it->second[i] += v[i];
      }
    }
  }
#endif
  return out;
}

}  // namespace

TupleCensus census(const TupleSequence& seq, int lo, int hi) {
  return census_impl(seq, lo, hi, true);
}

namespace reference {
TupleCensus census(const TupleSequence& seq, int lo, int hi) {
  return census_impl(seq, lo, hi, false);
}
}  // namespace reference

nlohmann::json census_to_json(const TupleCensus& c) {
  nlohmann::json j;
  j["order"] = c.order;
  j["range"] = {c.range_lo, c.range_hi};
  j["total"] = c.total;
  j["overflow"] = c.overflow;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : c.counts) counts[k.str()] = v;
  j["counts"] = std::move(counts);
  return j;
}

TupleCensus census_from_json(const nlohmann::json& j) {
  TupleCensus c;
  c.order = j.at("order").get<int>();
  if (c.order < 2 || c.order > 6) fail("census_from_json: bad order");
  c.range_lo = j.at("range").at(0).get<int>();
  c.range_hi = j.at("range").at(1).get<int>();
  c.total = j.at("total").get<std::int64_t>();
  c.overflow = j.at("overflow").get<std::int64_t>();
  std::size_t dim = std::size_t(1) << c.order;
  for (auto it = j.at("counts").begin(); it != j.at("counts").end(); ++it) {
    auto v = it.value().get<std::vector<std::int64_t>>();
    if (v.size() != dim) fail("census_from_json: bad count vector size");
    TraceKey k = TraceKey::parse(it.key());
    if (k.len != c.order - 1) fail("census_from_json: key length mismatch");
    c.counts.emplace(k, std::move(v));
  }
  return c;
}

const std::vector<double>& KernelMatrix::inverse() const {
  if (inv_.empty()) fail("kernel inverse is singular at p = 1/2");
  return inv_;
}

double KernelMatrix::inv_at(int i, int j) const {
  return inverse()[static_cast<std::size_t>(i) * dim + j];
}

KernelMatrix transition_kernel(int order, double p) {
  if (order < 1 || order > 6) fail("transition_kernel: order must be in [1,6]");
  KernelMatrix k;
  k.order = order;
  k.p = p;
  k.dim = 1 << order;

  // fwd: T_1 = [[1-p, p], [p, 1-p]], T_{g+1} = [[(1-p)T_g, pT_g], [pT_g, (1-p)T_g]]
  std::vector<double> t = {1 - p, p, p, 1 - p};
  int dim = 2;
  for (int g = 1; g < order; ++g) {
    int nd = dim * 2;
    std::vector<double> next(static_cast<std::size_t>(nd) * nd);
    for (int bi = 0; bi < 2; ++bi)
      for (int bj = 0; bj < 2; ++bj) {
        double f = (bi == bj) ? (1 - p) : p;
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j)
            next[static_cast<std::size_t>(bi * dim + i) * nd + (bj * dim + j)] =
                f * t[static_cast<std::size_t>(i) * dim + j];
      }
    t = std::move(next);
    dim = nd;
  }
  k.fwd = std::move(t);

  if (p != 0.5) {
    double s = 1.0 / (1 - 2 * p);
    std::vector<double> u = {s * (1 - p), -s * p, -s * p, s * (1 - p)};
    dim = 2;
    for (int g = 1; g < order; ++g) {
      int nd = dim * 2;
      std::vector<double> next(static_cast<std::size_t>(nd) * nd);
      for (int bi = 0; bi < 2; ++bi)
        for (int bj = 0; bj < 2; ++bj) {
          double f = (bi == bj) ? s * (1 - p) : -s * p;
          for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
              next[static_cast<std::size_t>(bi * dim + i) * nd + (bj * dim + j)] =
                  f * u[static_cast<std::size_t>(i) * dim + j];
        }
      u = std::move(next);
      dim = nd;
    }
    k.inv_ = std::move(u);
  }
  return k;
}

}  // namespace stegmod
