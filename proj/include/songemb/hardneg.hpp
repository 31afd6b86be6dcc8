#pragma once

// Chi-squared bigram association and hard-negative neighbors.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/neighbors.hpp"
#include "songemb/stats.hpp"

namespace songemb {

inline std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
inline std::pair<std::uint32_t, std::uint32_t> unpack_pair(std::uint64_t key) {
  return {static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key & 0xffffffffULL)};
}

// Unordered adjacent-pair counts over the training split. occurrence[i] counts the
// bigram slots holding i, so a self-pair (i, i) adds 2 and the slots sum to
// 2 * total_bigrams.
struct BigramStats {
  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  std::vector<std::uint64_t> occurrence;
  std::uint64_t total_bigrams = 0;
  std::uint64_t total_tokens = 0;

  std::uint64_t count(std::uint32_t a, std::uint32_t b) const {
    auto it = pair_counts.find(pair_key(a, b));
    return it == pair_counts.end() ? 0 : it->second;
  }
  std::uint64_t occurrence_slots() const {
    std::uint64_t s = 0;
    for (auto o : occurrence) s += o;
    return s;
  }
};

// Adjacent raw-token pairs whose endpoints are both in the vocabulary.
inline BigramStats collect_bigrams(const SequenceDataset& ds, const Vocabulary& vocab) {
  const auto map = vocab.map_symbols(*ds.symbols);
  BigramStats st;
  st.occurrence.assign(vocab.size(), 0);
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != Split::train) continue;
    const auto& s = ds.sequences[i];
    for (auto t : s) st.total_tokens += map[t] >= 0;
    for (std::size_t t = 0; t + 1 < s.size(); ++t) {
      const auto a = map[s[t]];
      const auto b = map[s[t + 1]];
      if (a < 0 || b < 0) continue;
      ++st.pair_counts[pair_key(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b))];
      ++st.occurrence[static_cast<std::size_t>(a)];
      ++st.occurrence[static_cast<std::size_t>(b)];
      ++st.total_bigrams;
    }
  }
  return st;
}

struct ChiSquared {
  double value = 0.0;
  bool degenerate = false;  // a zero margin; value forced to 0
};

// X^2 = n (O11 O22 - O12 O21)^2 / (r1 c1 r2 c2) on a 2x2 table.
inline ChiSquared chi_squared_table(double o11, double o12, double o21, double o22) {
  const double n = o11 + o12 + o21 + o22;
  const double r1 = o11 + o12, c1 = o11 + o21, r2 = o21 + o22, c2 = o12 + o22;
  if (r1 <= 0 || c1 <= 0 || r2 <= 0 || c2 <= 0) return {0.0, true};
  const double det = o11 * o22 - o12 * o21;
  return {n * det * det / (r1 * c1 * r2 * c2), false};
}

// Each unordered bigram {x, y} counts as the ordered bigrams (x, y) and (y, x) with
// weight 1/2; the table crosses "first is i" with "second is j". Independent songs
// then have O11 = E11 in expectation.
inline ChiSquared chi_squared(const BigramStats& st, std::uint32_t i, std::uint32_t j) {
  require(i < st.occurrence.size() && j < st.occurrence.size(), "chi_squared: index out of range");
  const double n = static_cast<double>(st.total_bigrams);
  const double o11 = i == j ? static_cast<double>(st.count(i, i)) : 0.5 * static_cast<double>(st.count(i, j));
  const double oi = 0.5 * static_cast<double>(st.occurrence[i]);
  const double oj = 0.5 * static_cast<double>(st.occurrence[j]);
  return chi_squared_table(o11, oi - o11, oj - o11, n - oi - oj + o11);
}

enum class ThresholdBase { slots, tokens };

// factor * (sum of song occurrences); the default factor is 1e-7.
inline double default_hardneg_threshold(const BigramStats& st, double factor = 1e-7, ThresholdBase base = ThresholdBase::slots) {
  const auto total = base == ThresholdBase::slots ? st.occurrence_slots() : st.total_tokens;
  return factor * static_cast<double>(total);
}

struct HardNegativePair {
  std::uint32_t a;
  std::uint32_t b;
  std::uint64_t cooccurrence;
  double chi2;
};

struct HardNegativeSet {
  std::vector<HardNegativePair> pairs;  // sorted by (a, b), a < b
  std::unordered_set<std::uint64_t> keys;
  double threshold = 0.0;
  std::uint64_t min_cooccurrence = 0;

  bool contains(std::uint32_t a, std::uint32_t b) const { return keys.count(pair_key(a, b)) != 0; }
  bool empty() const { return pairs.empty(); }

  // Average number of hard negatives per song that has at least one.
  double mean_per_song() const {
    std::unordered_set<std::uint32_t> songs;
    for (const auto& p : pairs) {
      songs.insert(p.a);
      songs.insert(p.b);
    }
    return songs.empty() ? 0.0 : 2.0 * static_cast<double>(pairs.size()) / static_cast<double>(songs.size());
  }
};

// Pairs seen at least min_cooccurrence times whose X^2 is below the threshold.
inline HardNegativeSet mine_hard_negatives(const BigramStats& st, double threshold, std::uint64_t min_cooccurrence) {
  HardNegativeSet hns;
  hns.threshold = threshold;
  hns.min_cooccurrence = min_cooccurrence;
  std::vector<std::uint64_t> keys;
  keys.reserve(st.pair_counts.size());
  for (const auto& [key, c] : st.pair_counts) {
    const auto [a, b] = unpack_pair(key);
    if (a == b || c < min_cooccurrence) continue;
    keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  for (auto key : keys) {
    const auto [a, b] = unpack_pair(key);
    const auto x2 = chi_squared(st, a, b);
    if (x2.value < threshold) {
      hns.pairs.push_back({a, b, st.pair_counts.at(key), x2.value});
      hns.keys.insert(key);
    }
  }
  return hns;
}

// Mean over queries of (# top-k neighbors forming a hard-negative pair with the query) / k.
inline double hardneg_metric(NeighborCache& cache, const HardNegativeSet& hns, std::span<const std::uint32_t> queries, std::size_t k = 100) {
  require(!queries.empty(), "hardneg_metric: empty query set");
  require(k >= 1 && k <= cache.k(), "hardneg_metric: k exceeds neighbor cache depth");
  if (hns.empty()) return 0.0;
  cache.prefetch(queries);
  CompensatedSum s;
  for (auto q : queries) {
    const auto& res = cache.get(q);
    if (!res.ok()) continue;
    const auto& nb = res.list.neighbors;
    const std::size_t depth = std::min(k, nb.size());
    std::size_t hits = 0;
    for (std::size_t j = 0; j < depth; ++j) hits += hns.contains(q, nb[j].index);
    s.add(static_cast<double>(hits) / static_cast<double>(k));
  }
  return s.value() / static_cast<double>(queries.size());
}

inline void write_hardneg_dump(const std::string& path, const HardNegativeSet& hns, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "# threshold=" << hns.threshold << " min_cooccurrence=" << hns.min_cooccurrence << '\n';
  out << "song_a\tsong_b\tcooccurrence\tchi2\n";
  out.precision(17);
  for (const auto& p : hns.pairs) out << vocab.id(p.a) << '\t' << vocab.id(p.b) << '\t' << p.cooccurrence << '\t' << p.chi2 << '\n';
}

// Re-reads a dump against a vocabulary; pairs with unknown songs are skipped.
inline HardNegativeSet read_hardneg_dump(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  HardNegativeSet hns;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto t = line.find("threshold=");
      if (t != std::string::npos) hns.threshold = std::stod(line.substr(t + 10));
      auto m = line.find("min_cooccurrence=");
      if (m != std::string::npos) hns.min_cooccurrence = std::stoull(line.substr(m + 17));
      continue;
    }
    if (line.rfind("song_a", 0) == 0) continue;
    const auto f = detail::split_tabs(line);
    require(f.size() >= 4, path + ": malformed hard-negative line");
    const auto a = vocab.find(std::string(f[0]));
    const auto b = vocab.find(std::string(f[1]));
    if (!a || !b) continue;
    const auto lo = std::min(*a, *b), hi = std::max(*a, *b);
    hns.pairs.push_back({lo, hi, detail::parse_u64(f[2], path), std::stod(std::string(f[3]))});
    hns.keys.insert(pair_key(lo, hi));
  }
  std::sort(hns.pairs.begin(), hns.pairs.end(), [](const auto& x, const auto& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  return hns;
}

}  // namespace songemb
