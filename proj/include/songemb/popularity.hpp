#pragma once

// Popularity buckets, query/target bucket HitRate matrices and play-rate
// correlation with embedding similarity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/metrics.hpp"
#include "songemb/neighbors.hpp"
#include "songemb/rng.hpp"
#include "songemb/stats.hpp"

namespace songemb {

struct PopularityBuckets {
  int count = 5;
  std::unordered_map<std::string, int> assignment;  // song id -> bucket, 0 = most played
  std::vector<std::uint64_t> plays_per_bucket;
  std::vector<std::size_t> songs_per_bucket;
  std::uint64_t total_plays = 0;
  std::uint64_t max_song_plays = 0;

  double mass(int b) const { return static_cast<double>(plays_per_bucket.at(static_cast<std::size_t>(b))) / static_cast<double>(total_plays); }

  // Bucket per vocabulary row, -1 for songs absent from the catalog.
  std::vector<int> for_vocabulary(const Vocabulary& vocab) const {
    std::vector<int> out(vocab.size(), -1);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      auto it = assignment.find(vocab.id(i));
      if (it != assignment.end()) out[i] = it->second;
    }
    return out;
  }
};

// Songs sorted by descending plays (ties by id); a song whose cumulative mass
// before it lies in [b/B, (b+1)/B) goes to bucket b.
inline PopularityBuckets bucketize(const Catalog& catalog, int buckets = 5) {
  require(buckets >= 1, "bucketize: need at least one bucket");
  std::vector<std::pair<const std::string*, std::uint64_t>> songs;
  songs.reserve(catalog.entries.size());
  unsigned __int128 total = 0;
  for (const auto& [id, e] : catalog.entries) {
    songs.emplace_back(&id, e.play_count);
    total += e.play_count;
  }
  if (total == 0) throw ValidationError("bucketize: zero total plays");
  std::sort(songs.begin(), songs.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return *a.first < *b.first;
  });
  PopularityBuckets pb;
  pb.count = buckets;
  pb.plays_per_bucket.assign(static_cast<std::size_t>(buckets), 0);
  pb.songs_per_bucket.assign(static_cast<std::size_t>(buckets), 0);
  pb.total_plays = static_cast<std::uint64_t>(total);
  unsigned __int128 before = 0;
  for (const auto& [id, plays] : songs) {
    const auto b = static_cast<int>(std::min<unsigned __int128>(before * static_cast<unsigned>(buckets) / total, static_cast<unsigned>(buckets - 1)));
    pb.assignment.emplace(*id, b);
    pb.plays_per_bucket[static_cast<std::size_t>(b)] += plays;
    ++pb.songs_per_bucket[static_cast<std::size_t>(b)];
    pb.max_song_plays = std::max(pb.max_song_plays, plays);
    before += plays;
  }
  return pb;
}

struct BucketCell {
  std::optional<double> hitrate;  // nullopt when the cell has no pairs
  std::size_t sampled = 0;
  std::size_t available = 0;
  std::vector<std::size_t> pair_indices;  // pairs used for this cell
};

struct BucketMatrix {
  int buckets = 0;
  std::size_t samples_per_cell = 0;
  std::vector<BucketCell> cells;  // row-major [query][target]

  const BucketCell& at(int q, int t) const { return cells.at(static_cast<std::size_t>(q * buckets + t)); }
  std::vector<std::optional<double>> diagonal() const {
    std::vector<std::optional<double>> d;
    for (int b = 0; b < buckets; ++b) d.push_back(at(b, b).hitrate);
    return d;
  }
  std::size_t filled() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const BucketCell& c) { return c.hitrate.has_value(); }));
  }
};

// HitRate per (query bucket, target bucket) over up to samples_per_cell random pairs.
inline BucketMatrix bucket_hitrate_matrix(NeighborCache& cache, std::span<const QueryTargetPair> pairs, std::span<const int> bucket_of, int buckets,
                                          std::size_t samples_per_cell, std::size_t k, std::uint64_t seed) {
  require(!pairs.empty(), "bucket matrix: empty pair list");
  require(samples_per_cell >= 1, "bucket matrix: samples per cell must be >= 1");
  BucketMatrix m;
  m.buckets = buckets;
  m.samples_per_cell = samples_per_cell;
  m.cells.resize(static_cast<std::size_t>(buckets * buckets));
  std::vector<std::vector<std::size_t>> groups(m.cells.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.query >= bucket_of.size() || p.target >= bucket_of.size()) continue;
    const int bq = bucket_of[p.query], bt = bucket_of[p.target];
    if (bq < 0 || bt < 0) continue;
    groups[static_cast<std::size_t>(bq * buckets + bt)].push_back(i);
  }
  std::vector<QueryTargetPair> chosen;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto& cell = m.cells[c];
    cell.available = groups[c].size();
    if (groups[c].empty()) continue;
    Rng rng(derive_seed(derive_seed(seed, streams::kBuckets), c));
    auto idx = groups[c];
    shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() > samples_per_cell) idx.resize(samples_per_cell);
    std::sort(idx.begin(), idx.end());
    chosen.clear();
    for (auto i : idx) chosen.push_back(pairs[i]);
    cell.hitrate = hitrate_ndcg(cache, chosen, k).hitrate;
    cell.sampled = idx.size();
    cell.pair_indices = std::move(idx);
  }
  return m;
}

inline void write_heatmap_tsv(const std::string& path, const BucketMatrix& m) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "query_bucket\ttarget_bucket\thitrate\tn\n";
  out.precision(10);
  for (int q = 0; q < m.buckets; ++q)
    for (int t = 0; t < m.buckets; ++t) {
      const auto& c = m.at(q, t);
      out << q << '\t' << t << '\t';
      if (c.hitrate) out << *c.hitrate;
      else out << "NA";
      out << '\t' << c.sampled << '\n';
    }
}

inline void write_diagonal_tsv(const std::string& path, const BucketMatrix& m) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "bucket\thitrate\tn\n";
  out.precision(10);
  for (int b = 0; b < m.buckets; ++b) {
    const auto& c = m.at(b, b);
    out << b << '\t';
    if (c.hitrate) out << *c.hitrate;
    else out << "NA";
    out << '\t' << c.sampled << '\n';
  }
}

struct PlayPairObservation {
  std::uint32_t seed_song;
  std::uint32_t recommended;
  std::uint64_t occurrences;
  std::uint64_t successes;

  double play_rate() const { return static_cast<double>(successes) / static_cast<double>(occurrences); }
};

struct ObservationSet {
  std::vector<PlayPairObservation> observations;
  std::size_t skipped_unknown = 0;
};

// TSV `seed_id recommended_id occurrences successes`; unknown songs are skipped.
inline ObservationSet read_observations(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  ObservationSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("seed_id", 0) == 0) continue;
    const auto f = detail::split_tabs(line);
    require(f.size() >= 4, path + ":" + std::to_string(lineno) + ": expected 4 fields");
    const auto occ = detail::parse_u64(f[2], path);
    const auto succ = detail::parse_u64(f[3], path);
    require(occ >= 1 && succ <= occ, path + ":" + std::to_string(lineno) + ": need 0 <= successes <= occurrences, occurrences >= 1");
    const auto a = vocab.find(std::string(f[0]));
    const auto b = vocab.find(std::string(f[1]));
    if (!a || !b) {
      ++out.skipped_unknown;
      continue;
    }
    out.observations.push_back({*a, *b, occ, succ});
  }
  return out;
}

inline void write_observations(const std::string& path, std::span<const PlayPairObservation> obs, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "seed_id\trecommended_id\toccurrences\tsuccesses\n";
  for (const auto& o : obs) out << vocab.id(o.seed_song) << '\t' << vocab.id(o.recommended) << '\t' << o.occurrences << '\t' << o.successes << '\n';
}

struct PlayCorrelation {
  std::optional<double> r_all;
  std::optional<double> r_frequent;
  std::size_t n_all = 0;
  std::size_t n_frequent = 0;
  std::uint64_t frequent_threshold = 100;
};

// Pearson r between per-pair play rate and cosine(seed, recommended), over all
// pairs and over pairs with at least frequent_threshold occurrences.
inline PlayCorrelation play_correlation(const NeighborIndex& index, std::span<const PlayPairObservation> obs, std::uint64_t frequent_threshold = 100) {
  PlayCorrelation pc;
  pc.frequent_threshold = frequent_threshold;
  std::vector<double> sim, rate, sim_f, rate_f;
  for (const auto& o : obs) {
    if (index.is_zero_norm(o.seed_song) || index.is_zero_norm(o.recommended)) continue;
    const double s = index.cosine(o.seed_song, o.recommended);
    sim.push_back(s);
    rate.push_back(o.play_rate());
    if (o.occurrences >= frequent_threshold) {
      sim_f.push_back(s);
      rate_f.push_back(o.play_rate());
    }
  }
  require(sim.size() >= 2, "play correlation: need at least 2 observations");
  pc.n_all = sim.size();
  pc.n_frequent = sim_f.size();
  pc.r_all = pearson(sim, rate);
  pc.r_frequent = pearson(sim_f, rate_f);
  return pc;
}

struct CurveBin {
  double similarity;
  std::size_t pairs;
  double mean_rate;
  double relative;
};

struct PlayRateCurve {
  std::vector<CurveBin> bins;  // ascending similarity
  bool scaled = true;          // false when no pair falls in the 0.0 bin
};

// Bins pairs by similarity rounded to `decimals` places and divides each bin's mean
// play rate by the mean of the 0.0 bin.
inline PlayRateCurve relative_play_rate_curve(const NeighborIndex& index, std::span<const PlayPairObservation> obs, int decimals = 1) {
  require(decimals >= 0 && decimals <= 6, "curve: decimals must be in [0, 6]");
  const double scale = std::pow(10.0, decimals);
  std::map<long long, std::pair<CompensatedSum, std::size_t>> bins;
  for (const auto& o : obs) {
    if (index.is_zero_norm(o.seed_song) || index.is_zero_norm(o.recommended)) continue;
    const auto key = std::llround(index.cosine(o.seed_song, o.recommended) * scale);
    auto& b = bins[key];
    b.first.add(o.play_rate());
    ++b.second;
  }
  PlayRateCurve c;
  std::optional<double> ref;
  if (auto it = bins.find(0); it != bins.end()) ref = it->second.first.value() / static_cast<double>(it->second.second);
  c.scaled = ref.has_value() && *ref > 0.0;
  for (auto& [key, b] : bins) {
    const double m = b.first.value() / static_cast<double>(b.second);
    c.bins.push_back({static_cast<double>(key) / scale, b.second, m, c.scaled ? m / *ref : m});
  }
  return c;
}

inline void write_curve_tsv(const std::string& path, const PlayRateCurve& c) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "similarity\tpairs\tmean_play_rate\trelative_play_rate\n";
  out.precision(10);
  for (const auto& b : c.bins) out << b.similarity << '\t' << b.pairs << '\t' << b.mean_rate << '\t' << b.relative << '\n';
}

struct ObservationGenerator {
  std::size_t pairs = 50000;
  double base = 0.2;   // success probability at cosine 0
  double slope = 0.5;  // per unit cosine
  std::uint64_t max_occurrences = 1000;
  double neighbor_fraction = 0.5;  // recommended song drawn from the seed's top neighbors
  std::size_t neighbor_depth = 50;
};

// Synthetic (seed, recommended) exposures whose success probability is
// clamp(base + slope * cosine); occurrences are log-uniform in [1, max_occurrences].
inline std::vector<PlayPairObservation> generate_play_observations(const NeighborIndex& index, const ObservationGenerator& g, std::uint64_t seed) {
  require(index.size() >= 2, "observation generator: need at least 2 songs");
  auto rng = make_rng(seed, streams::kObservations);
  NeighborCache cache(index, g.neighbor_depth, 1);
  std::vector<PlayPairObservation> out;
  out.reserve(g.pairs);
  const double log_max = std::log(static_cast<double>(g.max_occurrences) + 1.0);
  while (out.size() < g.pairs) {
    const auto s = static_cast<std::uint32_t>(uniform_index(rng, index.size()));
    if (index.is_zero_norm(s)) continue;
    std::uint32_t r;
    if (uniform01(rng) < g.neighbor_fraction) {
      const auto& nb = cache.get(s).list.neighbors;
      if (nb.empty()) continue;
      r = nb[uniform_index(rng, nb.size())].index;
    } else {
      r = static_cast<std::uint32_t>(uniform_index(rng, index.size()));
      if (r == s || index.is_zero_norm(r)) continue;
    }
    auto occ = static_cast<std::uint64_t>(std::floor(std::exp(uniform01(rng) * log_max)));
    occ = std::clamp<std::uint64_t>(occ, 1, g.max_occurrences);
    const double p = std::clamp(g.base + g.slope * index.cosine(s, r), 0.0, 1.0);
    std::uint64_t succ = 0;
    for (std::uint64_t t = 0; t < occ; ++t) succ += uniform01(rng) < p;
    out.push_back({s, r, occ, succ});
  }
  return out;
}

}  // namespace songemb
