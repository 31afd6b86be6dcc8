#pragma once

// Next-song ranking metrics, the variance ratio criterion and local coherence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/neighbors.hpp"
#include "songemb/rng.hpp"
#include "songemb/stats.hpp"

namespace songemb {

enum class PairOrigin : std::uint8_t { in_set, out_of_set };

struct QueryTargetPair {
  std::uint32_t query;
  std::uint32_t target;
  PairOrigin origin;
  friend bool operator==(const QueryTargetPair&, const QueryTargetPair&) = default;
};

struct PairSet {
  std::vector<QueryTargetPair> pairs;
  std::size_t dropped_oov = 0;
};

enum class PairMode { adjacent, all };

// (second-to-last, last) of every training sequence.
inline PairSet make_inset_pairs(const SequenceDataset& ds, const Vocabulary& vocab) {
  const auto map = vocab.map_symbols(*ds.symbols);
  PairSet out;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != Split::train) continue;
    const auto& s = ds.sequences[i];
    if (s.size() < 2) continue;
    const auto q = map[s[s.size() - 2]];
    const auto t = map[s.back()];
    if (q < 0 || t < 0) {
      ++out.dropped_oov;
      continue;
    }
    out.pairs.push_back({static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(t), PairOrigin::in_set});
  }
  return out;
}

// Adjacent (s_i, s_{i+1}) pairs of held-out sequences, or every ordered i<j pair in `all` mode.
inline PairSet make_outset_pairs(const SequenceDataset& ds, const Vocabulary& vocab, Split which, PairMode mode = PairMode::adjacent) {
  require(which != Split::train, "out-of-set pairs come from validation or test sequences");
  const auto map = vocab.map_symbols(*ds.symbols);
  PairSet out;
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    const auto q = map[a];
    const auto t = map[b];
    if (q < 0 || t < 0) {
      ++out.dropped_oov;
      return;
    }
    out.pairs.push_back({static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(t), PairOrigin::out_of_set});
  };
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != which) continue;
    const auto& s = ds.sequences[i];
    if (mode == PairMode::adjacent) {
      for (std::size_t t = 0; t + 1 < s.size(); ++t) add(s[t], s[t + 1]);
    } else {
      for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b) add(s[a], s[b]);
    }
  }
  return out;
}

struct RankingResult {
  double hitrate = 0.0;
  double ndcg = 0.0;
  double hitrate_se = 0.0;
  std::size_t pairs = 0;
  std::size_t failed_queries = 0;  // zero-norm or unknown queries, counted as misses
  std::vector<std::uint32_t> ranks;  // 1-based rank of the target, 0 when absent
};

inline double ndcg_at_rank(std::uint32_t rank) { return rank == 0 ? 0.0 : 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

// HitRate@k and single-relevant-item NDCG@k, averaged over pairs.
inline RankingResult hitrate_ndcg(NeighborCache& cache, std::span<const QueryTargetPair> pairs, std::size_t k = 100) {
  require(!pairs.empty(), "hitrate_ndcg: empty pair list");
  require(k >= 1 && k <= cache.k(), "hitrate_ndcg: k exceeds neighbor cache depth");
  std::vector<std::uint32_t> queries;
  queries.reserve(pairs.size());
  for (const auto& p : pairs) queries.push_back(p.query);
  cache.prefetch(queries);

  RankingResult r;
  r.pairs = pairs.size();
  r.ranks.resize(pairs.size(), 0);
  std::vector<double> hits(pairs.size(), 0.0);
  CompensatedSum hit_sum, ndcg_sum;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& res = cache.get(pairs[i].query);
    if (!res.ok()) {
      ++r.failed_queries;
      continue;
    }
    const auto& nb = res.list.neighbors;
    const std::size_t depth = std::min(k, nb.size());
    for (std::size_t j = 0; j < depth; ++j) {
      if (nb[j].index == pairs[i].target) {
        r.ranks[i] = static_cast<std::uint32_t>(j + 1);
        break;
      }
    }
    if (r.ranks[i]) {
      hits[i] = 1.0;
      hit_sum.add(1.0);
      ndcg_sum.add(ndcg_at_rank(r.ranks[i]));
    }
  }
  r.hitrate = hit_sum.value() / static_cast<double>(pairs.size());
  r.ndcg = ndcg_sum.value() / static_cast<double>(pairs.size());
  r.hitrate_se = standard_error(hits);
  return r;
}

inline RankingResult hitrate_ndcg(const EmbeddingSpace& space, std::span<const QueryTargetPair> pairs, std::size_t k = 100, int workers = 1) {
  NeighborIndex index(space);
  NeighborCache cache(index, k, workers);
  return hitrate_ndcg(cache, pairs, k);
}

struct VrcResult {
  double value = 0.0;
  double between = 0.0;  // SS_B
  double within = 0.0;   // SS_W
  std::size_t points = 0;
  std::size_t classes = 0;
  bool degenerate_within = false;  // SS_W == 0, value is +inf
};

// Calinski-Harabasz index over labeled rows. labels[i] < 0 marks an unlabeled row.
inline VrcResult vrc(const EmbeddingSpace& space, std::span<const std::int32_t> labels) {
  require(labels.size() == space.size(), "vrc: label count must equal vocabulary size");
  const auto d = static_cast<std::size_t>(space.dim);
  std::map<std::int32_t, std::size_t> class_slot;
  for (auto l : labels)
    if (l >= 0) class_slot.emplace(l, 0);
  std::size_t slot = 0;
  for (auto& kv : class_slot) kv.second = slot++;
  const std::size_t k = class_slot.size();
  require(k >= 2, "vrc: need at least 2 classes");

  std::vector<double> centroid(k * d, 0.0), grand(d, 0.0);
  std::vector<std::size_t> count(k, 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = class_slot[labels[i]];
    const auto r = space.row(i);
    for (std::size_t t = 0; t < d; ++t) {
      centroid[c * d + t] += r[t];
      grand[t] += r[t];
    }
    ++count[c];
    ++n;
  }
  require(n > k, "vrc: need more labeled points than classes");
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t t = 0; t < d; ++t) centroid[c * d + t] /= static_cast<double>(count[c]);
  for (auto& g : grand) g /= static_cast<double>(n);

  CompensatedSum ssb, ssw;
  for (std::size_t c = 0; c < k; ++c) {
    double dist = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      const double diff = centroid[c * d + t] - grand[t];
      dist += diff * diff;
    }
    ssb.add(static_cast<double>(count[c]) * dist);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = class_slot[labels[i]];
    const auto r = space.row(i);
    double dist = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      const double diff = static_cast<double>(r[t]) - centroid[c * d + t];
      dist += diff * diff;
    }
    ssw.add(dist);
  }
  VrcResult res;
  res.between = ssb.value();
  res.within = ssw.value();
  res.points = n;
  res.classes = k;
  if (res.within <= 0.0) {
    res.degenerate_within = true;
    res.value = res.between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return res;
  }
  res.value = (res.between / static_cast<double>(k - 1)) / (res.within / static_cast<double>(n - k));
  return res;
}

enum class LabelKind { genre, artist };

inline std::string_view to_string(LabelKind m) { return m == LabelKind::genre ? "genre" : "artist"; }

// Dense class ids per vocabulary row from the catalog; -1 when the song or its label is missing.
inline std::vector<std::int32_t> catalog_labels(const Vocabulary& vocab, const Catalog& catalog, LabelKind kind) {
  std::map<std::string, std::int32_t> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto* e = catalog.find(vocab.id(i));
    if (!e) continue;
    const auto& name = kind == LabelKind::genre ? e->genre : e->artist;
    if (!name.empty()) ids.emplace(name, 0);
  }
  std::int32_t next = 0;
  for (auto& kv : ids) kv.second = next++;
  std::vector<std::int32_t> out(vocab.size(), -1);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto* e = catalog.find(vocab.id(i));
    if (!e) continue;
    const auto& name = kind == LabelKind::genre ? e->genre : e->artist;
    if (!name.empty()) out[i] = ids[name];
  }
  return out;
}

struct CoherencePlan {
  std::size_t neighbors = 50;
  // genre plan
  std::uint64_t min_plays = 10000;
  std::size_t top_genres = 10;
  std::size_t genre_songs = 500;
  // artist plan
  std::size_t min_artist_songs = 25;
  std::size_t artists = 125;
  std::size_t songs_per_artist = 5;
  std::size_t artist_strata = 5;  // popularity strata for artist sampling
};

struct CoherenceResult {
  double value = 0.0;
  std::size_t queries = 0;
  std::size_t excluded = 0;  // sampled queries lacking a label or neighbors
  std::size_t target = 0;    // queries the plan asked for
  std::vector<std::size_t> strata_sizes;
};

// Mean fraction of the top-n neighbors sharing the query's label.
inline CoherenceResult coherence_for_queries(NeighborCache& cache, std::span<const std::int32_t> labels, std::span<const std::uint32_t> queries,
                                             std::size_t n) {
  require(n >= 1 && n <= cache.k(), "coherence: neighbor count exceeds cache depth");
  cache.prefetch(queries);
  CoherenceResult r;
  CompensatedSum s;
  for (auto q : queries) {
    if (q >= labels.size() || labels[q] < 0) {
      ++r.excluded;
      continue;
    }
    const auto& res = cache.get(q);
    if (!res.ok() || res.list.neighbors.empty()) {
      ++r.excluded;
      continue;
    }
    const auto& nb = res.list.neighbors;
    const std::size_t depth = std::min(n, nb.size());
    std::size_t same = 0;
    for (std::size_t j = 0; j < depth; ++j) same += labels[nb[j].index] == labels[q];
    s.add(static_cast<double>(same) / static_cast<double>(depth));
    ++r.queries;
  }
  require(r.queries > 0, "coherence: no usable queries");
  r.value = s.value() / static_cast<double>(r.queries);
  return r;
}

struct CoherenceSample {
  std::vector<std::uint32_t> queries;
  std::size_t target = 0;
  std::vector<std::size_t> strata_sizes;
};

namespace detail {
template <class T>
std::vector<T> take_random(std::vector<T> pool, std::size_t m, Rng& rng) {
  shuffle(pool.begin(), pool.end(), rng);
  if (pool.size() > m) pool.resize(m);
  return pool;
}
}  // namespace detail

// Songs with at least min_plays plays, stratified over the most played genres.
inline CoherenceSample sample_genre_queries(const Vocabulary& vocab, const Catalog& catalog, const CoherencePlan& plan, std::uint64_t seed) {
  std::map<std::string, std::uint64_t> genre_plays;
  for (const auto& [id, e] : catalog.entries)
    if (!e.genre.empty()) genre_plays[e.genre] += e.play_count;
  std::vector<std::pair<std::string, std::uint64_t>> ranked(genre_plays.begin(), genre_plays.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t g = std::min(plan.top_genres, ranked.size());
  require(g >= 1, "coherence: catalog has no genres");

  std::map<std::string, std::vector<std::uint32_t>> eligible;
  for (std::size_t i = 0; i < g; ++i) eligible[ranked[i].first];
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto* e = catalog.find(vocab.id(i));
    if (!e || e->play_count < plan.min_plays) continue;
    auto it = eligible.find(e->genre);
    if (it != eligible.end()) it->second.push_back(static_cast<std::uint32_t>(i));
  }
  CoherenceSample out;
  out.target = plan.genre_songs;
  auto rng = make_rng(seed, streams::kCoherence);
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t quota = plan.genre_songs / g + (i < plan.genre_songs % g ? 1 : 0);
    auto picked = detail::take_random(eligible[ranked[i].first], quota, rng);
    out.strata_sizes.push_back(picked.size());
    out.queries.insert(out.queries.end(), picked.begin(), picked.end());
  }
  return out;
}

// Artists with at least min_artist_songs embedded songs, stratified by artist play
// count; songs_per_artist random songs each.
inline CoherenceSample sample_artist_queries(const Vocabulary& vocab, const Catalog& catalog, const CoherencePlan& plan, std::uint64_t seed) {
  std::map<std::string, std::vector<std::uint32_t>> songs;
  std::map<std::string, std::uint64_t> plays;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto* e = catalog.find(vocab.id(i));
    if (!e || e->artist.empty()) continue;
    songs[e->artist].push_back(static_cast<std::uint32_t>(i));
    plays[e->artist] += e->play_count;
  }
  std::vector<std::string> artists;
  for (const auto& [a, s] : songs)
    if (s.size() >= plan.min_artist_songs) artists.push_back(a);
  std::stable_sort(artists.begin(), artists.end(), [&](const auto& a, const auto& b) { return plays[a] > plays[b]; });

  CoherenceSample out;
  out.target = plan.artists * plan.songs_per_artist;
  const std::size_t strata = std::max<std::size_t>(1, plan.artist_strata);
  auto rng = make_rng(seed, streams::kCoherence + 100);
  for (std::size_t s = 0; s < strata; ++s) {
    const std::size_t lo = artists.size() * s / strata, hi = artists.size() * (s + 1) / strata;
    std::vector<std::string> pool(artists.begin() + static_cast<std::ptrdiff_t>(lo), artists.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::size_t quota = plan.artists / strata + (s < plan.artists % strata ? 1 : 0);
    auto picked = detail::take_random(std::move(pool), quota, rng);
    std::size_t added = 0;
    for (const auto& a : picked) {
      auto qs = detail::take_random(songs[a], plan.songs_per_artist, rng);
      out.queries.insert(out.queries.end(), qs.begin(), qs.end());
      added += qs.size();
    }
    out.strata_sizes.push_back(added);
  }
  return out;
}

// Local genre/artist coherence under a sampling plan. Fails if fewer than half of
// the requested queries can be drawn.
inline CoherenceResult local_coherence(NeighborCache& cache, const Vocabulary& vocab, const Catalog& catalog, LabelKind kind,
                                       const CoherencePlan& plan, std::uint64_t seed) {
  const auto sample = kind == LabelKind::genre ? sample_genre_queries(vocab, catalog, plan, seed) : sample_artist_queries(vocab, catalog, plan, seed);
  if (2 * sample.queries.size() < sample.target) {
    std::string sizes;
    for (auto s : sample.strata_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
    throw RuntimeFailure("coherence(" + std::string(to_string(kind)) + "): plan filled " + std::to_string(sample.queries.size()) + " of " +
                         std::to_string(sample.target) + " queries (strata " + sizes + ")");
  }
  const auto labels = catalog_labels(vocab, catalog, kind);
  auto r = coherence_for_queries(cache, labels, sample.queries, plan.neighbors);
  r.target = sample.target;
  r.strata_sizes = sample.strata_sizes;
  return r;
}

}  // namespace songemb
