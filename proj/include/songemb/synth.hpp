#pragma once

// Synthetic listening corpus with planted genre blocks and Zipf popularity.
//
// Songs are ranked by popularity (weight 1/(r+1)^s). Rank r belongs to genre
// block r mod G and sits at position r / G inside it. A walk stays in its block
// with probability within_block; inside the block it moves to one of the song's
// fixed successors (nearby positions) with probability successor_prob, otherwise
// it draws a block song by popularity. Leaving the block draws a song of another
// block by popularity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/rng.hpp"
#include "songemb/sgns.hpp"

namespace songemb {

struct SynthConfig {
  std::size_t sequences = 50000;
  std::size_t songs = 6000;
  std::size_t genres = 8;
  double within_block = 0.9;
  double zipf = 1.0;
  double successor_prob = 0.9;
  std::size_t successors = 4;
  std::size_t successor_span = 15;  // successors lie within this many block positions
  std::size_t artist_size = 10;     // consecutive block positions per artist
  double mean_length = 5.0;         // lengths are 2 + geometric
  std::uint64_t seed = 1;

  void validate() const {
    require(sequences >= 3, "synth: need at least 3 sequences");
    require(genres >= 1, "synth: need at least one genre block");
    require(songs >= 2 * genres, "synth: need at least two songs per block");
    require(within_block >= 0.0 && within_block <= 1.0, "synth: within-block probability must be in [0, 1]");
    require(genres > 1 || within_block == 1.0, "synth: a single block requires within-block probability 1");
    require(successor_prob >= 0.0 && successor_prob <= 1.0, "synth: successor probability must be in [0, 1]");
    require(zipf >= 0.0, "synth: Zipf exponent must be >= 0");
    require(successors >= 1 && successor_span >= 1, "synth: need at least one successor within span >= 1");
    require(artist_size >= 1, "synth: artist size must be >= 1");
    require(mean_length >= 2.0, "synth: mean length must be >= 2");
  }
};

inline nlohmann::json to_json(const SynthConfig& c) {
  return {{"sequences", c.sequences},       {"songs", c.songs},           {"genres", c.genres},
          {"within_block", c.within_block}, {"zipf", c.zipf},             {"successor_prob", c.successor_prob},
          {"successors", c.successors},     {"successor_span", c.successor_span}, {"artist_size", c.artist_size},
          {"mean_length", c.mean_length},   {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c = {}) {
  c.sequences = j.value("sequences", c.sequences);
  c.songs = j.value("songs", c.songs);
  c.genres = j.value("genres", c.genres);
  c.within_block = j.value("within_block", c.within_block);
  c.zipf = j.value("zipf", c.zipf);
  c.successor_prob = j.value("successor_prob", c.successor_prob);
  c.successors = j.value("successors", c.successors);
  c.successor_span = j.value("successor_span", c.successor_span);
  c.artist_size = j.value("artist_size", c.artist_size);
  c.mean_length = j.value("mean_length", c.mean_length);
  c.seed = j.value("seed", c.seed);
  return c;
}

struct SynthCorpus {
  SequenceDataset dataset;  // unsplit
  Catalog catalog;          // play_count = occurrences in the corpus
  std::vector<std::uint32_t> block_of;  // per symbol id
  std::size_t within_transitions = 0;
  std::size_t transitions = 0;
};

inline std::string synth_song_id(std::size_t rank) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", rank);
  return buf;
}

namespace detail {
class CumulativeSampler {
 public:
  explicit CumulativeSampler(const std::vector<double>& w) : cum_(w.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) cum_[i] = s += w[i];
  }
  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    return std::min(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
  }

 private:
  std::vector<double> cum_;
};
}  // namespace detail

inline SynthCorpus generate_synth_corpus(const SynthConfig& c) {
  c.validate();
  auto rng = make_rng(c.seed, streams::kSynth);
  const std::size_t G = c.genres;

  std::vector<double> weight(c.songs);
  for (std::size_t r = 0; r < c.songs; ++r) weight[r] = std::pow(static_cast<double>(r + 1), -c.zipf);

  // Block members in popularity order.
  std::vector<std::vector<std::uint32_t>> members(G);
  for (std::size_t r = 0; r < c.songs; ++r) members[r % G].push_back(static_cast<std::uint32_t>(r));
  std::vector<detail::CumulativeSampler> block_sampler;
  for (const auto& m : members) {
    std::vector<double> w;
    for (auto r : m) w.push_back(weight[r]);
    block_sampler.emplace_back(w);
  }
  const detail::CumulativeSampler global(weight);

  std::vector<std::vector<std::uint32_t>> succ(c.songs);
  for (std::size_t r = 0; r < c.songs; ++r) {
    const auto& m = members[r % G];
    const auto pos = static_cast<std::int64_t>(r / G);
    const auto n = static_cast<std::int64_t>(m.size());
    const auto span = static_cast<std::int64_t>(c.successor_span);
    for (std::size_t k = 0; k < c.successors; ++k) {
      std::int64_t d = 0;
      while (d == 0) d = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(2 * span + 1))) - span;
      std::int64_t p = pos + d;
      if (p < 0) p = -p;
      if (p >= n) p = 2 * (n - 1) - p;
      p = std::clamp<std::int64_t>(p, 0, n - 1);
      if (p == pos) p = pos + 1 < n ? pos + 1 : pos - 1;
      succ[r].push_back(m[static_cast<std::size_t>(p)]);
    }
  }

  auto symbols = std::make_shared<Symbols>();
  for (std::size_t r = 0; r < c.songs; ++r) symbols->intern(synth_song_id(r));

  SynthCorpus out;
  out.block_of.resize(c.songs);
  for (std::size_t r = 0; r < c.songs; ++r) out.block_of[r] = static_cast<std::uint32_t>(r % G);
  std::vector<std::uint64_t> plays(c.songs, 0);
  const double cont = (c.mean_length - 2.0) / (c.mean_length - 1.0);
  out.dataset.sequences.reserve(c.sequences);
  for (std::size_t s = 0; s < c.sequences; ++s) {
    std::size_t len = 2;
    while (uniform01(rng) < cont) ++len;
    Sequence seq;
    seq.reserve(len);
    auto cur = static_cast<std::uint32_t>(global(rng));
    seq.push_back(cur);
    while (seq.size() < len) {
      const std::size_t b = cur % G;
      std::uint32_t next;
      if (uniform01(rng) < c.within_block) {
        if (uniform01(rng) < c.successor_prob) next = succ[cur][uniform_index(rng, succ[cur].size())];
        else next = members[b][block_sampler[b](rng)];
        out.within_transitions += 1;
      } else {
        std::size_t other = uniform_index(rng, G - 1);
        if (other >= b) ++other;
        next = members[other][block_sampler[other](rng)];
      }
      ++out.transitions;
      seq.push_back(next);
      cur = next;
    }
    for (auto t : seq) ++plays[t];
    out.dataset.sequences.push_back(std::move(seq));
  }
  out.dataset.symbols = std::move(symbols);

  for (std::size_t r = 0; r < c.songs; ++r) {
    const std::size_t b = r % G, pos = r / G;
    CatalogEntry e;
    e.genre = "g" + std::to_string(b);
    e.artist = "a" + std::to_string(b) + "_" + std::to_string(pos / c.artist_size);
    e.play_count = plays[r];
    out.catalog.entries.emplace(synth_song_id(r), std::move(e));
  }
  return out;
}

// Reference space for the observation generator: each song is its block's axis
// plus isotropic Gaussian noise, so same-block cosines are high and cross-block
// cosines scatter around zero.
inline EmbeddingSpace planted_space(const SynthCorpus& corpus, int dim = 16, double noise = 0.35, std::uint64_t seed = 1) {
  const std::size_t n = corpus.block_of.size();
  std::size_t blocks = 0;
  for (auto b : corpus.block_of) blocks = std::max<std::size_t>(blocks, b + 1);
  require(dim >= static_cast<int>(blocks), "planted space: dim must be at least the number of blocks");
  std::vector<std::string> ids;
  std::vector<std::uint64_t> freq;
  for (std::size_t r = 0; r < n; ++r) {
    ids.push_back(corpus.dataset.symbols->name(static_cast<std::uint32_t>(r)));
    freq.push_back(corpus.catalog.find(ids.back())->play_count);
  }
  EmbeddingSpace space;
  space.vocab = Vocabulary(std::move(ids), std::move(freq));
  space.dim = dim;
  space.vectors.assign(n * static_cast<std::size_t>(dim), 0.0f);
  auto rng = make_rng(seed, streams::kSynth + 1);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = space.row(r);
    for (int k = 0; k < dim; k += 2) {
      // Box-Muller pair
      const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
      const double rad = std::sqrt(-2.0 * std::log(u1));
      row[static_cast<std::size_t>(k)] = static_cast<float>(noise * rad * std::cos(2.0 * std::numbers::pi * u2));
      if (k + 1 < dim) row[static_cast<std::size_t>(k + 1)] = static_cast<float>(noise * rad * std::sin(2.0 * std::numbers::pi * u2));
    }
    row[corpus.block_of[r]] += 1.0f;
  }
  return space;
}

}  // namespace songemb
