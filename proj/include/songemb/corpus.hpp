#pragma once

// Sequence corpora, catalogs, deterministic splits and vocabularies.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "songemb/error.hpp"
#include "songemb/rng.hpp"

namespace songemb {

enum class Split : std::uint8_t { train, validation, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation" || s == "val") return Split::validation;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split label '" + std::string(s) + "'");
}

// Interned song-id strings shared by a dataset and everything derived from it.
class Symbols {
 public:
  std::uint32_t intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }
  std::optional<std::uint32_t> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

using Sequence = std::vector<std::uint32_t>;

struct SequenceDataset {
  std::shared_ptr<const Symbols> symbols;
  std::vector<Sequence> sequences;
  std::vector<Split> labels;  // empty until split()
  std::uint64_t seed = 0;
  std::size_t dropped_short = 0;

  bool has_labels() const { return labels.size() == sequences.size() && !sequences.empty(); }

  // Unlabeled datasets treat every sequence as training data.
  Split label(std::size_t i) const { return has_labels() ? labels[i] : Split::train; }

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sequences.size(); ++i)
      if (label(i) == s) out.push_back(i);
    return out;
  }
  std::size_t count(Split s) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < sequences.size(); ++i) c += label(i) == s;
    return c;
  }
  std::size_t total_tokens(Split s) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < sequences.size(); ++i)
      if (label(i) == s) c += sequences[i].size();
    return c;
  }
};

struct CatalogEntry {
  std::string artist;
  std::string genre;
  std::uint64_t play_count = 0;
};

struct Catalog {
  std::unordered_map<std::string, CatalogEntry> entries;

  const CatalogEntry* find(const std::string& song) const {
    auto it = entries.find(song);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Dense index over the retained training tokens, most frequent first.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Order of `ids` defines the dense index. Frequencies may be empty for loaded spaces.
  Vocabulary(std::vector<std::string> ids, std::vector<std::uint64_t> freq) : ids_(std::move(ids)), freq_(std::move(freq)) {
    require(freq_.empty() || freq_.size() == ids_.size(), "vocabulary: frequency size mismatch");
    if (freq_.empty()) freq_.assign(ids_.size(), 0);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const bool inserted = index_.emplace(ids_[i], static_cast<std::uint32_t>(i)).second;
      require(inserted, "vocabulary: duplicate song id '" + ids_[i] + "'");
      total_ += freq_[i];
    }
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::uint64_t frequency(std::size_t i) const { return freq_.at(i); }
  const std::vector<std::uint64_t>& frequencies() const { return freq_; }
  std::uint64_t total_events() const { return total_; }

  std::optional<std::uint32_t> find(const std::string& song) const {
    auto it = index_.find(song);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Symbol id -> vocabulary index, -1 for out-of-vocabulary symbols.
  std::vector<std::int32_t> map_symbols(const Symbols& symbols) const {
    std::vector<std::int32_t> out(symbols.size(), -1);
    for (std::uint32_t s = 0; s < symbols.size(); ++s) {
      if (auto i = find(symbols.name(s))) out[s] = static_cast<std::int32_t>(*i);
    }
    return out;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t total_ = 0;
};

namespace detail {

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  return in;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().remove_suffix(1);
  return out;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& what) {
  std::uint64_t v = 0;
  require(!s.empty(), what + ": empty integer field");
  for (char c : s) {
    require(c >= '0' && c <= '9', what + ": not a non-negative integer '" + std::string(s) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace detail

// One sequence per line, whitespace-separated tokens. '#' starts a comment line.
inline SequenceDataset parse_sequences(std::istream& in) {
  auto symbols = std::make_shared<Symbols>();
  SequenceDataset ds;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 2) {
      ++ds.dropped_short;
      continue;
    }
    Sequence seq;
    seq.reserve(tokens.size());
    for (auto t : tokens) seq.push_back(symbols->intern(t));
    ds.sequences.push_back(std::move(seq));
  }
  if (ds.sequences.empty()) throw ValidationError("zero usable sequences");
  ds.symbols = std::move(symbols);
  return ds;
}

inline SequenceDataset load_sequences(const std::string& path) {
  auto in = detail::open_for_read(path);
  try {
    return parse_sequences(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void write_sequences(const std::string& path, const SequenceDataset& ds) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  for (const auto& seq : ds.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << ds.symbols->name(seq[i]);
    }
    out << '\n';
  }
}

// TSV with header `song_id artist_id genre_id play_count`.
inline Catalog parse_catalog(std::istream& in) {
  Catalog cat;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_tabs(line);
    if (header) {
      header = false;
      if (!f.empty() && f[0] == "song_id") continue;
    }
    require(f.size() >= 4, "catalog line " + std::to_string(lineno) + ": expected 4 tab-separated fields");
    CatalogEntry e{std::string(f[1]), std::string(f[2]),
                   detail::parse_u64(f[3], "catalog line " + std::to_string(lineno))};
    cat.entries.insert_or_assign(std::string(f[0]), std::move(e));
  }
  return cat;
}

inline Catalog load_catalog(const std::string& path) {
  auto in = detail::open_for_read(path);
  return parse_catalog(in);
}

inline void write_catalog(const std::string& path, const Catalog& cat) {
  std::vector<const std::pair<const std::string, CatalogEntry>*> rows;
  for (const auto& kv : cat.entries) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "song_id\tartist_id\tgenre_id\tplay_count\n";
  for (auto* r : rows) out << r->first << '\t' << r->second.artist << '\t' << r->second.genre << '\t' << r->second.play_count << '\n';
}

struct SplitRatios {
  double train = 0.98;
  double validation = 0.01;
  double test = 0.01;
};

// Whole sequences are assigned by one seeded permutation: the head goes to train,
// then validation, then test.
inline SequenceDataset split(const SequenceDataset& ds, SplitRatios r, std::uint64_t seed) {
  require(r.train > 0 && r.validation > 0 && r.test > 0, "ratios must be positive");
  require(std::abs(r.train + r.validation + r.test - 1.0) < 1e-9, "ratios must sum to 1");
  const std::size_t n = ds.sequences.size();
  require(n >= 3, "split needs at least 3 sequences, got " + std::to_string(n));

  auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.validation));
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.test));
  n_val = std::max<std::size_t>(n_val, 1);
  n_test = std::max<std::size_t>(n_test, 1);
  while (n_val + n_test > n - 1) {
    if (n_val >= n_test && n_val > 1) --n_val;
    else if (n_test > 1) --n_test;
    else break;
  }
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(seed, streams::kSplit);
  shuffle(perm.begin(), perm.end(), rng);

  SequenceDataset out = ds;
  out.labels.assign(n, Split::train);
  out.seed = seed;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) out.labels[perm[i]] = Split::validation;
  for (std::size_t i = n_train + n_val; i < n; ++i) out.labels[perm[i]] = Split::test;
  return out;
}

// Keeps round(rate * n_train) training sequences. The kept set is a prefix of one
// seeded permutation, so smaller rates are nested in larger ones for a fixed seed.
inline SequenceDataset subsample(const SequenceDataset& ds, double rate, std::uint64_t seed) {
  require(rate > 0.0 && rate <= 1.0, "subsample rate must be in (0, 1]");
  const auto train = ds.indices(Split::train);
  if (rate == 1.0) return ds;
  const auto keep = static_cast<std::size_t>(std::llround(rate * static_cast<double>(train.size())));
  require(keep >= 1, "subsample rate leaves no training sequences");

  std::vector<std::size_t> perm(train.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(seed, streams::kSubsample);
  shuffle(perm.begin(), perm.end(), rng);
  std::vector<bool> kept(ds.sequences.size(), false);
  for (std::size_t i = 0; i < keep; ++i) kept[train[perm[i]]] = true;

  SequenceDataset out;
  out.symbols = ds.symbols;
  out.seed = ds.seed;
  out.dropped_short = ds.dropped_short;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const Split s = ds.label(i);
    if (s == Split::train && !kept[i]) continue;
    out.sequences.push_back(ds.sequences[i]);
    out.labels.push_back(s);
  }
  return out;
}

// Counts over the training split; tokens below min_count are dropped.
inline Vocabulary build_vocabulary(const SequenceDataset& ds, std::uint64_t min_count) {
  require(min_count >= 1, "min-count must be >= 1");
  std::vector<std::uint64_t> counts(ds.symbols->size(), 0);
  std::size_t n_train = 0;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != Split::train) continue;
    ++n_train;
    for (auto s : ds.sequences[i]) ++counts[s];
  }
  require(n_train > 0, "build_vocabulary: no training sequences");
  std::vector<std::uint32_t> kept;
  for (std::uint32_t s = 0; s < counts.size(); ++s)
    if (counts[s] >= min_count) kept.push_back(s);
  if (kept.empty()) throw ValidationError("empty vocabulary after min-count filtering");
  std::sort(kept.begin(), kept.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return ds.symbols->name(a) < ds.symbols->name(b);
  });
  std::vector<std::string> ids;
  std::vector<std::uint64_t> freq;
  for (auto s : kept) {
    ids.push_back(ds.symbols->name(s));
    freq.push_back(counts[s]);
  }
  return Vocabulary(std::move(ids), std::move(freq));
}

inline void write_split_manifest(const std::string& path, const SequenceDataset& ds) {
  require(ds.has_labels(), "split manifest needs a split dataset");
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "sequence_index\tsplit\n";
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) out << i << '\t' << to_string(ds.labels[i]) << '\n';
}

// Applies labels from a manifest written by write_split_manifest for the same sequence file.
inline SequenceDataset apply_split_manifest(const SequenceDataset& ds, const std::string& path) {
  auto in = detail::open_for_read(path);
  SequenceDataset out = ds;
  out.labels.assign(ds.sequences.size(), Split::train);
  std::vector<bool> seen(ds.sequences.size(), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("sequence_index", 0) == 0) continue;
    const auto f = detail::split_tabs(line);
    require(f.size() >= 2, path + ": malformed manifest line");
    const auto idx = detail::parse_u64(f[0], path);
    require(idx < ds.sequences.size(), path + ": sequence index out of range");
    out.labels[idx] = parse_split(f[1]);
    seen[idx] = true;
  }
  require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }), path + ": manifest does not cover every sequence");
  return out;
}

inline void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "song_id\tfrequency\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) out << vocab.id(i) << '\t' << vocab.frequency(i) << '\n';
}

// Sequences of one split translated to vocabulary indices with OOV tokens removed.
// With drop_last the final raw token of each sequence is withheld (in-set masking).
inline std::vector<std::vector<std::uint32_t>> encode_split(const SequenceDataset& ds, const Vocabulary& vocab, Split which,
                                                            bool drop_last = false) {
  const auto map = vocab.map_symbols(*ds.symbols);
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != which) continue;
    const auto& raw = ds.sequences[i];
    const std::size_t n = drop_last ? raw.size() - 1 : raw.size();
    std::vector<std::uint32_t> seq;
    seq.reserve(n);
    for (std::size_t t = 0; t < n; ++t)
      if (map[raw[t]] >= 0) seq.push_back(static_cast<std::uint32_t>(map[raw[t]]));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace songemb
