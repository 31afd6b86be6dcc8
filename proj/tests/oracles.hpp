#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Written from the definitions, without the library's fast paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "songemb/corpus.hpp"
#include "songemb/rng.hpp"
#include "songemb/sgns.hpp"

namespace songemb::oracle {

inline double cosine(const EmbeddingSpace& s, std::size_t a, std::size_t b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t t = 0; t < static_cast<std::size_t>(s.dim); ++t) {
    const long double x = s.row(a)[t], y = s.row(b)[t];
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

// Full sort of every other row; ties by ascending index.
inline std::vector<std::uint32_t> topk(const EmbeddingSpace& s, std::uint32_t q, std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::uint32_t j = 0; j < s.size(); ++j)
    if (j != q) all.emplace_back(-cosine(s, q, j), j);
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

inline EmbeddingSpace random_space(std::size_t n, std::size_t d, std::uint64_t seed) {
  EmbeddingSpace s;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
  s.vocab = Vocabulary(ids, {});
  s.dim = static_cast<int>(d);
  auto rng = make_rng(seed, 77);
  for (std::size_t i = 0; i < n * d; ++i) s.vectors.push_back(static_cast<float>(2 * uniform01(rng) - 1));
  return s;
}

// Adjacent in-vocabulary bigrams of training sequences, as unordered index pairs.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> bigrams(const SequenceDataset& ds, const Vocabulary& vocab) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.label(i) != Split::train) continue;
    const auto& seq = ds.sequences[i];
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      const auto a = vocab.find(ds.symbols->name(seq[t]));
      const auto b = vocab.find(ds.symbols->name(seq[t + 1]));
      if (a && b) out.emplace_back(std::min(*a, *b), std::max(*a, *b));
    }
  }
  return out;
}

// Pearson X^2 as the sum of (O - E)^2 / E over the four cells of the table
// "first is i" x "second is j", each bigram entered in both orientations at weight 1/2.
inline double chi_squared(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& bg, std::uint32_t i, std::uint32_t j) {
  long double cell[2][2] = {{0, 0}, {0, 0}};
  for (const auto& [a, b] : bg) {
    cell[a == i ? 0 : 1][b == j ? 0 : 1] += 0.5L;
    cell[b == i ? 0 : 1][a == j ? 0 : 1] += 0.5L;
  }
  const long double n = cell[0][0] + cell[0][1] + cell[1][0] + cell[1][1];
  long double x2 = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const long double e = (cell[r][0] + cell[r][1]) * (cell[0][c] + cell[1][c]) / n;
      if (e == 0) return 0.0;
      x2 += (cell[r][c] - e) * (cell[r][c] - e) / e;
    }
  return static_cast<double>(x2);
}

// Same statistic with the margins tallied once, for corpora too large to rescan per pair.
inline std::set<std::pair<std::uint32_t, std::uint32_t>> hard_negatives(const SequenceDataset& ds, const Vocabulary& vocab, double threshold,
                                                                        std::uint64_t min_cooccurrence) {
  const auto bg = bigrams(ds, vocab);
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> counts;
  std::vector<long double> margin(vocab.size(), 0);  // weight of ordered bigrams whose first slot is i
  for (const auto& p : bg) {
    ++counts[p];
    margin[p.first] += 0.5L;
    margin[p.second] += 0.5L;
  }
  const long double n = static_cast<long double>(bg.size());
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& [p, c] : counts) {
    if (p.first == p.second || c < min_cooccurrence) continue;
    const long double o11 = 0.5L * static_cast<long double>(c);
    const long double ri = margin[p.first], cj = margin[p.second];
    const long double cell[2][2] = {{o11, ri - o11}, {cj - o11, n - ri - cj + o11}};
    const long double rows[2] = {ri, n - ri}, cols[2] = {cj, n - cj};
    long double x2 = 0;
    bool degenerate = false;
    for (int r = 0; r < 2; ++r)
      for (int k = 0; k < 2; ++k) {
        const long double e = rows[r] * cols[k] / n;
        if (e == 0) degenerate = true;
        else x2 += (cell[r][k] - e) * (cell[r][k] - e) / e;
      }
    if (degenerate) x2 = 0;
    if (static_cast<double>(x2) < threshold) out.insert(p);
  }
  return out;
}

// Calinski-Harabasz from its definition, two passes in long double.
inline double vrc(const EmbeddingSpace& s, const std::vector<std::int32_t>& labels) {
  const std::size_t d = static_cast<std::size_t>(s.dim);
  std::map<std::int32_t, std::pair<std::vector<long double>, long double>> cent;
  std::vector<long double> grand(d, 0);
  long double n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& c = cent[labels[i]];
    c.first.resize(d, 0);
    for (std::size_t t = 0; t < d; ++t) {
      c.first[t] += s.row(i)[t];
      grand[t] += s.row(i)[t];
    }
    c.second += 1;
    n += 1;
  }
  for (auto& g : grand) g /= n;
  for (auto& [l, c] : cent)
    for (auto& v : c.first) v /= c.second;
  long double ssb = 0, ssw = 0;
  for (const auto& [l, c] : cent)
    for (std::size_t t = 0; t < d; ++t) ssb += c.second * (c.first[t] - grand[t]) * (c.first[t] - grand[t]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto& c = cent[labels[i]].first;
    for (std::size_t t = 0; t < d; ++t) ssw += (s.row(i)[t] - c[t]) * (s.row(i)[t] - c[t]);
  }
  const long double k = static_cast<long double>(cent.size());
  return static_cast<double>((ssb / (k - 1)) / (ssw / (n - k)));
}

// Popular songs p0, p1 drawn independently everywhere, plus a locked pair L1 L2
// that always appears together.
inline std::string planted_hardneg_corpus(std::uint64_t seed, std::size_t sequences = 3000) {
  auto rng = make_rng(seed, 91);
  std::vector<std::string> songs;
  std::vector<double> cum;
  double total = 0;
  for (int i = 0; i < 40; ++i) {
    songs.push_back((i < 2 ? "p" : "f") + std::to_string(i));
    total += i < 2 ? 6.0 : 1.0 / (1.0 + 0.1 * i);
    cum.push_back(total);
  }
  std::ostringstream out;
  for (std::size_t s = 0; s < sequences; ++s) {
    std::vector<std::string> seq;
    for (int t = 0; t < 6; ++t) {
      const double u = uniform01(rng) * total;
      seq.push_back(songs[static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin())]);
    }
    if (s % 10 == 0) {
      const auto at = static_cast<std::ptrdiff_t>(uniform_index(rng, seq.size() + 1));
      seq.insert(seq.begin() + at, {"L1", "L2"});
    }
    for (std::size_t t = 0; t < seq.size(); ++t) out << (t ? " " : "") << seq[t];
    out << '\n';
  }
  return out.str();
}

}  // namespace songemb::oracle
