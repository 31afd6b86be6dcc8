#pragma once

// MetricReport: the full metric vector for one embedding space, and the fixed
// evaluation setup (pairs, labels, hard negatives) it is computed against.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "songemb/corpus.hpp"
#include "songemb/hardneg.hpp"
#include "songemb/metrics.hpp"
#include "songemb/neighbors.hpp"
#include "songemb/sgns.hpp"

namespace songemb {

struct RankingSummary {
  double hitrate = 0.0;
  double ndcg = 0.0;
  double hitrate_se = 0.0;
  std::size_t pairs = 0;
  std::size_t dropped = 0;
  std::size_t failed_queries = 0;
};

struct MetricReport {
  double hitrate = 0.0;  // mean of in-set and out-of-set
  double ndcg = 0.0;
  double hitrate_se = 0.0;
  std::optional<RankingSummary> in_set;
  std::optional<RankingSummary> out_of_set;
  std::optional<double> vrc_genre;
  std::optional<double> vrc_artist;
  std::optional<double> hardneg;
  std::optional<double> coherence_genre;
  std::optional<double> coherence_artist;
  std::vector<std::string> warnings;
};

namespace detail {
inline nlohmann::json opt_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}
inline std::optional<double> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}
inline nlohmann::json to_json(const RankingSummary& r) {
  return {{"hitrate", r.hitrate}, {"ndcg", r.ndcg}, {"hitrate_se", r.hitrate_se}, {"pairs", r.pairs}, {"dropped", r.dropped}, {"failed_queries", r.failed_queries}};
}
inline RankingSummary ranking_from_json(const nlohmann::json& j) {
  return {j.at("hitrate").get<double>(), j.at("ndcg").get<double>(),       j.value("hitrate_se", 0.0),
          j.value("pairs", std::size_t{0}), j.value("dropped", std::size_t{0}), j.value("failed_queries", std::size_t{0})};
}
}  // namespace detail

inline nlohmann::json to_json(const MetricReport& m) {
  nlohmann::json j = {{"hitrate", m.hitrate},
                      {"ndcg", m.ndcg},
                      {"hitrate_se", m.hitrate_se},
                      {"in_set", m.in_set ? detail::to_json(*m.in_set) : nlohmann::json(nullptr)},
                      {"out_of_set", m.out_of_set ? detail::to_json(*m.out_of_set) : nlohmann::json(nullptr)},
                      {"vrc_genre", detail::opt_json(m.vrc_genre)},
                      {"vrc_artist", detail::opt_json(m.vrc_artist)},
                      {"hardneg", detail::opt_json(m.hardneg)},
                      {"coherence_genre", detail::opt_json(m.coherence_genre)},
                      {"coherence_artist", detail::opt_json(m.coherence_artist)},
                      {"warnings", m.warnings}};
  return j;
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport m;
  m.hitrate = j.at("hitrate").get<double>();
  m.ndcg = j.at("ndcg").get<double>();
  m.hitrate_se = j.value("hitrate_se", 0.0);
  if (j.contains("in_set") && !j["in_set"].is_null()) m.in_set = detail::ranking_from_json(j["in_set"]);
  if (j.contains("out_of_set") && !j["out_of_set"].is_null()) m.out_of_set = detail::ranking_from_json(j["out_of_set"]);
  m.vrc_genre = detail::json_opt(j, "vrc_genre");
  m.vrc_artist = detail::json_opt(j, "vrc_artist");
  m.hardneg = detail::json_opt(j, "hardneg");
  m.coherence_genre = detail::json_opt(j, "coherence_genre");
  m.coherence_artist = detail::json_opt(j, "coherence_artist");
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

struct EvalOptions {
  std::size_t k = 100;
  Split held_out = Split::validation;
  PairMode pair_mode = PairMode::adjacent;
  bool in_set = true;
  bool out_of_set = true;
  bool coherence = false;
  CoherencePlan plan;
  // Hard-negative mining on the training split; disabled when min_cooccurrence == 0.
  std::uint64_t hardneg_min_cooccurrence = 5;
  double hardneg_threshold_factor = 1e-7;
  ThresholdBase hardneg_base = ThresholdBase::slots;
  std::optional<double> hardneg_threshold;  // absolute; overrides the factor
  int workers = 1;
  std::uint64_t seed = 1;
};

// Everything that stays fixed while different spaces over one vocabulary are compared.
struct EvalSetup {
  EvalOptions options;
  PairSet in_set;
  PairSet out_of_set;
  std::vector<std::int32_t> genre_labels;
  std::vector<std::int32_t> artist_labels;
  std::optional<HardNegativeSet> hard_negatives;
  std::vector<std::uint32_t> hardneg_queries;
  std::optional<Catalog> catalog;
  Vocabulary vocab;
};

inline EvalSetup make_eval_setup(const SequenceDataset& ds, const Vocabulary& vocab, const Catalog* catalog, const EvalOptions& opt) {
  EvalSetup s;
  s.options = opt;
  s.vocab = vocab;
  if (opt.in_set) s.in_set = make_inset_pairs(ds, vocab);
  if (opt.out_of_set && ds.count(opt.held_out) > 0) s.out_of_set = make_outset_pairs(ds, vocab, opt.held_out, opt.pair_mode);
  if (catalog) {
    s.catalog = *catalog;
    s.genre_labels = catalog_labels(vocab, *catalog, LabelKind::genre);
    s.artist_labels = catalog_labels(vocab, *catalog, LabelKind::artist);
  }
  if (opt.hardneg_min_cooccurrence > 0) {
    const auto stats = collect_bigrams(ds, vocab);
    const double thr = opt.hardneg_threshold ? *opt.hardneg_threshold : default_hardneg_threshold(stats, opt.hardneg_threshold_factor, opt.hardneg_base);
    s.hard_negatives = mine_hard_negatives(stats, thr, opt.hardneg_min_cooccurrence);
    s.hardneg_queries.resize(vocab.size());
    std::iota(s.hardneg_queries.begin(), s.hardneg_queries.end(), 0u);
  }
  return s;
}

namespace detail {
inline RankingSummary summarize(const RankingResult& r, std::size_t dropped) { return {r.hitrate, r.ndcg, r.hitrate_se, r.pairs, dropped, r.failed_queries}; }

inline std::optional<double> safe_vrc(const EmbeddingSpace& space, const std::vector<std::int32_t>& labels, const char* name, std::vector<std::string>& warnings) {
  if (labels.empty()) return std::nullopt;
  try {
    const auto v = vrc(space, labels);
    if (v.degenerate_within) warnings.push_back(std::string("vrc_") + name + ": zero within-class dispersion");
    return v.value;
  } catch (const std::exception& e) {
    warnings.push_back(std::string("vrc_") + name + ": " + e.what());
    return std::nullopt;
  }
}
}  // namespace detail

inline MetricReport evaluate(const EmbeddingSpace& space, const EvalSetup& setup) {
  require(space.size() == setup.vocab.size(), "evaluate: space and setup vocabularies differ");
  const auto& opt = setup.options;
  NeighborIndex index(space);
  const std::size_t depth = std::max(opt.k, opt.coherence ? opt.plan.neighbors : std::size_t{1});
  NeighborCache cache(index, depth, opt.workers);
  MetricReport m;
  if (index.zero_norm_count() > 0) m.warnings.push_back(std::to_string(index.zero_norm_count()) + " zero-norm vectors excluded from retrieval");

  std::vector<double> hr, nd, se2;
  if (!setup.in_set.pairs.empty()) {
    const auto r = hitrate_ndcg(cache, setup.in_set.pairs, opt.k);
    m.in_set = detail::summarize(r, setup.in_set.dropped_oov);
    hr.push_back(r.hitrate);
    nd.push_back(r.ndcg);
    se2.push_back(r.hitrate_se * r.hitrate_se);
  }
  if (!setup.out_of_set.pairs.empty()) {
    const auto r = hitrate_ndcg(cache, setup.out_of_set.pairs, opt.k);
    m.out_of_set = detail::summarize(r, setup.out_of_set.dropped_oov);
    hr.push_back(r.hitrate);
    nd.push_back(r.ndcg);
    se2.push_back(r.hitrate_se * r.hitrate_se);
  }
  require(!hr.empty(), "evaluate: no query-target pairs");
  const double parts = static_cast<double>(hr.size());
  m.hitrate = std::accumulate(hr.begin(), hr.end(), 0.0) / parts;
  m.ndcg = std::accumulate(nd.begin(), nd.end(), 0.0) / parts;
  m.hitrate_se = std::sqrt(std::accumulate(se2.begin(), se2.end(), 0.0)) / parts;

  m.vrc_genre = detail::safe_vrc(space, setup.genre_labels, "genre", m.warnings);
  m.vrc_artist = detail::safe_vrc(space, setup.artist_labels, "artist", m.warnings);

  if (setup.hard_negatives && !setup.hardneg_queries.empty()) m.hardneg = hardneg_metric(cache, *setup.hard_negatives, setup.hardneg_queries, opt.k);

  if (opt.coherence && setup.catalog) {
    for (auto kind : {LabelKind::genre, LabelKind::artist}) {
      try {
        const auto c = local_coherence(cache, setup.vocab, *setup.catalog, kind, opt.plan, opt.seed);
        (kind == LabelKind::genre ? m.coherence_genre : m.coherence_artist) = c.value;
      } catch (const std::exception& e) {
        m.warnings.push_back(std::string("coherence_") + std::string(to_string(kind)) + ": " + e.what());
      }
    }
  }
  return m;
}

}  // namespace songemb
