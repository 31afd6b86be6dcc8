#pragma once

// RunConfig: one nested JSON document holding every tunable of the pipeline.
// Resolution order is defaults, then a config file (merge patch), then
// `key.path=value` overrides from the command line.

#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "songemb/embedding_io.hpp"
#include "songemb/error.hpp"
#include "songemb/evaluation.hpp"
#include "songemb/hpo.hpp"
#include "songemb/popularity.hpp"
#include "songemb/synth.hpp"

namespace songemb {

inline int default_workers() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

inline nlohmann::json default_config() {
  using nlohmann::json;
  const CoherencePlan plan;
  return {
      {"seed", 1},
      {"workers", default_workers()},
      {"data",
       {{"sequences", nullptr},
        {"catalog", nullptr},
        {"manifest", nullptr},
        {"split", {0.98, 0.01, 0.01}},
        {"min_count", 5}}},
      {"train",
       {{"hyperparams", to_json(HyperParams{})},
        {"budget", nullptr},
        {"budget_mode", "wall-clock"}}},
      {"eval",
       {{"k", 100},
        {"held_out", "validation"},
        {"pair_mode", "adjacent"},
        {"in_set", true},
        {"out_of_set", true},
        {"coherence", false},
        {"plan",
         {{"neighbors", plan.neighbors},
          {"min_plays", plan.min_plays},
          {"top_genres", plan.top_genres},
          {"genre_songs", plan.genre_songs},
          {"min_artist_songs", plan.min_artist_songs},
          {"artists", plan.artists},
          {"songs_per_artist", plan.songs_per_artist},
          {"artist_strata", plan.artist_strata}}},
        {"hardneg",
         {{"min_cooccurrence", 5}, {"threshold_factor", 1e-7}, {"threshold_base", "slots"}, {"threshold", nullptr}}}}},
      {"hpo",
       {{"objective", "hitrate"},
        {"alpha", 0.1},
        {"max_trials", 25},
        {"init_trials", 10},
        {"budget_factor", 1.25},
        {"budget_mode", "work"},
        {"convergence_tol", 1e-4},
        {"convergence_window", 10}}},
      {"ladder", {{"rates", {0.1, 0.3, 1.0}}, {"final_split", "test"}, {"scale_min_count", true}}},
      {"popularity", {{"buckets", 5}, {"samples_per_cell", 1000}, {"pairs", "validation"}}},
      {"play", {{"frequent_threshold", 100}, {"decimals", 1}}},
      {"synth", to_json(SynthConfig{})},
      {"observations",
       {{"pairs", 50000}, {"base", 0.2}, {"slope", 0.5}, {"max_occurrences", 1000}, {"neighbor_fraction", 0.5}, {"neighbor_depth", 50}}},
  };
}

namespace detail {

// Rejects keys that have no default and values whose type differs from the default.
inline void check_against(const nlohmann::json& defaults, const nlohmann::json& value, const std::string& prefix) {
  if (!value.is_object()) return;
  for (auto it = value.begin(); it != value.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!defaults.contains(it.key())) throw ValidationError("unknown config key '" + key + "'");
    const auto& d = defaults[it.key()];
    const auto& v = it.value();
    if (d.is_object()) {
      if (!v.is_object()) throw ValidationError("config key '" + key + "' must be an object");
      check_against(d, v, key);
    } else if (!d.is_null() && !v.is_null()) {
      const bool ok = (d.is_number() && v.is_number()) || (d.is_boolean() && v.is_boolean()) || (d.is_string() && v.is_string()) ||
                      (d.is_array() && v.is_array());
      if (!ok) throw ValidationError("config key '" + key + "' has the wrong type");
    }
  }
}

}  // namespace detail

class RunConfig {
 public:
  RunConfig() : doc_(default_config()) {}

  const nlohmann::json& doc() const { return doc_; }

  void merge(const nlohmann::json& patch) {
    detail::check_against(defaults(), patch, "");
    doc_.merge_patch(patch);
    // merge_patch deletes keys set to null; restore them as explicit nulls.
    restore_nulls(defaults(), doc_);
  }

  void merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError(path + ": config must be a JSON object");
    merge(j);
  }

  // "a.b.c=value"; value is parsed as JSON, falling back to a plain string.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key.path=value: '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_path(path, std::move(value));
  }

  void set_path(const std::string& path, nlohmann::json value) {
    nlohmann::json patch = nlohmann::json::object();
    nlohmann::json* cur = &patch;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (key.empty()) throw ValidationError("malformed config key '" + path + "'");
      if (dot == std::string::npos) {
        (*cur)[key] = std::move(value);
        break;
      }
      cur = &(*cur)[key];
      start = dot + 1;
    }
    if (patch_is_null(patch)) {
      detail::check_against(defaults(), patch, "");
      nlohmann::json::json_pointer ptr("/" + replace_dots(path));
      doc_[ptr] = nullptr;
      return;
    }
    merge(patch);
  }

  const nlohmann::json& at(const std::string& path) const {
    try {
      return doc_.at(nlohmann::json::json_pointer("/" + replace_dots(path)));
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("missing config key '" + path + "'");
    }
  }

  template <class T>
  T get(const std::string& path) const {
    try {
      return at(path).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config key '" + path + "': " + e.what());
    }
  }

  std::optional<std::string> path(const std::string& key) const {
    const auto& v = at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<std::string>();
  }

  std::string require_path(const std::string& key) const {
    auto p = path(key);
    if (!p) throw ValidationError("config key '" + key + "' is required");
    return *p;
  }

  std::uint64_t seed() const { return get<std::uint64_t>("seed"); }
  int workers() const {
    const int w = get<int>("workers");
    require(w >= 1, "workers must be >= 1");
    return w;
  }

  HyperParams hyperparams() const {
    auto hp = hyperparams_from_json(at("train.hyperparams"));
    hp.seed = seed();
    hp.validate();
    return hp;
  }

  TrainOptions train_options() const {
    TrainOptions t;
    const auto& b = at("train.budget");
    if (!b.is_null()) t.budget = b.get<double>();
    t.budget_mode = parse_budget_mode(get<std::string>("train.budget_mode"));
    t.workers = workers();
    return t;
  }

  SplitRatios split_ratios() const {
    const auto v = get<std::vector<double>>("data.split");
    require(v.size() == 3, "data.split must have three entries");
    return {v[0], v[1], v[2]};
  }

  EvalOptions eval_options() const {
    EvalOptions o;
    o.k = get<std::size_t>("eval.k");
    require(o.k >= 1, "eval.k must be >= 1");
    o.held_out = parse_split(get<std::string>("eval.held_out"));
    const auto mode = get<std::string>("eval.pair_mode");
    require(mode == "adjacent" || mode == "all", "eval.pair_mode must be 'adjacent' or 'all'");
    o.pair_mode = mode == "all" ? PairMode::all : PairMode::adjacent;
    o.in_set = get<bool>("eval.in_set");
    o.out_of_set = get<bool>("eval.out_of_set");
    o.coherence = get<bool>("eval.coherence");
    o.plan.neighbors = get<std::size_t>("eval.plan.neighbors");
    o.plan.min_plays = get<std::uint64_t>("eval.plan.min_plays");
    o.plan.top_genres = get<std::size_t>("eval.plan.top_genres");
    o.plan.genre_songs = get<std::size_t>("eval.plan.genre_songs");
    o.plan.min_artist_songs = get<std::size_t>("eval.plan.min_artist_songs");
    o.plan.artists = get<std::size_t>("eval.plan.artists");
    o.plan.songs_per_artist = get<std::size_t>("eval.plan.songs_per_artist");
    o.plan.artist_strata = get<std::size_t>("eval.plan.artist_strata");
    o.hardneg_min_cooccurrence = get<std::uint64_t>("eval.hardneg.min_cooccurrence");
    o.hardneg_threshold_factor = get<double>("eval.hardneg.threshold_factor");
    const auto base = get<std::string>("eval.hardneg.threshold_base");
    require(base == "slots" || base == "tokens", "eval.hardneg.threshold_base must be 'slots' or 'tokens'");
    o.hardneg_base = base == "tokens" ? ThresholdBase::tokens : ThresholdBase::slots;
    const auto& thr = at("eval.hardneg.threshold");
    if (!thr.is_null()) o.hardneg_threshold = thr.get<double>();
    o.workers = workers();
    o.seed = seed();
    return o;
  }

  Objective objective() const {
    Objective o;
    o.kind = parse_objective_kind(get<std::string>("hpo.objective"));
    o.alpha = get<double>("hpo.alpha");
    require(o.alpha >= 0.0 && o.alpha <= 1.0, "hpo.alpha must be in [0, 1]");
    return o;
  }

  StudyConfig study_config() const {
    StudyConfig c;
    c.max_trials = get<std::size_t>("hpo.max_trials");
    c.init_trials = get<std::size_t>("hpo.init_trials");
    c.budget_factor = get<double>("hpo.budget_factor");
    c.budget_mode = parse_budget_mode(get<std::string>("hpo.budget_mode"));
    c.convergence_tol = get<double>("hpo.convergence_tol");
    c.convergence_window = get<std::size_t>("hpo.convergence_window");
    require(c.max_trials >= 1, "hpo.max_trials must be >= 1");
    require(c.budget_factor > 0.0, "hpo.budget_factor must be positive");
    c.seed = seed();
    c.defaults = hyperparams();
    return c;
  }

  SynthConfig synth_config() const {
    auto c = synth_config_from_json(at("synth"));
    c.seed = seed();
    c.validate();
    return c;
  }

  ObservationGenerator observation_generator() const {
    ObservationGenerator g;
    g.pairs = get<std::size_t>("observations.pairs");
    g.base = get<double>("observations.base");
    g.slope = get<double>("observations.slope");
    g.max_occurrences = get<std::uint64_t>("observations.max_occurrences");
    g.neighbor_fraction = get<double>("observations.neighbor_fraction");
    g.neighbor_depth = get<std::size_t>("observations.neighbor_depth");
    require(g.max_occurrences >= 1, "observations.max_occurrences must be >= 1");
    return g;
  }

 private:
  static const nlohmann::json& defaults() {
    static const nlohmann::json d = default_config();
    return d;
  }

  static void restore_nulls(const nlohmann::json& d, nlohmann::json& v) {
    for (auto it = d.begin(); it != d.end(); ++it) {
      if (!v.contains(it.key())) v[it.key()] = it.value().is_null() ? nlohmann::json(nullptr) : it.value();
      else if (it.value().is_object() && v[it.key()].is_object()) restore_nulls(it.value(), v[it.key()]);
    }
  }

  static bool patch_is_null(const nlohmann::json& j) {
    if (j.is_null()) return true;
    if (!j.is_object() || j.size() != 1) return false;
    return patch_is_null(j.begin().value());
  }

  static std::string replace_dots(std::string s) {
    for (auto& c : s)
      if (c == '.') c = '/';
    return s;
  }

  nlohmann::json doc_;
};

}  // namespace songemb
