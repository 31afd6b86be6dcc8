#pragma once

// Hyper-parameter search: random initialization followed by GP/expected-improvement
// proposals, scalarized objectives relative to the default configuration, training
// budgets derived from the default run, and the multi-scale ladder.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "songemb/corpus.hpp"
#include "songemb/embedding_io.hpp"
#include "songemb/error.hpp"
#include "songemb/evaluation.hpp"
#include "songemb/gp.hpp"
#include "songemb/rng.hpp"
#include "songemb/sgns.hpp"

namespace songemb {

struct SearchDim {
  const char* name;
  double lo;
  double hi;
  bool integer;
  bool log_scale;
};

// Bounds of the five searched parameters: d, L, alpha, N, lambda.
struct SearchSpace {
  static constexpr std::size_t kDims = 5;
  SearchDim dims[kDims] = {
      {"dim", 25, 200, true, false},
      {"window", 1, 40, true, false},
      {"neg_exponent", -1.0, 1.0, false, false},
      {"negatives", 1, 100, true, false},
      {"learning_rate", 0.001, 0.1, false, true},
  };

  static double get(const HyperParams& hp, std::size_t i) {
    switch (i) {
      case 0: return hp.dim;
      case 1: return hp.window;
      case 2: return hp.neg_exponent;
      case 3: return hp.negatives;
      default: return hp.learning_rate;
    }
  }

  bool contains(const HyperParams& hp) const {
    for (std::size_t i = 0; i < kDims; ++i) {
      const double v = get(hp, i);
      if (v < dims[i].lo || v > dims[i].hi) return false;
    }
    return true;
  }

  std::vector<double> to_unit(const HyperParams& hp) const {
    std::vector<double> u(kDims);
    for (std::size_t i = 0; i < kDims; ++i) {
      const auto& d = dims[i];
      const double v = get(hp, i);
      u[i] = d.log_scale ? (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo)) : (v - d.lo) / (d.hi - d.lo);
      u[i] = std::clamp(u[i], 0.0, 1.0);
    }
    return u;
  }

  // Integer coordinates are proposed continuously and rounded here.
  HyperParams from_unit(const std::vector<double>& u, HyperParams base) const {
    double v[kDims];
    for (std::size_t i = 0; i < kDims; ++i) {
      const auto& d = dims[i];
      const double t = std::clamp(u[i], 0.0, 1.0);
      v[i] = d.log_scale ? std::exp(std::log(d.lo) + t * (std::log(d.hi) - std::log(d.lo))) : d.lo + t * (d.hi - d.lo);
      if (d.integer) v[i] = std::round(v[i]);
      v[i] = std::clamp(v[i], d.lo, d.hi);
    }
    base.dim = static_cast<int>(v[0]);
    base.window = static_cast<int>(v[1]);
    base.neg_exponent = v[2];
    base.negatives = static_cast<int>(v[3]);
    base.learning_rate = v[4];
    return base;
  }
};

enum class ObjectiveKind { hitrate, vrc_genre, vrc_artist, combined_genre, combined_artist };

inline std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::hitrate: return "hitrate";
    case ObjectiveKind::vrc_genre: return "vrc-genre";
    case ObjectiveKind::vrc_artist: return "vrc-artist";
    case ObjectiveKind::combined_genre: return "combined-genre";
    case ObjectiveKind::combined_artist: return "combined-artist";
  }
  return "hitrate";
}

inline ObjectiveKind parse_objective_kind(const std::string& s) {
  if (s == "hitrate") return ObjectiveKind::hitrate;
  if (s == "vrc-genre") return ObjectiveKind::vrc_genre;
  if (s == "vrc-artist") return ObjectiveKind::vrc_artist;
  if (s == "combined-genre") return ObjectiveKind::combined_genre;
  if (s == "combined-artist") return ObjectiveKind::combined_artist;
  throw ValidationError("unknown objective '" + s + "'");
}

// Relative improvement over the default configuration.
inline double rvrc(double current, double baseline) {
  require(baseline > 0.0, "rvrc: baseline must be positive");
  return (current - baseline) / baseline;
}

inline double combined_objective(double hitrate, double rvrc_value, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "combined objective: alpha must be in [0, 1]");
  return alpha * hitrate + (1.0 - alpha) * rvrc_value;
}

struct Objective {
  ObjectiveKind kind = ObjectiveKind::hitrate;
  double alpha = 0.1;                  // combined kinds only
  std::optional<MetricReport> baseline;  // metrics of the default configuration

  bool needs_baseline() const { return kind == ObjectiveKind::combined_genre || kind == ObjectiveKind::combined_artist; }

  std::string label() const {
    if (!needs_baseline()) return to_string(kind);
    std::ostringstream os;
    os << to_string(kind) << '(' << alpha << ')';
    return os.str();
  }

  double value(const MetricReport& m) const {
    auto need = [&](const std::optional<double>& v, const char* what) {
      if (!v) throw RuntimeFailure(std::string("objective ") + label() + " needs " + what + ", which is missing (catalog provided?)");
      return *v;
    };
    switch (kind) {
      case ObjectiveKind::hitrate: return m.hitrate;
      case ObjectiveKind::vrc_genre: return need(m.vrc_genre, "vrc_genre");
      case ObjectiveKind::vrc_artist: return need(m.vrc_artist, "vrc_artist");
      case ObjectiveKind::combined_genre:
      case ObjectiveKind::combined_artist: {
        require(baseline.has_value(), "combined objective without a baseline report");
        const bool genre = kind == ObjectiveKind::combined_genre;
        const double cur = need(genre ? m.vrc_genre : m.vrc_artist, genre ? "vrc_genre" : "vrc_artist");
        const double base = need(genre ? baseline->vrc_genre : baseline->vrc_artist, "baseline vrc");
        return combined_objective(m.hitrate, rvrc(cur, base), alpha);
      }
    }
    return m.hitrate;
  }
};

struct TrialResult {
  HyperParams hp;
  MetricReport metrics;
  double objective = 0.0;
  double wall_clock = 0.0;  // training + evaluation seconds
  double train_seconds = 0.0;
  double work = 0.0;  // training cost units
  bool budget_truncated = false;
};

struct TrialOutcome {
  MetricReport metrics;
  double train_seconds = 0.0;
  double work = 0.0;
  bool budget_truncated = false;
};

// Trains and evaluates one configuration under an optional budget.
using TrialEvaluator = std::function<TrialOutcome(const HyperParams&, std::optional<double> budget)>;

// Predicted training cost of a configuration, in any unit proportional to the
// budget unit.
using CostModel = std::function<double(const HyperParams&)>;

struct StudyConfig {
  std::size_t max_trials = 25;
  std::size_t init_trials = 10;
  double budget_factor = 1.25;
  BudgetMode budget_mode = BudgetMode::work;
  double convergence_tol = 1e-4;
  std::size_t convergence_window = 10;
  std::uint64_t seed = 1;
  HyperParams defaults;  // trial 0; its non-searched fields are shared by every trial
  std::vector<HyperParams> warm_start;  // evaluated first among the initial trials
};

struct Study {
  Objective objective;
  SearchSpace space;
  StudyConfig config;
  std::vector<TrialResult> trials;
  std::optional<double> budget;
  bool converged = false;
  // Optional and not serialized. When set, suggestions are limited to
  // configurations predicted to finish within budget_factor x the default cost.
  CostModel cost_model;

  // Best non-truncated trial.
  std::optional<std::size_t> best() const {
    std::optional<std::size_t> b;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (trials[i].budget_truncated) continue;
      if (!b || trials[i].objective > trials[*b].objective) b = i;
    }
    return b;
  }

  double total_wall_clock() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.wall_clock;
    return s;
  }
  double total_work() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.work;
    return s;
  }
};

namespace detail {

inline bool same_point(const HyperParams& a, const HyperParams& b) {
  return a.dim == b.dim && a.window == b.window && a.neg_exponent == b.neg_exponent && a.negatives == b.negatives && a.learning_rate == b.learning_rate;
}

inline bool already_tried(const Study& s, const HyperParams& hp) {
  return std::any_of(s.trials.begin(), s.trials.end(), [&](const TrialResult& t) { return same_point(t.hp, hp); });
}

inline std::vector<double> random_unit(Rng& rng) {
  std::vector<double> u(SearchSpace::kDims);
  for (auto& v : u) v = uniform01(rng);
  return u;
}

inline bool predicted_feasible(const Study& s, const HyperParams& hp) {
  if (!s.cost_model) return true;
  return s.cost_model(hp) <= s.config.budget_factor * s.cost_model(s.config.defaults);
}

inline bool has_converged(const Study& s) {
  const auto& c = s.config;
  if (s.trials.size() < 1 + c.init_trials + c.convergence_window) return false;
  auto best_upto = [&](std::size_t n) {
    double b = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (!s.trials[i].budget_truncated) b = std::max(b, s.trials[i].objective);
    return b;
  };
  const std::size_t n = s.trials.size();
  return best_upto(n) - best_upto(n - c.convergence_window) <= c.convergence_tol;
}

}  // namespace detail

// Next point to evaluate. Trial 0 is the default configuration, trials
// 1..init_trials are the untried warm-start points followed by uniform draws in
// the unit cube, later trials maximize expected
// improvement of a GP fitted to every completed trial. With a cost model,
// points predicted to exceed the budget are skipped while feasible ones remain.
// Deterministic in the study state and seed.
inline HyperParams suggest(const Study& study) {
  const auto& cfg = study.config;
  const std::size_t t = study.trials.size();
  if (t == 0) return cfg.defaults;
  Rng rng(derive_seed(derive_seed(cfg.seed, streams::kSuggest), t));

  auto random_point = [&]() -> std::optional<HyperParams> {
    std::optional<HyperParams> fallback;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto hp = study.space.from_unit(detail::random_unit(rng), cfg.defaults);
      if (detail::already_tried(study, hp)) continue;
      if (detail::predicted_feasible(study, hp)) return hp;
      if (!fallback) fallback = hp;
    }
    return fallback;
  };

  if (t <= cfg.init_trials || t < 3) {
    for (const auto& w : cfg.warm_start)
      if (!detail::already_tried(study, w)) return w;
    if (auto hp = random_point()) return *hp;
    throw RuntimeFailure("suggest: could not find an untried random point");
  }

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const auto& tr : study.trials) {
    xs.push_back(study.space.to_unit(tr.hp));
    ys.push_back(tr.objective);
  }
  GaussianProcess gp;
  gp.fit(xs, ys);
  double incumbent = -std::numeric_limits<double>::infinity();
  for (const auto& tr : study.trials)
    if (!tr.budget_truncated) incumbent = std::max(incumbent, tr.objective);
  if (!std::isfinite(incumbent)) incumbent = *std::max_element(ys.begin(), ys.end());

  std::vector<std::vector<double>> cands;
  for (int i = 0; i < 4000; ++i) cands.push_back(detail::random_unit(rng));
  std::vector<std::size_t> order(study.trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
  for (std::size_t r = 0; r < std::min<std::size_t>(5, order.size()); ++r) {
    for (double sd : {0.02, 0.05, 0.12}) {
      for (int i = 0; i < 100; ++i) {
        auto c = xs[order[r]];
        for (auto& v : c) {
          // Box-Muller; std::normal_distribution output differs across standard libraries
          const double u1 = std::max(uniform01(rng), 1e-300), u2 = uniform01(rng);
          v = std::clamp(v + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2), 0.0, 1.0);
        }
        cands.push_back(std::move(c));
      }
    }
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) scored.emplace_back(gp.expected_improvement(cands[i], incumbent), i);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::optional<HyperParams> infeasible;
  for (const auto& [ei, i] : scored) {
    auto hp = study.space.from_unit(cands[i], cfg.defaults);
    if (detail::already_tried(study, hp)) continue;
    if (detail::predicted_feasible(study, hp)) return hp;
    if (!infeasible) infeasible = hp;
  }
  if (auto hp = random_point(); hp && detail::predicted_feasible(study, *hp)) return *hp;
  if (infeasible) return *infeasible;
  if (auto hp = random_point()) return *hp;
  throw RuntimeFailure("suggest: search space exhausted");
}

// Runs trials until max_trials or convergence. Continues an existing study, so a
// reloaded checkpoint resumes the same trial sequence. on_trial is called after
// every completed trial (checkpointing hook).
inline void run_study(Study& study, const TrialEvaluator& evaluate_trial, const std::function<void(const Study&)>& on_trial = {}) {
  const auto& cfg = study.config;
  require(cfg.max_trials >= 1, "run_study: max_trials must be >= 1");
  while (study.trials.size() < cfg.max_trials && !study.converged) {
    const bool is_default = study.trials.empty();
    const HyperParams hp = suggest(study);
    std::optional<double> budget;
    if (!is_default) budget = study.budget;
    const auto start = std::chrono::steady_clock::now();
    TrialOutcome out;
    try {
      out = evaluate_trial(hp, budget);
    } catch (const std::exception& e) {
      if (is_default) throw RuntimeFailure(std::string("baseline trial failed: ") + e.what());
      throw;
    }
    TrialResult tr;
    tr.hp = hp;
    tr.metrics = std::move(out.metrics);
    tr.train_seconds = out.train_seconds;
    tr.work = out.work;
    tr.budget_truncated = out.budget_truncated;
    tr.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (is_default) {
      study.objective.baseline = tr.metrics;
      study.budget = cfg.budget_factor * (cfg.budget_mode == BudgetMode::work ? tr.work : tr.train_seconds);
    }
    tr.objective = study.objective.value(tr.metrics);
    study.trials.push_back(std::move(tr));
    study.converged = detail::has_converged(study);
    if (on_trial) on_trial(study);
  }
}

inline Study make_study(const Objective& objective, const StudyConfig& config) {
  Study s;
  s.objective = objective;
  s.objective.baseline.reset();
  s.config = config;
  return s;
}

// Evaluator that trains on the setup's dataset and scores with evaluate(). Last
// songs are withheld from training whenever in-set pairs are evaluated.
inline TrialEvaluator make_training_evaluator(const SequenceDataset& ds, const EvalSetup& setup, TrainOptions train_opt) {
  return [&ds, &setup, train_opt](const HyperParams& hp, std::optional<double> budget) {
    auto opt = train_opt;
    opt.budget = budget;
    opt.mask_last = setup.options.in_set;
    const auto space = train(ds, setup.vocab, hp, opt);
    TrialOutcome out;
    out.metrics = evaluate(space, setup);
    out.train_seconds = space.stats.seconds;
    out.work = space.stats.work;
    out.budget_truncated = space.stats.budget_truncated;
    return out;
  };
}

// Expected training work (pairs x (negatives + 1) x dim) of the trainer on the
// setup's training split; proportional to wall-clock at fixed hardware.
inline CostModel make_work_model(const SequenceDataset& ds, const EvalSetup& setup) {
  std::map<std::size_t, std::size_t> lengths;
  for (const auto& s : encode_split(ds, setup.vocab, Split::train, setup.options.in_set)) ++lengths[s.size()];
  auto pairs_by_window = std::make_shared<std::map<int, double>>();
  return [lengths = std::move(lengths), pairs_by_window](const HyperParams& hp) {
    auto [it, fresh] = pairs_by_window->try_emplace(hp.window, 0.0);
    if (fresh)
      for (const auto& [n, count] : lengths) it->second += static_cast<double>(count) * expected_pair_count(n, static_cast<std::size_t>(hp.window));
    return it->second * hp.epochs * (hp.negatives + 1) * static_cast<double>(hp.dim);
  };
}

inline std::string to_string(BudgetMode m) { return m == BudgetMode::work ? "work" : "wall-clock"; }
inline BudgetMode parse_budget_mode(const std::string& s) {
  if (s == "work") return BudgetMode::work;
  if (s == "wall-clock" || s == "time") return BudgetMode::wall_clock;
  throw ValidationError("unknown budget mode '" + s + "'");
}

// Wall-clock measurements live under "timing" so the rest of the document is reproducible.
inline nlohmann::json to_json(const Study& s, bool include_timing = true) {
  nlohmann::json trials = nlohmann::json::array();
  nlohmann::json wall = nlohmann::json::array(), train_s = nlohmann::json::array();
  for (const auto& t : s.trials) {
    trials.push_back({{"hyperparams", to_json(t.hp)},
                      {"metrics", to_json(t.metrics)},
                      {"objective_value", t.objective},
                      {"work", t.work},
                      {"budget_truncated", t.budget_truncated}});
    wall.push_back(t.wall_clock);
    train_s.push_back(t.train_seconds);
  }
  const auto best = s.best();
  nlohmann::json warm = nlohmann::json::array();
  for (const auto& w : s.config.warm_start) warm.push_back(to_json(w));
  nlohmann::json j = {
      {"objective", {{"kind", to_string(s.objective.kind)}, {"alpha", s.objective.alpha}, {"label", s.objective.label()}}},
      {"config",
       {{"max_trials", s.config.max_trials},
        {"init_trials", s.config.init_trials},
        {"budget_factor", s.config.budget_factor},
        {"budget_mode", to_string(s.config.budget_mode)},
        {"convergence_tol", s.config.convergence_tol},
        {"convergence_window", s.config.convergence_window},
        {"seed", s.config.seed},
        {"defaults", to_json(s.config.defaults)},
        {"warm_start", warm}}},
      {"search_space", nlohmann::json::array()},
      {"budget", s.budget ? nlohmann::json(*s.budget) : nlohmann::json(nullptr)},
      {"trials", trials},
      {"best", best ? nlohmann::json(*best) : nlohmann::json(nullptr)},
      {"converged", s.converged},
      {"total_work", s.total_work()},
  };
  for (const auto& d : s.space.dims)
    j["search_space"].push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}, {"integer", d.integer}, {"log_scale", d.log_scale}});
  if (include_timing) j["timing"] = {{"trial_wall_clock_s", wall}, {"trial_train_s", train_s}, {"total_wall_clock_s", s.total_wall_clock()}};
  return j;
}

inline Study study_from_json(const nlohmann::json& j) {
  Study s;
  s.objective.kind = parse_objective_kind(j.at("objective").at("kind").get<std::string>());
  s.objective.alpha = j.at("objective").value("alpha", 0.1);
  const auto& c = j.at("config");
  s.config.max_trials = c.at("max_trials").get<std::size_t>();
  s.config.init_trials = c.at("init_trials").get<std::size_t>();
  s.config.budget_factor = c.at("budget_factor").get<double>();
  s.config.budget_mode = parse_budget_mode(c.at("budget_mode").get<std::string>());
  s.config.convergence_tol = c.value("convergence_tol", 1e-4);
  s.config.convergence_window = c.value("convergence_window", std::size_t{10});
  s.config.seed = c.at("seed").get<std::uint64_t>();
  s.config.defaults = hyperparams_from_json(c.at("defaults"));
  if (c.contains("warm_start"))
    for (const auto& w : c["warm_start"]) s.config.warm_start.push_back(hyperparams_from_json(w));
  if (!j.at("budget").is_null()) s.budget = j["budget"].get<double>();
  const auto& timing = j.contains("timing") ? j["timing"] : nlohmann::json::object();
  std::size_t i = 0;
  for (const auto& t : j.at("trials")) {
    TrialResult tr;
    tr.hp = hyperparams_from_json(t.at("hyperparams"));
    tr.metrics = metric_report_from_json(t.at("metrics"));
    tr.objective = t.at("objective_value").get<double>();
    tr.work = t.at("work").get<double>();
    tr.budget_truncated = t.at("budget_truncated").get<bool>();
    if (timing.contains("trial_wall_clock_s") && i < timing["trial_wall_clock_s"].size()) tr.wall_clock = timing["trial_wall_clock_s"][i].get<double>();
    if (timing.contains("trial_train_s") && i < timing["trial_train_s"].size()) tr.train_seconds = timing["trial_train_s"][i].get<double>();
    s.trials.push_back(std::move(tr));
    ++i;
  }
  if (!s.trials.empty()) s.objective.baseline = s.trials.front().metrics;
  s.converged = j.value("converged", false);
  return s;
}

inline void save_study(const std::string& path, const Study& s) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << to_json(s).dump(2) << '\n';
}

inline Study load_study(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open study checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return study_from_json(j);
}

struct LadderRow {
  double rate = 1.0;
  std::size_t train_sequences = 0;
  std::uint64_t min_count = 0;
  std::size_t vocabulary_size = 0;
  std::size_t trials = 0;
  double optimization_seconds = 0.0;
  double optimization_work = 0.0;
  HyperParams best;
  double best_objective = 0.0;
  MetricReport full_scale;
};

struct LadderReport {
  Objective objective;
  MetricReport default_full_scale;
  std::vector<LadderRow> rows;
  std::vector<Study> studies;
};

struct LadderOptions {
  StudyConfig study;
  EvalOptions eval;  // eval.held_out is used inside studies; final rows use final_split
  Split final_split = Split::test;
  TrainOptions train;
  std::uint64_t min_count = 5;
  // Subsample vocabularies use max(1, round(min_count x rate)), keeping the
  // cutoff at the same relative frequency as the full corpus.
  bool scale_min_count = true;
};

// For every rate: subsample the training split, optimize on it, then retrain the
// best configuration on the full training split and evaluate. Each study is
// warm-started with the best configurations of the smaller rates.
inline LadderReport scale_ladder(const SequenceDataset& ds, const std::vector<double>& rates, const Objective& objective, const Catalog* catalog,
                                 const LadderOptions& opt, std::uint64_t seed) {
  require(!rates.empty(), "ladder: no rates");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    require(rates[i] > 0.0 && rates[i] <= 1.0, "ladder: rates must be in (0, 1]");
    require(i == 0 || rates[i] > rates[i - 1], "ladder: rates must be ascending");
  }
  LadderReport rep;
  rep.objective = objective;

  const auto full_vocab = build_vocabulary(ds, opt.min_count);
  auto final_eval = opt.eval;
  final_eval.held_out = opt.final_split;
  const auto full_setup = make_eval_setup(ds, full_vocab, catalog, final_eval);
  auto full_train = opt.train;
  full_train.budget.reset();
  full_train.mask_last = final_eval.in_set;
  rep.default_full_scale = evaluate(train(ds, full_vocab, opt.study.defaults, full_train), full_setup);

  for (double rate : rates) {
    const auto sub = subsample(ds, rate, seed);
    const auto sub_min = opt.scale_min_count
                             ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(opt.min_count) * rate)))
                             : opt.min_count;
    const auto sub_vocab = build_vocabulary(sub, sub_min);
    const auto sub_setup = make_eval_setup(sub, sub_vocab, catalog, opt.eval);
    auto cfg = opt.study;
    cfg.seed = seed;
    for (const auto& r : rep.rows) cfg.warm_start.push_back(r.best);
    Study study = make_study(objective, cfg);
    study.cost_model = make_work_model(sub, sub_setup);
    run_study(study, make_training_evaluator(sub, sub_setup, opt.train));
    const auto b = study.best();
    require(b.has_value(), "ladder: study produced no admissible trial");

    LadderRow row;
    row.rate = rate;
    row.train_sequences = sub.count(Split::train);
    row.min_count = sub_min;
    row.vocabulary_size = sub_vocab.size();
    row.trials = study.trials.size();
    row.optimization_seconds = study.total_wall_clock();
    row.optimization_work = study.total_work();
    row.best = study.trials[*b].hp;
    row.best_objective = study.trials[*b].objective;
    row.full_scale = evaluate(train(ds, full_vocab, row.best, full_train), full_setup);
    rep.rows.push_back(std::move(row));
    rep.studies.push_back(std::move(study));
  }
  return rep;
}

inline nlohmann::json to_json(const LadderReport& r, bool include_timing = true) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"rate", row.rate},
                    {"train_sequences", row.train_sequences},
                    {"min_count", row.min_count},
                    {"vocabulary_size", row.vocabulary_size},
                    {"trials", row.trials},
                    {"optimization_work", row.optimization_work},
                    {"best_hyperparams", to_json(row.best)},
                    {"best_objective", row.best_objective},
                    {"full_scale", to_json(row.full_scale)}});
    timing.push_back({{"rate", row.rate}, {"optimization_s", row.optimization_seconds}});
  }
  nlohmann::json j = {{"objective", r.objective.label()}, {"default_full_scale", to_json(r.default_full_scale)}, {"rows", rows}};
  if (include_timing) j["timing"] = timing;
  return j;
}

}  // namespace songemb
