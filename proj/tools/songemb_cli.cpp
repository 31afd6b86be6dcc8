// songemb: command-line front end for corpus preparation, SGNS training,
// evaluation, hard-negative mining, hyper-parameter search and analyses.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "songemb/songemb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace songemb;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> sequences, catalog, manifest;
  std::string out_dir = ".";
  bool no_timing = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "JSON config file");
  cmd->add_option("--set", c.overrides, "Config override key.path=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Root seed");
  cmd->add_option("--workers", c.workers, "Worker threads (1 = deterministic)");
  cmd->add_option("--sequences", c.sequences, "Sequence file, one space-separated sequence per line");
  cmd->add_option("--catalog", c.catalog, "Catalog TSV: song_id artist genre play_count");
  cmd->add_option("--manifest", c.manifest, "Split manifest from `prepare`");
  cmd->add_option("-o,--out-dir", c.out_dir, "Output directory");
  cmd->add_flag("--no-timing", c.no_timing, "Omit wall-clock measurements from reports");
  cmd->add_flag("-q,--quiet", c.quiet, "Do not print the resolved config");
}

RunConfig resolve(const Common& c, const std::vector<std::pair<std::string, json>>& flags) {
  RunConfig cfg;
  if (!c.config_file.empty()) cfg.merge_file(c.config_file);
  for (const auto& o : c.overrides) cfg.set(o);
  if (c.seed) cfg.set_path("seed", *c.seed);
  if (c.workers) cfg.set_path("workers", *c.workers);
  if (c.sequences) cfg.set_path("data.sequences", *c.sequences);
  if (c.catalog) cfg.set_path("data.catalog", *c.catalog);
  if (c.manifest) cfg.set_path("data.manifest", *c.manifest);
  for (const auto& [k, v] : flags) cfg.set_path(k, v);
  return cfg;
}

void print_config(const char* command, const RunConfig& cfg, const Common& c) {
  if (c.quiet) return;
  std::cout << "# " << command << " resolved config\n" << cfg.doc().dump(2) << '\n';
}

fs::path out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw RuntimeFailure("cannot write file: " + p.string());
  out << j.dump(2) << '\n';
}

json report_header(const char* command, const RunConfig& cfg) { return {{"command", command}, {"config", cfg.doc()}}; }

SequenceDataset load_split_dataset(const RunConfig& cfg) {
  const auto raw = load_sequences(cfg.require_path("data.sequences"));
  if (auto m = cfg.path("data.manifest")) return apply_split_manifest(raw, *m);
  return split(raw, cfg.split_ratios(), cfg.seed());
}

std::optional<Catalog> load_optional_catalog(const RunConfig& cfg) {
  if (auto p = cfg.path("data.catalog")) return load_catalog(*p);
  return std::nullopt;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os.precision(6);
  os << *v;
  return os.str();
}

void print_metrics(const MetricReport& m) {
  std::cout << "HitRate@k " << m.hitrate << " (se " << m.hitrate_se << ")  NDCG " << m.ndcg << '\n';
  if (m.in_set) std::cout << "  in-set     HitRate " << m.in_set->hitrate << " over " << m.in_set->pairs << " pairs\n";
  if (m.out_of_set) std::cout << "  out-of-set HitRate " << m.out_of_set->hitrate << " over " << m.out_of_set->pairs << " pairs\n";
  std::cout << "VRC genre " << fmt(m.vrc_genre) << "  VRC artist " << fmt(m.vrc_artist) << "  HardNeg " << fmt(m.hardneg) << '\n';
  if (m.coherence_genre || m.coherence_artist)
    std::cout << "Local coherence genre " << fmt(m.coherence_genre) << "  artist " << fmt(m.coherence_artist) << '\n';
  for (const auto& w : m.warnings) std::cout << "warning: " << w << '\n';
}

json train_stats_json(const TrainStats& s) {
  return {{"pairs", s.pairs}, {"sequences_processed", s.sequences_processed}, {"work", s.work}, {"budget_truncated", s.budget_truncated},
          {"epoch_loss", s.epoch_loss}};
}

// ---- commands ---------------------------------------------------------------

int cmd_prepare(const Common& c) {
  const auto cfg = resolve(c, {});
  print_config("prepare", cfg, c);
  const auto ds = load_split_dataset(cfg);
  const auto vocab = build_vocabulary(ds, cfg.get<std::uint64_t>("data.min_count"));
  const auto manifest = out_path(c, "split_manifest.tsv");
  const auto vocab_file = out_path(c, "vocabulary.tsv");
  write_split_manifest(manifest.string(), ds);
  write_vocabulary(vocab_file.string(), vocab);
  auto rep = report_header("prepare", cfg);
  rep["result"] = {{"sequences", ds.sequences.size()},
                   {"dropped_short", ds.dropped_short},
                   {"train", ds.count(Split::train)},
                   {"validation", ds.count(Split::validation)},
                   {"test", ds.count(Split::test)},
                   {"vocabulary", vocab.size()},
                   {"manifest", manifest.string()},
                   {"vocabulary_file", vocab_file.string()}};
  write_json(out_path(c, "prepare.json"), rep);
  std::cout << "sequences " << ds.sequences.size() << " (train " << ds.count(Split::train) << ", validation " << ds.count(Split::validation)
            << ", test " << ds.count(Split::test) << "), dropped " << ds.dropped_short << ", vocabulary " << vocab.size() << '\n'
            << "wrote " << manifest.string() << " and " << vocab_file.string() << '\n';
  return 0;
}

int cmd_synth(const Common& c) {
  const auto cfg = resolve(c, {});
  print_config("synth", cfg, c);
  const auto sc = cfg.synth_config();
  const auto corpus = generate_synth_corpus(sc);
  const auto seq = out_path(c, "sequences.txt");
  const auto cat = out_path(c, "catalog.tsv");
  const auto obs_file = out_path(c, "observations.tsv");
  write_sequences(seq.string(), corpus.dataset);
  write_catalog(cat.string(), corpus.catalog);

  const auto planted = planted_space(corpus, std::max(16, static_cast<int>(sc.genres)), 0.35, cfg.seed());
  const NeighborIndex index(planted);
  const auto obs = generate_play_observations(index, cfg.observation_generator(), cfg.seed());
  write_observations(obs_file.string(), obs, planted.vocab);

  std::size_t tokens = 0;
  for (const auto& s : corpus.dataset.sequences) tokens += s.size();
  const double rate = corpus.transitions ? static_cast<double>(corpus.within_transitions) / static_cast<double>(corpus.transitions) : 0.0;
  auto rep = report_header("synth", cfg);
  rep["result"] = {{"sequences", corpus.dataset.sequences.size()}, {"tokens", tokens}, {"songs", sc.songs},
                   {"within_block_transitions", corpus.within_transitions}, {"transitions", corpus.transitions},
                   {"within_block_rate", rate}, {"observations", obs.size()},
                   {"files", {seq.string(), cat.string(), obs_file.string()}}};
  write_json(out_path(c, "synth.json"), rep);
  std::cout << "sequences " << corpus.dataset.sequences.size() << ", tokens " << tokens << ", within-block transition rate " << rate << '\n'
            << "wrote " << seq.string() << ", " << cat.string() << ", " << obs_file.string() << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& output) {
  const auto cfg = resolve(c, {});
  print_config("train", cfg, c);
  const auto ds = load_split_dataset(cfg);
  const auto vocab = build_vocabulary(ds, cfg.get<std::uint64_t>("data.min_count"));
  const auto hp = cfg.hyperparams();
  auto opt = cfg.train_options();
  opt.track_loss = true;
  // In-set evaluation targets the last song of each training sequence.
  opt.mask_last = cfg.get<bool>("eval.in_set");
  const auto space = train(ds, vocab, hp, opt);
  const fs::path emb = output.empty() ? out_path(c, "embeddings.bin") : fs::path(output);
  if (emb.has_parent_path()) fs::create_directories(emb.parent_path());
  write_embeddings(emb.string(), space);
  auto rep = report_header("train", cfg);
  rep["result"] = {{"vocabulary", vocab.size()}, {"hyperparams", to_json(hp)}, {"stats", train_stats_json(space.stats)}, {"embeddings", emb.string()}};
  if (!c.no_timing) rep["timing"] = {{"train_s", space.stats.seconds}};
  write_json(out_path(c, "train.json"), rep);
  std::cout << "trained " << vocab.size() << " songs x " << hp.dim << " dims on " << space.stats.pairs << " pairs"
            << (space.stats.budget_truncated ? " (budget truncated)" : "") << '\n';
  if (!space.stats.epoch_loss.empty()) std::cout << "final epoch loss " << space.stats.epoch_loss.back() << '\n';
  std::cout << "wrote " << emb.string() << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& embeddings) {
  const auto cfg = resolve(c, {});
  print_config("eval", cfg, c);
  const auto space = read_embeddings(embeddings);
  const auto ds = load_split_dataset(cfg);
  const auto catalog = load_optional_catalog(cfg);
  const auto setup = make_eval_setup(ds, space.vocab, catalog ? &*catalog : nullptr, cfg.eval_options());
  const auto m = evaluate(space, setup);
  auto rep = report_header("eval", cfg);
  rep["embeddings"] = embeddings;
  rep["metrics"] = to_json(m);
  write_json(out_path(c, "eval.json"), rep);
  print_metrics(m);
  return 0;
}

int cmd_mine(const Common& c) {
  const auto cfg = resolve(c, {});
  print_config("mine-hardneg", cfg, c);
  const auto ds = load_split_dataset(cfg);
  const auto vocab = build_vocabulary(ds, cfg.get<std::uint64_t>("data.min_count"));
  const auto opt = cfg.eval_options();
  require(opt.hardneg_min_cooccurrence >= 1, "eval.hardneg.min_cooccurrence must be >= 1 for mining");
  const auto st = collect_bigrams(ds, vocab);
  const double thr = opt.hardneg_threshold ? *opt.hardneg_threshold : default_hardneg_threshold(st, opt.hardneg_threshold_factor, opt.hardneg_base);
  const auto hns = mine_hard_negatives(st, thr, opt.hardneg_min_cooccurrence);
  const auto dump = out_path(c, "hardneg.tsv");
  write_hardneg_dump(dump.string(), hns, vocab);
  auto rep = report_header("mine-hardneg", cfg);
  rep["result"] = {{"threshold", thr},
                   {"min_cooccurrence", opt.hardneg_min_cooccurrence},
                   {"total_bigrams", st.total_bigrams},
                   {"distinct_pairs", st.pair_counts.size()},
                   {"hard_negatives", hns.pairs.size()},
                   {"mean_per_song", hns.mean_per_song()},
                   {"dump", dump.string()}};
  write_json(out_path(c, "hardneg.json"), rep);
  std::cout << "threshold " << thr << ", " << hns.pairs.size() << " hard-negative pairs (" << hns.mean_per_song() << " per song with any)\n"
            << "wrote " << dump.string() << '\n';
  return 0;
}

void print_trial(const Study& s) {
  const auto& t = s.trials.back();
  std::cout << "trial " << s.trials.size() - 1 << ": d=" << t.hp.dim << " L=" << t.hp.window << " alpha=" << t.hp.neg_exponent << " N=" << t.hp.negatives
            << " lr=" << t.hp.learning_rate << "  objective " << t.objective << "  HitRate " << t.metrics.hitrate
            << (t.budget_truncated ? "  [truncated]" : "") << '\n';
}

int cmd_optimize(const Common& c, const std::vector<std::pair<std::string, json>>& flags, const std::string& checkpoint) {
  const auto cfg = resolve(c, flags);
  print_config("optimize", cfg, c);
  const auto ds = load_split_dataset(cfg);
  const auto vocab = build_vocabulary(ds, cfg.get<std::uint64_t>("data.min_count"));
  const auto catalog = load_optional_catalog(cfg);
  const auto objective = cfg.objective();
  if (objective.kind != ObjectiveKind::hitrate && !catalog) throw ValidationError("objective " + objective.label() + " requires --catalog");
  const auto setup = make_eval_setup(ds, vocab, catalog ? &*catalog : nullptr, cfg.eval_options());
  auto tr = cfg.train_options();
  tr.budget.reset();

  Study study = make_study(objective, cfg.study_config());
  if (!checkpoint.empty() && fs::exists(checkpoint)) {
    Study loaded = load_study(checkpoint);
    require(loaded.objective.kind == objective.kind && loaded.objective.alpha == objective.alpha, "checkpoint objective differs from the config");
    require(loaded.config.seed == study.config.seed, "checkpoint seed differs from the config");
    loaded.config.max_trials = study.config.max_trials;
    study = std::move(loaded);
    std::cout << "resuming from " << checkpoint << " with " << study.trials.size() << " trials\n";
  }
  study.cost_model = make_work_model(ds, setup);
  run_study(study, make_training_evaluator(ds, setup, tr), [&](const Study& s) {
    print_trial(s);
    if (!checkpoint.empty()) save_study(checkpoint, s);
  });
  auto rep = report_header("optimize", cfg);
  rep["study"] = to_json(study, !c.no_timing);
  write_json(out_path(c, "study.json"), rep);
  const auto b = study.best();
  if (b) {
    const auto& t = study.trials[*b];
    std::cout << "best trial " << *b << " objective " << t.objective << " (default " << study.trials.front().objective << ")\n";
    print_metrics(t.metrics);
  } else {
    std::cout << "no admissible trial\n";
  }
  if (study.converged) std::cout << "converged after " << study.trials.size() << " trials\n";
  return 0;
}

int cmd_ladder(const Common& c, const std::vector<std::pair<std::string, json>>& flags) {
  const auto cfg = resolve(c, flags);
  print_config("ladder", cfg, c);
  const auto ds = load_split_dataset(cfg);
  const auto catalog = load_optional_catalog(cfg);
  const auto objective = cfg.objective();
  if (objective.kind != ObjectiveKind::hitrate && !catalog) throw ValidationError("objective " + objective.label() + " requires --catalog");
  LadderOptions opt;
  opt.study = cfg.study_config();
  opt.eval = cfg.eval_options();
  opt.final_split = parse_split(cfg.get<std::string>("ladder.final_split"));
  opt.train = cfg.train_options();
  opt.train.budget.reset();
  opt.min_count = cfg.get<std::uint64_t>("data.min_count");
  opt.scale_min_count = cfg.get<bool>("ladder.scale_min_count");
  const auto rates = cfg.get<std::vector<double>>("ladder.rates");
  const auto rep = scale_ladder(ds, rates, objective, catalog ? &*catalog : nullptr, opt, cfg.seed());
  auto out = report_header("ladder", cfg);
  out["ladder"] = to_json(rep, !c.no_timing);
  write_json(out_path(c, "ladder.json"), out);
  std::cout << "default at full scale: HitRate " << rep.default_full_scale.hitrate << '\n';
  for (const auto& row : rep.rows)
    std::cout << "rate " << row.rate << ": " << row.trials << " trials, " << row.optimization_seconds << " s, full-scale HitRate " << row.full_scale.hitrate
              << '\n';
  return 0;
}

int cmd_analyze_popularity(const Common& c, const std::string& embeddings) {
  const auto cfg = resolve(c, {});
  print_config("analyze popularity", cfg, c);
  const auto space = read_embeddings(embeddings);
  const auto ds = load_split_dataset(cfg);
  const auto catalog = load_catalog(cfg.require_path("data.catalog"));
  const auto B = cfg.get<int>("popularity.buckets");
  const auto pb = bucketize(catalog, B);
  const auto which = cfg.get<std::string>("popularity.pairs");
  const auto pairs = which == "in-set" ? make_inset_pairs(ds, space.vocab) : make_outset_pairs(ds, space.vocab, parse_split(which));
  const auto k = cfg.get<std::size_t>("eval.k");
  const NeighborIndex index(space);
  NeighborCache cache(index, k, cfg.workers());
  const auto bucket_of = pb.for_vocabulary(space.vocab);
  const auto m = bucket_hitrate_matrix(cache, pairs.pairs, bucket_of, B, cfg.get<std::size_t>("popularity.samples_per_cell"), k, cfg.seed());
  const auto heat = out_path(c, "popularity_heatmap.tsv");
  const auto diag = out_path(c, "popularity_diagonal.tsv");
  write_heatmap_tsv(heat.string(), m);
  write_diagonal_tsv(diag.string(), m);
  json masses = json::array(), sizes = json::array();
  for (int b = 0; b < B; ++b) {
    masses.push_back(pb.mass(b));
    sizes.push_back(pb.songs_per_bucket[static_cast<std::size_t>(b)]);
  }
  json cells = json::array();
  for (int q = 0; q < B; ++q)
    for (int t = 0; t < B; ++t) {
      const auto& cell = m.at(q, t);
      cells.push_back({{"query_bucket", q}, {"target_bucket", t}, {"hitrate", cell.hitrate ? json(*cell.hitrate) : json(nullptr)}, {"n", cell.sampled}});
    }
  auto rep = report_header("analyze popularity", cfg);
  rep["result"] = {{"bucket_mass", masses}, {"bucket_songs", sizes}, {"pairs", pairs.pairs.size()}, {"filled_cells", m.filled()}, {"cells", cells},
                   {"files", {heat.string(), diag.string()}}};
  write_json(out_path(c, "popularity.json"), rep);
  std::cout << "bucket masses";
  for (int b = 0; b < B; ++b) std::cout << ' ' << pb.mass(b);
  std::cout << "\n" << m.filled() << " of " << B * B << " cells filled\nwrote " << heat.string() << " and " << diag.string() << '\n';
  return 0;
}

int cmd_analyze_play(const Common& c, const std::string& embeddings, const std::string& observations) {
  const auto cfg = resolve(c, {});
  print_config("analyze play", cfg, c);
  const auto space = read_embeddings(embeddings);
  const auto obs = read_observations(observations, space.vocab);
  const NeighborIndex index(space);
  const auto pc = play_correlation(index, obs.observations, cfg.get<std::uint64_t>("play.frequent_threshold"));
  const auto curve = relative_play_rate_curve(index, obs.observations, cfg.get<int>("play.decimals"));
  const auto curve_file = out_path(c, "play_rate_curve.tsv");
  write_curve_tsv(curve_file.string(), curve);
  auto rep = report_header("analyze play", cfg);
  rep["result"] = {{"r_all", pc.r_all ? json(*pc.r_all) : json(nullptr)},
                   {"r_frequent", pc.r_frequent ? json(*pc.r_frequent) : json(nullptr)},
                   {"n_all", pc.n_all},
                   {"n_frequent", pc.n_frequent},
                   {"frequent_threshold", pc.frequent_threshold},
                   {"skipped_unknown", obs.skipped_unknown},
                   {"curve_scaled", curve.scaled},
                   {"curve", curve_file.string()}};
  if (!curve.scaled) rep["warnings"] = {"no pairs in the 0.0 similarity bin; curve is unscaled"};
  write_json(out_path(c, "play_correlation.json"), rep);
  std::cout << "Pearson r all pairs " << fmt(pc.r_all) << " (n=" << pc.n_all << "), frequent pairs " << fmt(pc.r_frequent) << " (n=" << pc.n_frequent
            << ")\n";
  if (!curve.scaled) std::cout << "warning: no pairs in the 0.0 similarity bin; curve is unscaled\n";
  std::cout << "wrote " << curve_file.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Song embeddings: SGNS training, evaluation and hyper-parameter search"};
  app.require_subcommand(1);
  Common common;

  auto* prepare = app.add_subcommand("prepare", "Split a corpus and write the manifest and vocabulary");
  add_common(prepare, common);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, catalog and play observations");
  add_common(synth, common);

  std::string train_output;
  auto* train_cmd = app.add_subcommand("train", "Train an SGNS embedding space");
  add_common(train_cmd, common);
  train_cmd->add_option("--output", train_output, "Embedding file (.bin = binary with JSON sidecar, otherwise text)");

  std::string embeddings;
  auto* eval = app.add_subcommand("eval", "Evaluate an embedding space");
  add_common(eval, common);
  eval->add_option("-e,--embeddings", embeddings, "Embedding file")->required();

  auto* mine = app.add_subcommand("mine-hardneg", "Mine chi-squared hard-negative pairs");
  add_common(mine, common);

  std::optional<std::string> objective;
  std::optional<double> alpha;
  std::optional<std::size_t> max_trials;
  std::string checkpoint;
  auto* optimize = app.add_subcommand("optimize", "Run a hyper-parameter study");
  add_common(optimize, common);
  optimize->add_option("--objective", objective, "hitrate | vrc-genre | vrc-artist | combined-genre | combined-artist");
  optimize->add_option("--alpha", alpha, "HitRate weight of combined objectives");
  optimize->add_option("--max-trials", max_trials, "Trial limit");
  optimize->add_option("--checkpoint", checkpoint, "Study file updated after every trial; resumed if present");

  std::optional<std::vector<double>> rates;
  auto* ladder = app.add_subcommand("ladder", "Optimize at several subsample rates and compare at full scale");
  add_common(ladder, common);
  ladder->add_option("--objective", objective, "Objective");
  ladder->add_option("--alpha", alpha, "HitRate weight of combined objectives");
  ladder->add_option("--max-trials", max_trials, "Trial limit per rate");
  ladder->add_option("--rates", rates, "Ascending subsample rates")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "Popularity and play-rate analyses");
  analyze->require_subcommand(1);
  auto* popularity = analyze->add_subcommand("popularity", "Popularity-bucket HitRate matrix");
  add_common(popularity, common);
  popularity->add_option("-e,--embeddings", embeddings, "Embedding file")->required();
  std::string observations;
  auto* play = analyze->add_subcommand("play", "Play-rate correlation with cosine similarity");
  add_common(play, common);
  play->add_option("-e,--embeddings", embeddings, "Embedding file")->required();
  play->add_option("--observations", observations, "Observation TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::vector<std::pair<std::string, json>> flags;
  if (objective) flags.emplace_back("hpo.objective", *objective);
  if (alpha) flags.emplace_back("hpo.alpha", *alpha);
  if (max_trials) flags.emplace_back("hpo.max_trials", *max_trials);
  if (rates) flags.emplace_back("ladder.rates", *rates);

  try {
    if (prepare->parsed()) return cmd_prepare(common);
    if (synth->parsed()) return cmd_synth(common);
    if (train_cmd->parsed()) return cmd_train(common, train_output);
    if (eval->parsed()) return cmd_eval(common, embeddings);
    if (mine->parsed()) return cmd_mine(common);
    if (optimize->parsed()) return cmd_optimize(common, flags, checkpoint);
    if (ladder->parsed()) return cmd_ladder(common, flags);
    if (popularity->parsed()) return cmd_analyze_popularity(common, embeddings);
    if (play->parsed()) return cmd_analyze_play(common, embeddings, observations);
  } catch (const ValidationError& e) {
    std::cerr << "error [validation]: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [validation]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [runtime]: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
