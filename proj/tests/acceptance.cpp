// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "songemb/songemb.hpp"
#include "test_util.hpp"

using namespace songemb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---- 1: gradients ----------------------------------------------------------

void gradients(Outcome& o) {
  const auto start = Clock::now();
  auto rng = make_rng(2024, 1);
  auto vec = [&](std::size_t d) {
    std::vector<double> v(d);
    for (auto& x : v) x = 2 * uniform01(rng) - 1;
    return v;
  };
  const double h = 1e-5;
  double worst = 0.0;
  int instances = 0;
  const int counts[] = {1, 3, 10};
  for (int inst = 0; inst < 200; ++inst, ++instances) {
    const int n_neg = counts[inst % 3];
    auto q = vec(5), t = vec(5);
    std::vector<std::vector<double>> negs;
    for (int k = 0; k < n_neg; ++k) negs.push_back(vec(5));
    const auto g = sgns_gradient<double>(q, t, negs);
    auto loss = [&] { return sgns_pair_loss<double>(q, t, negs); };
    auto probe = [&](std::vector<double>& v, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double keep = v[i];
        v[i] = keep + h;
        const double up = loss();
        v[i] = keep - h;
        const double down = loss();
        v[i] = keep;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-8}));
      }
    };
    probe(q, g.query);
    probe(t, g.target);
    for (std::size_t k = 0; k < negs.size(); ++k) probe(negs[k], g.negatives[k]);
  }
  const double secs = seconds_since(start);
  o.detail << instances << " instances, max relative error " << worst << ", " << secs << " s";
  o.check(worst < 1e-4, "max relative error < 1e-4");
  o.check(secs < 10, "runtime < 10 s");
}

// ---- 2: metric oracles -------------------------------------------------------

void metric_oracles(Outcome& o) {
  const auto start = Clock::now();
  const std::size_t n = 300, k = 100;
  const auto s = oracle::random_space(n, 16, 2);
  auto rng = make_rng(2, 2);
  std::vector<QueryTargetPair> pairs;
  for (int i = 0; i < 2000; ++i)
    pairs.push_back({static_cast<std::uint32_t>(uniform_index(rng, n)), static_cast<std::uint32_t>(uniform_index(rng, n)), PairOrigin::out_of_set});
  const NeighborIndex index(s);
  NeighborCache cache(index, k, 1);
  const auto r = hitrate_ndcg(cache, pairs, k);

  std::map<std::uint32_t, std::vector<std::uint32_t>> tops;
  for (const auto& p : pairs)
    if (!tops.count(p.query)) tops[p.query] = oracle::topk(s, p.query, k);
  std::size_t flag_mismatch = 0;
  double hits = 0, ndcg = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& top = tops[pairs[i].query];
    const auto it = std::find(top.begin(), top.end(), pairs[i].target);
    const bool hit = it != top.end();
    flag_mismatch += hit != (r.ranks[i] > 0);
    if (hit) {
      hits += 1;
      ndcg += 1.0 / std::log2(static_cast<double>(it - top.begin()) + 2.0);
    }
  }
  hits /= static_cast<double>(pairs.size());
  ndcg /= static_cast<double>(pairs.size());

  HardNegativeSet hns;
  while (hns.pairs.size() < 3000) {
    const auto a = static_cast<std::uint32_t>(uniform_index(rng, n)), b = static_cast<std::uint32_t>(uniform_index(rng, n));
    if (a == b || hns.contains(a, b)) continue;
    hns.pairs.push_back({std::min(a, b), std::max(a, b), 5, 0.0});
    hns.keys.insert(pair_key(a, b));
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> planted;
  for (const auto& p : hns.pairs) planted.emplace(p.a, p.b);
  std::vector<std::uint32_t> queries(n);
  for (std::uint32_t i = 0; i < n; ++i) queries[i] = i;
  double hn_oracle = 0;
  for (auto q : queries) {
    const auto& top = tops.count(q) ? tops[q] : (tops[q] = oracle::topk(s, q, k));
    std::size_t c = 0;
    for (auto nb : top) c += planted.count({std::min(q, nb), std::max(q, nb)});
    hn_oracle += static_cast<double>(c) / static_cast<double>(k);
  }
  hn_oracle /= static_cast<double>(n);
  const double hn = hardneg_metric(cache, hns, queries, k);
  const double secs = seconds_since(start);

  o.detail << "hit-flag mismatches " << flag_mismatch << ", |dHitRate| " << std::abs(r.hitrate - hits) << ", |dNDCG| " << std::abs(r.ndcg - ndcg)
           << ", |dHardNeg| " << std::abs(hn - hn_oracle) << " (HitRate " << r.hitrate << ", HardNeg " << hn << "), " << secs << " s";
  o.check(flag_mismatch == 0, "bit-equal hit flags");
  o.check(r.hitrate == hits, "hitrate equals oracle");
  o.check(std::abs(r.ndcg - ndcg) <= 1e-12, "ndcg within 1e-12");
  o.check(std::abs(hn - hn_oracle) <= 1e-12, "hardneg matches oracle");
  o.check(secs < 30, "runtime < 30 s");
}

// ---- 3: VRC ------------------------------------------------------------------

void vrc_checks(Outcome& o) {
  EmbeddingSpace four;
  four.vocab = Vocabulary({"p0", "p1", "p2", "p3"}, {});
  four.dim = 2;
  four.vectors = {0, 0, 0, 2, 4, 0, 4, 2};
  const double worked = vrc(four, std::vector<std::int32_t>{0, 0, 1, 1}).value;
  double worst = 0;
  for (std::uint64_t c = 0; c < 20; ++c) {
    auto rng = make_rng(c, 33);
    const std::size_t n = 40 + uniform_index(rng, 300), d = 2 + uniform_index(rng, 20), classes = 2 + uniform_index(rng, 8);
    const auto s = oracle::random_space(n, d, 500 + c);
    std::vector<std::int32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int32_t>(i < classes ? i : uniform_index(rng, classes));
    const double expect = oracle::vrc(s, labels);
    worst = std::max(worst, std::abs(vrc(s, labels).value - expect) / expect);
  }
  o.detail << "worked example " << worked << ", max relative deviation over 20 clouds " << worst;
  o.check(worked == 8.0, "worked example exactly 8");
  o.check(worst <= 1e-9, "relative deviation <= 1e-9");
}

// ---- 4: chi-squared ----------------------------------------------------------

void chi_squared_checks(Outcome& o) {
  const double worked = chi_squared_table(10, 0, 0, 10).value;
  double worst_indep = 0;
  auto rng = make_rng(4, 4);
  for (int i = 0; i < 100; ++i) {
    // Integer tables with O11 O22 = O12 O21: outer products of integer margins.
    const double a = 1 + uniform_index(rng, 50), b = 1 + uniform_index(rng, 50), c = 1 + uniform_index(rng, 50), d = 1 + uniform_index(rng, 50);
    const double n = a * c + a * d + b * c + b * d;
    worst_indep = std::max(worst_indep, chi_squared_table(a * c, a * d, b * c, b * d).value / n);
  }

  std::size_t compared = 0, mismatched = 0, mined = 0;
  auto compare = [&](const SequenceDataset& ds, double threshold) {
    const auto vocab = build_vocabulary(ds, 1);
    const auto hns = mine_hard_negatives(collect_bigrams(ds, vocab), threshold, 5);
    std::set<std::pair<std::uint32_t, std::uint32_t>> got;
    for (const auto& p : hns.pairs) got.emplace(p.a, p.b);
    const auto expect = oracle::hard_negatives(ds, vocab, threshold, 5);
    ++compared;
    mismatched += got != expect;
    mined += got.size();
    return got;
  };
  auto planted = songemb::testing::dataset_from(oracle::planted_hardneg_corpus(1));
  const auto planted_vocab = build_vocabulary(planted, 1);
  const auto got = compare(planted, 3.84);
  const bool chance_pair = got.count({std::min(*planted_vocab.find("p0"), *planted_vocab.find("p1")), std::max(*planted_vocab.find("p0"), *planted_vocab.find("p1"))});
  const bool locked_pair = got.count({std::min(*planted_vocab.find("L1"), *planted_vocab.find("L2")), std::max(*planted_vocab.find("L1"), *planted_vocab.find("L2"))});

  SynthConfig sc;
  sc.sequences = 20000;
  sc.songs = 1000;
  const auto synth = generate_synth_corpus(sc);
  const auto synth_vocab = build_vocabulary(synth.dataset, 1);
  const auto default_thr = default_hardneg_threshold(collect_bigrams(synth.dataset, synth_vocab));
  for (double thr : {default_thr, 0.5, 3.84}) compare(synth.dataset, thr);

  o.detail << "worked " << worked << ", max X^2/n on independent tables " << worst_indep << ", " << compared << " mined sets compared (" << mined
           << " pairs), " << mismatched << " mismatched; chance pair mined " << chance_pair << ", locked pair mined " << locked_pair;
  o.check(worked == 20.0, "worked example exactly 20");
  o.check(worst_indep <= 1e-9, "independence within 1e-9 n");
  o.check(mismatched == 0, "mined sets equal the oracle");
  o.check(chance_pair && !locked_pair, "planted chance pair mined, locked pair not");
}

// ---- 5: negative sampling ----------------------------------------------------

void negative_sampling(Outcome& o) {
  const std::vector<std::uint64_t> freq = {5000, 1200, 300, 77, 20, 5, 1};
  const std::size_t draws = 1000000;
  double worst_z = 0;
  for (double alpha : {-1.0, 0.0, 0.75, 1.0}) {
    const NegativeSamplingTable table(freq, alpha);
    long double z = 0;
    for (auto f : freq) z += std::pow(static_cast<long double>(f), alpha);
    auto rng = make_rng(5, static_cast<std::uint64_t>(alpha * 100 + 1000));
    std::vector<std::size_t> hist(freq.size(), 0);
    for (std::size_t i = 0; i < draws; ++i) ++hist[table.sample(rng)];
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double p = static_cast<double>(std::pow(static_cast<long double>(freq[i]), alpha) / z);
      const double se = std::sqrt(p * (1 - p) / static_cast<double>(draws));
      worst_z = std::max(worst_z, std::abs(static_cast<double>(hist[i]) / static_cast<double>(draws) - p) / se);
    }
  }
  o.detail << "alpha in {-1, 0, 0.75, 1}, 1e6 draws each, max |z| " << worst_z;
  o.check(worst_z <= 3.0, "all frequencies within 3 SE");
}

// ---- shared synth world for 6-10 -----------------------------------------------

struct World {
  SynthCorpus corpus;
  SequenceDataset ds;
  Vocabulary vocab;
  EvalOptions eval;
  TrainOptions train;
  StudyConfig study;
};

World& world() {
  static World w = [] {
    World w;
    SynthConfig sc;  // G=8, p=0.9, Zipf 1.0, 50k sequences, ~4.8k songs kept at min_count 5
    w.corpus = generate_synth_corpus(sc);
    w.ds = split(w.corpus.dataset, {0.98, 0.01, 0.01}, 1);
    w.vocab = build_vocabulary(w.ds, 5);
    w.eval.k = 100;
    w.eval.held_out = Split::validation;
    w.eval.coherence = true;
    // Coherence plan scaled to the corpus: catalog play counts top out near 3e4.
    w.eval.plan.min_plays = 30;
    w.eval.plan.top_genres = 8;
    w.eval.plan.min_artist_songs = 10;
    w.train.budget_mode = BudgetMode::work;
    w.study.max_trials = 25;
    w.study.init_trials = 10;
    w.study.budget_mode = BudgetMode::work;
    w.study.seed = 1;
    w.study.convergence_window = w.study.max_trials;  // run all 25 trials
    return w;
  }();
  return w;
}

struct Studies {
  Study hitrate;
  Study combined;
  double seconds = 0;
};

Studies& studies() {
  static Studies s = [] {
    auto& w = world();
    const auto start = Clock::now();
    const auto setup = make_eval_setup(w.ds, w.vocab, &w.corpus.catalog, w.eval);
    Studies out;
    auto progress = [](const char* name) {
      return [name](const Study& st) {
        const auto& t = st.trials.back();
        std::cout << "  " << name << " trial " << st.trials.size() - 1 << " " << to_json(t.hp).dump() << " objective " << t.objective << " HitRate " << t.metrics.hitrate << " VRC_genre "
                  << t.metrics.vrc_genre.value_or(NAN) << (t.budget_truncated ? " [truncated]" : "") << std::endl;
      };
    };
    out.hitrate = make_study(Objective{ObjectiveKind::hitrate, 0.1, std::nullopt}, w.study);
    out.hitrate.cost_model = make_work_model(w.ds, setup);
    run_study(out.hitrate, make_training_evaluator(w.ds, setup, w.train), progress("hitrate"));
    out.combined = make_study(Objective{ObjectiveKind::combined_genre, 0.1, std::nullopt}, w.study);
    out.combined.cost_model = make_work_model(w.ds, setup);
    run_study(out.combined, make_training_evaluator(w.ds, setup, w.train), progress("combined-genre(0.1)"));
    out.seconds = seconds_since(start);
    return out;
  }();
  return s;
}

// ---- 6: planted-structure HPO --------------------------------------------------

void planted_hpo(Outcome& o) {
  auto& s = studies();
  const auto& h = s.hitrate;
  const auto hb = *h.best();
  const auto& def = h.trials.front().metrics;
  const auto& best = h.trials[hb].metrics;
  const double val_gain = best.out_of_set->hitrate / def.out_of_set->hitrate - 1.0;
  const double obj_gain = best.hitrate / def.hitrate - 1.0;
  const auto cb = *s.combined.best();
  const auto& comb = s.combined.trials[cb].metrics;
  const double hr_gap = 1.0 - comb.hitrate / best.hitrate;
  o.detail << "validation HitRate default " << def.out_of_set->hitrate << " -> best " << best.out_of_set->hitrate << " (+" << 100 * val_gain
           << "%), study objective +" << 100 * obj_gain << "%; VRC_genre combined best " << *comb.vrc_genre << " vs hitrate best " << *best.vrc_genre
           << ", HitRate " << comb.hitrate << " vs " << best.hitrate << " (" << 100 * hr_gap << "% lower); " << s.seconds << " s";
  o.check(h.trials.size() == 25 && s.combined.trials.size() == 25, "25 trials per study");
  o.check(val_gain >= 0.10, "validation HitRate +10%");
  o.check(*comb.vrc_genre > *best.vrc_genre, "combined VRC_genre greater");
  o.check(hr_gap <= 0.15, "combined HitRate within 15%");
  o.check(s.seconds < 45 * 60, "runtime < 45 min");
}

// ---- 7: proxy correlation ------------------------------------------------------

void proxy_correlation(Outcome& o) {
  auto& s = studies();
  std::vector<double> v, c;
  for (const Study* st : {&s.hitrate, &s.combined})
    for (const auto& t : st->trials)
      if (t.metrics.vrc_genre && t.metrics.coherence_genre) {
        v.push_back(*t.metrics.vrc_genre);
        c.push_back(*t.metrics.coherence_genre);
      }
  const double rho = v.size() >= 2 ? spearman(v, c).value_or(NAN) : NAN;
  o.detail << v.size() << " spaces, Spearman(VRC_genre, genre coherence) " << rho;
  o.check(v.size() >= 5, "at least 5 spaces");
  o.check(rho > 0, "positive correlation");
}

// ---- 8: popularity -------------------------------------------------------------

void popularity(Outcome& o) {
  auto& w = world();
  const auto space = train(w.ds, w.vocab, HyperParams{}, TrainOptions{});
  const auto pb = bucketize(w.corpus.catalog, 5);
  const double song_mass = static_cast<double>(pb.max_song_plays) / static_cast<double>(pb.total_plays);
  double worst_mass = 0;
  for (int b = 0; b < 5; ++b) worst_mass = std::max(worst_mass, std::abs(pb.mass(b) - 0.2));

  auto pairs = make_outset_pairs(w.ds, w.vocab, Split::validation).pairs;
  const auto test_pairs = make_outset_pairs(w.ds, w.vocab, Split::test).pairs;
  pairs.insert(pairs.end(), test_pairs.begin(), test_pairs.end());
  const NeighborIndex index(space);
  NeighborCache cache(index, 100, 1);
  const auto m = bucket_hitrate_matrix(cache, pairs, pb.for_vocabulary(w.vocab), 5, 1000, 100, 1);
  double near = 0, far = 0;
  int n_near = 0, n_far = 0;
  for (int q = 0; q < 5; ++q)
    for (int t = 0; t < 5; ++t) {
      const auto& cell = m.at(q, t);
      if (!cell.hitrate) continue;
      if (std::abs(q - t) <= 1) near += *cell.hitrate, ++n_near;
      if (std::abs(q - t) >= 3) far += *cell.hitrate, ++n_far;
    }
  near /= std::max(1, n_near);
  far /= std::max(1, n_far);
  o.detail << "bucket songs";
  for (auto n : pb.songs_per_bucket) o.detail << ' ' << n;
  o.detail << ", max |mass - 0.2| " << worst_mass << " (one song " << song_mass << "), " << m.filled() << " cells filled, mean |d|<=1 " << near
           << " vs |d|>=3 " << far;
  o.check(worst_mass <= song_mass, "masses within one song of 20%");
  o.check(n_near > 0 && n_far > 0 && near > far, "diagonal concentration");
}

// ---- 9: play correlation -------------------------------------------------------

void play_correlation_check(Outcome& o) {
  auto& w = world();
  const auto planted = planted_space(w.corpus, 16, 0.35, 1);
  const NeighborIndex index(planted);
  ObservationGenerator g;  // 50k pairs, p = clamp(0.2 + 0.5 cos)
  const auto obs = generate_play_observations(index, g, 1);
  const auto pc = play_correlation(index, obs, 100);
  auto permuted = obs;
  std::vector<std::size_t> perm(obs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  auto rng = make_rng(9, 9);
  shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    permuted[i].occurrences = obs[perm[i]].occurrences;
    permuted[i].successes = obs[perm[i]].successes;
  }
  const auto null = play_correlation(index, permuted, 100);
  o.detail << "n " << pc.n_all << ", r_all " << *pc.r_all << ", r_frequent " << *pc.r_frequent << " (n " << pc.n_frequent << "), permuted r " << *null.r_all;
  o.check(*pc.r_all > 0.15, "r_all > 0.15");
  o.check(*pc.r_frequent > *pc.r_all, "r_frequent > r_all");
  o.check(pc.n_all >= 50000 && std::abs(*null.r_all) < 0.05, "|null r| < 0.05 at n = 50k");
}

// ---- 10: scale ladder ----------------------------------------------------------

void ladder(Outcome& o) {
  auto& w = world();
  LadderOptions opt;
  opt.study = w.study;
  opt.study.convergence_window = StudyConfig{}.convergence_window;  // 25 trials or convergence
  opt.eval = w.eval;
  opt.eval.coherence = false;
  opt.final_split = Split::test;
  opt.train = w.train;
  opt.min_count = 5;
  const auto rep = scale_ladder(w.ds, {0.1, 0.3, 1.0}, Objective{}, &w.corpus.catalog, opt, 1);
  bool monotone = true, time_increasing = true;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    o.detail << "rate " << r.rate << ": vocabulary " << r.vocabulary_size << ", " << r.trials << " trials, best " << to_json(r.best).dump() << ", full-scale HitRate " << r.full_scale.hitrate
             << " (se " << r.full_scale.hitrate_se << "), " << r.optimization_seconds << " s; ";
    if (i == 0) continue;
    const auto& prev = rep.rows[i - 1];
    if (r.full_scale.hitrate < prev.full_scale.hitrate - std::max(r.full_scale.hitrate_se, prev.full_scale.hitrate_se)) monotone = false;
    if (!(r.optimization_seconds > prev.optimization_seconds)) time_increasing = false;
  }
  o.check(monotone, "full-scale HitRate nondecreasing within 1 SE");
  o.check(time_increasing, "optimization time strictly increasing");
}

// ---- 11: determinism -----------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SONGEMB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Outcome& o) {
  songemb::testing::TempDir dir;
  const std::string out = dir.file("run");
  const std::string data = " --sequences " + out + "/sequences.txt --catalog " + out + "/catalog.tsv";
  const std::string common = " -q --no-timing --workers 1 --seed 11 -o " + out +
                             " --set synth.sequences=4000 --set synth.songs=500 --set observations.pairs=5000 --set data.min_count=2 --set eval.k=50"
                             " --set train.hyperparams.dim=16 --set train.hyperparams.epochs=2 --set popularity.samples_per_cell=200";
  const std::vector<std::string> commands = {
      "synth" + common,
      "prepare" + common + data,
      "train" + common + data,
      "eval" + common + data + " -e " + out + "/embeddings.bin",
      "mine-hardneg" + common + data,
      "optimize" + common + data + " --max-trials 3 --set hpo.init_trials=2",
      "ladder" + common + data + " --max-trials 2 --rates 0.5,1.0",
      "analyze popularity" + common + data + " -e " + out + "/embeddings.bin",
      "analyze play" + common + data + " -e " + out + "/embeddings.bin --observations " + out + "/observations.tsv",
  };
  std::map<std::string, std::string> first;
  int failures = 0;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(out);
    for (const auto& c : commands) failures += run_cli(c) != 0;
    for (const auto& e : fs::directory_iterator(out)) {
      const auto name = e.path().filename().string();
      const auto text = songemb::testing::read_text(e.path().string());
      if (pass == 0) first[name] = text;
      else if (first[name] != text) o.detail << "differs: " << name << "; ";
      else first.erase(name);
    }
  }
  o.detail << commands.size() << " commands run twice, " << failures << " nonzero exits, " << first.size() << " files differing or missing";
  o.check(failures == 0, "every command succeeds");
  o.check(first.empty(), "bit-identical outputs");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"gradient correctness", gradients},
      {"metric oracle equivalence", metric_oracles},
      {"VRC worked example and recomputation", vrc_checks},
      {"chi-squared and hard-negative mining", chi_squared_checks},
      {"negative-sampling distribution", negative_sampling},
      {"planted-structure HPO", planted_hpo},
      {"VRC / local coherence proxy correlation", proxy_correlation},
      {"popularity buckets and diagonal concentration", popularity},
      {"play-rate correlation", play_correlation_check},
      {"scale ladder", ladder},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto start = Clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": " << o.detail.str() << " [" << seconds_since(start)
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
