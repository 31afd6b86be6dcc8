#pragma once

// Skip-gram with negative sampling: loss, analytic gradients, the negative
// sampling table and a (optionally lock-free multi-threaded) trainer.

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/rng.hpp"

namespace songemb {

struct HyperParams {
  int dim = 100;               // d
  int window = 5;              // L, maximum window length
  double neg_exponent = 0.75;  // alpha
  int negatives = 5;           // N
  double learning_rate = 0.025;
  int epochs = 5;
  std::uint64_t seed = 1;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;

  void validate() const {
    require(dim >= 1, "hyperparams: dim must be >= 1");
    require(window >= 1, "hyperparams: window must be >= 1");
    require(negatives >= 0, "hyperparams: negatives must be >= 0");
    require(learning_rate > 0, "hyperparams: learning rate must be positive");
    require(epochs >= 1, "hyperparams: epochs must be >= 1");
    require(std::isfinite(neg_exponent), "hyperparams: negative exponent must be finite");
  }
};

class NegativeSamplingTable {
 public:
  NegativeSamplingTable(std::span<const std::uint64_t> frequency, double exponent) : exponent_(exponent) {
    require(!frequency.empty(), "negative table: empty vocabulary");
    cumulative_.reserve(frequency.size());
    double acc = 0.0;
    for (auto f : frequency) {
      require(f >= 1, "negative table: frequencies must be >= 1");
      acc += std::pow(static_cast<double>(f), exponent);
      cumulative_.push_back(acc);
    }
  }

  std::size_t size() const { return cumulative_.size(); }
  double exponent() const { return exponent_; }
  double total_weight() const { return cumulative_.back(); }

  double probability(std::size_t i) const {
    const double lo = i == 0 ? 0.0 : cumulative_[i - 1];
    return (cumulative_[i] - lo) / cumulative_.back();
  }

  std::uint32_t sample(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
  double exponent_;
};

inline NegativeSamplingTable build_negative_table(const Vocabulary& vocab, double exponent) {
  require(!vocab.empty(), "negative table: empty vocabulary");
  return NegativeSamplingTable(vocab.frequencies(), exponent);
}

template <class T>
T log_sigmoid(T x) {
  return x >= T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <class T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

namespace detail {
template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  require(a.size() == b.size(), "sgns: dimension mismatch");
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace detail

// -log s(q.t) - sum_k log s(-q.k)
template <class T>
T sgns_pair_loss(std::span<const T> query, std::span<const T> target, std::span<const std::vector<T>> negatives) {
  T loss = -log_sigmoid(detail::dot(query, target));
  for (const auto& k : negatives) loss -= log_sigmoid(-detail::dot<T>(query, k));
  return loss;
}

template <class T>
struct SgnsGradient {
  std::vector<T> query;
  std::vector<T> target;
  std::vector<std::vector<T>> negatives;
};

// dL/d(q.t) = s(q.t) - 1 and dL/d(q.k) = s(q.k); every gradient is one of these
// coefficients times the partner vector.
template <class T>
SgnsGradient<T> sgns_gradient(std::span<const T> query, std::span<const T> target, std::span<const std::vector<T>> negatives) {
  const std::size_t d = query.size();
  SgnsGradient<T> g;
  g.query.assign(d, T(0));
  const T ct = sigmoid(detail::dot(query, target)) - T(1);
  g.target.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.query[i] += ct * target[i];
    g.target[i] = ct * query[i];
  }
  for (const auto& k : negatives) {
    const T ck = sigmoid(detail::dot<T>(query, k));
    std::vector<T> gk(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.query[i] += ck * k[i];
      gk[i] = ck * query[i];
    }
    g.negatives.push_back(std::move(gk));
  }
  return g;
}

// Closed form of sum_{w=1..L} min(w, a).
inline double window_min_sum(std::size_t a, std::size_t max_window) {
  const double aa = static_cast<double>(a), l = static_cast<double>(max_window);
  if (a >= max_window) return l * (l + 1) / 2;
  return aa * (aa + 1) / 2 + aa * (l - aa);
}

// Expected number of (center, context) pairs of a length-n sequence under the
// uniformly shrunk window.
inline double expected_pair_count(std::size_t n, std::size_t max_window) {
  double s = 0.0;
  for (std::size_t c = 0; c < n; ++c) s += window_min_sum(c, max_window) + window_min_sum(n - 1 - c, max_window);
  return s / static_cast<double>(max_window);
}

// For each center position draws w uniformly from {1..max_window} and emits
// (center, context) for every context within w. Returns the number of pairs.
template <class F>
std::size_t for_each_window_pair(std::span<const std::uint32_t> seq, int max_window, Rng& rng, F&& emit) {
  std::size_t pairs = 0;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(seq.size());
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto w = static_cast<std::ptrdiff_t>(1 + uniform_index(rng, static_cast<std::uint64_t>(max_window)));
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, c - w);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, c + w);
    for (std::ptrdiff_t o = lo; o <= hi; ++o) {
      if (o == c) continue;
      emit(seq[static_cast<std::size_t>(c)], seq[static_cast<std::size_t>(o)]);
      ++pairs;
    }
  }
  return pairs;
}

enum class BudgetMode {
  wall_clock,  // seconds of training wall-clock
  work,        // deterministic cost units: pairs * (negatives + 1) * dim
};

struct TrainOptions {
  std::optional<double> budget;  // in units of budget_mode
  BudgetMode budget_mode = BudgetMode::wall_clock;
  int workers = 1;
  bool mask_last = false;  // withhold the last token of every training sequence
  bool track_loss = false;
  bool keep_context = false;  // also return the output (context) matrix
};

struct TrainStats {
  double seconds = 0.0;
  double work = 0.0;
  bool budget_truncated = false;
  std::uint64_t pairs = 0;
  std::uint64_t sequences_processed = 0;
  std::vector<double> epoch_loss;  // mean pair loss per completed epoch when tracked
};

struct EmbeddingSpace {
  Vocabulary vocab;
  int dim = 0;
  std::vector<float> vectors;  // row-major |V| x dim, input vectors
  std::vector<float> context_vectors;  // output vectors, empty unless requested
  HyperParams hyperparams;
  TrainStats stats;

  std::size_t size() const { return vocab.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
  std::span<float> row(std::size_t i) { return {vectors.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
};

namespace detail {

// One SGD step on the pair loss. Output-vector updates are applied as they are
// produced; the input-vector update is accumulated. Returns the pair loss when asked.
inline double sgns_sgd_step(float* in_row, float* out, std::uint32_t context, std::span<const std::uint32_t> negs, int dim,
                            float lr, float* accum, bool want_loss) {
  using Vec = Eigen::Map<Eigen::VectorXf>;
  Vec q(in_row, dim);
  Vec acc(accum, dim);
  acc.setZero();
  double loss = 0.0;
  auto visit = [&](std::uint32_t id, bool positive) {
    Vec o(out + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim), dim);
    const float f = q.dot(o);
    const float s = sigmoid(f);
    const float coef = positive ? s - 1.0f : s;
    if (want_loss) loss -= positive ? log_sigmoid(static_cast<double>(f)) : log_sigmoid(-static_cast<double>(f));
    acc.noalias() += coef * o;
    o.noalias() -= (lr * coef) * q;
  };
  visit(context, true);
  for (auto k : negs) visit(k, false);
  q.noalias() -= lr * acc;
  return loss;
}

}  // namespace detail

// Trains input/output matrices with SGNS. Deterministic for workers == 1. With more
// workers the parameter matrices are shared without synchronisation (hogwild).
inline EmbeddingSpace train(const SequenceDataset& ds, const Vocabulary& vocab, const HyperParams& hp, const TrainOptions& opt = {}) {
  hp.validate();
  require(opt.workers >= 1, "train: workers must be >= 1");
  require(!vocab.empty(), "train: empty vocabulary");
  const auto sequences = encode_split(ds, vocab, Split::train, opt.mask_last);
  require(!sequences.empty(), "train: empty training split");

  const auto clock_start = std::chrono::steady_clock::now();
  const std::size_t V = vocab.size();
  const int d = hp.dim;

  EmbeddingSpace space;
  space.vocab = vocab;
  space.dim = d;
  space.hyperparams = hp;
  space.vectors.resize(V * static_cast<std::size_t>(d));
  {
    auto rng = make_rng(hp.seed, streams::kTrainInit);
    for (auto& v : space.vectors) v = static_cast<float>((uniform01(rng) - 0.5) / d);
  }
  std::vector<float> out(V * static_cast<std::size_t>(d), 0.0f);
  const auto table = build_negative_table(vocab, hp.neg_exponent);

  double scheduled = 0.0;
  for (const auto& s : sequences) scheduled += expected_pair_count(s.size(), static_cast<std::size_t>(hp.window));
  scheduled *= hp.epochs;
  scheduled = std::max(scheduled, 1.0);

  const double cost_per_pair = static_cast<double>(hp.negatives + 1) * d;
  std::atomic<std::uint64_t> done_pairs{0};
  std::atomic<std::uint64_t> done_sequences{0};
  std::atomic<bool> stop{false};
  const int workers = std::min<int>(opt.workers, static_cast<int>(sequences.size()));
  std::vector<std::vector<double>> worker_loss(static_cast<std::size_t>(workers), std::vector<double>(static_cast<std::size_t>(hp.epochs), 0.0));
  std::vector<std::vector<std::uint64_t>> worker_loss_pairs(static_cast<std::size_t>(workers), std::vector<std::uint64_t>(static_cast<std::size_t>(hp.epochs), 0));

  auto over_budget = [&]() {
    if (!opt.budget) return false;
    if (opt.budget_mode == BudgetMode::work) return static_cast<double>(done_pairs.load(std::memory_order_relaxed)) * cost_per_pair >= *opt.budget;
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - clock_start;
    return el.count() >= *opt.budget;
  };

  auto run_worker = [&](int w) {
    const auto wseed = derive_seed(hp.seed, streams::kTrainWorker + static_cast<std::uint64_t>(w) * 16);
    Rng window_rng(derive_seed(wseed, 1));
    Rng neg_rng(derive_seed(wseed, 2));
    std::vector<float> accum(static_cast<std::size_t>(d));
    std::vector<std::uint32_t> negs(static_cast<std::size_t>(hp.negatives));
    for (int epoch = 0; epoch < hp.epochs && !stop.load(std::memory_order_relaxed); ++epoch) {
      for (std::size_t si = static_cast<std::size_t>(w); si < sequences.size(); si += static_cast<std::size_t>(workers)) {
        if (stop.load(std::memory_order_relaxed) || over_budget()) {
          stop.store(true, std::memory_order_relaxed);
          break;
        }
        const double progress = static_cast<double>(done_pairs.load(std::memory_order_relaxed)) / scheduled;
        const float lr = static_cast<float>(hp.learning_rate * std::max(1e-4, 1.0 - progress));
        double loss = 0.0;
        const auto pairs = for_each_window_pair(sequences[si], hp.window, window_rng, [&](std::uint32_t center, std::uint32_t context) {
          for (auto& k : negs) {
            k = table.sample(neg_rng);
            for (int attempt = 0; attempt < 8 && k == context; ++attempt) k = table.sample(neg_rng);
          }
          loss += detail::sgns_sgd_step(space.vectors.data() + static_cast<std::size_t>(center) * d, out.data(), context, negs, d, lr,
                                        accum.data(), opt.track_loss);
        });
        worker_loss[static_cast<std::size_t>(w)][static_cast<std::size_t>(epoch)] += loss;
        worker_loss_pairs[static_cast<std::size_t>(w)][static_cast<std::size_t>(epoch)] += pairs;
        done_pairs.fetch_add(pairs, std::memory_order_relaxed);
        done_sequences.fetch_add(1, std::memory_order_relaxed);
      }
    }
  };

  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
  }

  auto& st = space.stats;
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  st.pairs = done_pairs.load();
  st.work = static_cast<double>(st.pairs) * cost_per_pair;
  st.sequences_processed = done_sequences.load();
  st.budget_truncated = stop.load();
  if (opt.track_loss) {
    for (int e = 0; e < hp.epochs; ++e) {
      double l = 0.0;
      std::uint64_t p = 0;
      for (int w = 0; w < workers; ++w) {
        l += worker_loss[static_cast<std::size_t>(w)][static_cast<std::size_t>(e)];
        p += worker_loss_pairs[static_cast<std::size_t>(w)][static_cast<std::size_t>(e)];
      }
      if (p > 0) st.epoch_loss.push_back(l / static_cast<double>(p));
    }
  }
  if (opt.keep_context) space.context_vectors = std::move(out);
  return space;
}

}  // namespace songemb
