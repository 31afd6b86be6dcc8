#pragma once

// Exact cosine top-k retrieval by full scan.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "songemb/error.hpp"
#include "songemb/sgns.hpp"

namespace songemb {

struct Neighbor {
  std::uint32_t index;
  double score;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NeighborList {
  std::uint32_t query = 0;
  std::vector<Neighbor> neighbors;  // score non-increasing, ties by ascending index
  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

struct NeighborResult {
  NeighborList list;
  std::optional<std::string> error;
  bool ok() const { return !error; }
};

inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

class NeighborIndex {
 public:
  explicit NeighborIndex(const EmbeddingSpace& space) : size_(space.size()), dim_(space.dim) {
    unit_.resize(static_cast<Eigen::Index>(size_), dim_);
    zero_.assign(size_, false);
    for (std::size_t i = 0; i < size_; ++i) {
      const auto r = space.row(i);
      double nrm = 0.0;
      for (float v : r) nrm += static_cast<double>(v) * v;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        zero_[i] = true;
        ++zero_count_;
        unit_.row(static_cast<Eigen::Index>(i)).setZero();
        continue;
      }
      for (int k = 0; k < dim_; ++k) unit_(static_cast<Eigen::Index>(i), k) = static_cast<double>(r[static_cast<std::size_t>(k)]) / nrm;
    }
  }

  std::size_t size() const { return size_; }
  bool is_zero_norm(std::size_t i) const { return zero_.at(i); }
  std::size_t zero_norm_count() const { return zero_count_; }

  double cosine(std::uint32_t a, std::uint32_t b) const {
    require(a < size_ && b < size_, "cosine: index out of range");
    return unit_.row(a).dot(unit_.row(b));
  }

  // Exact top-k by cosine over every other non-zero song.
  NeighborList topk(std::uint32_t query, std::size_t k) const {
    require(k >= 1, "topk: k must be >= 1");
    if (query >= size_) throw ValidationError("topk: unknown query index " + std::to_string(query));
    if (zero_[query]) throw RuntimeFailure("topk: zero-norm query vector at index " + std::to_string(query));
    std::vector<Neighbor> cand;
    cand.reserve(size_);
    const auto q = unit_.row(query);
    for (std::size_t j = 0; j < size_; ++j) {
      if (j == query || zero_[j]) continue;
      cand.push_back({static_cast<std::uint32_t>(j), unit_.row(static_cast<Eigen::Index>(j)).dot(q)});
    }
    const std::size_t kk = std::min(k, cand.size());
    if (kk < cand.size()) std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk), cand.end(), ranks_before);
    cand.resize(kk);
    std::sort(cand.begin(), cand.end(), ranks_before);
    return {query, std::move(cand)};
  }

  // Element-wise identical to topk; failures are reported per entry.
  std::vector<NeighborResult> topk_batch(std::span<const std::uint32_t> queries, std::size_t k, int workers = 1) const {
    std::vector<NeighborResult> out(queries.size());
    auto run = [&](std::size_t begin, std::size_t step) {
      for (std::size_t i = begin; i < queries.size(); i += step) {
        try {
          out[i].list = topk(queries[i], k);
        } catch (const std::exception& e) {
          out[i].list.query = queries[i];
          out[i].error = e.what();
        }
      }
    };
    const auto w = static_cast<std::size_t>(std::max(1, workers));
    if (w == 1 || queries.size() < 2) {
      run(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < w; ++t) pool.emplace_back(run, t, w);
    }
    return out;
  }

 private:
  std::size_t size_;
  int dim_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> unit_;
  std::vector<bool> zero_;
  std::size_t zero_count_ = 0;
};

// Lazily computed neighbor lists shared by every metric evaluated on one space.
class NeighborCache {
 public:
  NeighborCache(const NeighborIndex& index, std::size_t k, int workers = 1) : index_(index), k_(k), workers_(workers), lists_(index.size()) {}

  std::size_t k() const { return k_; }
  const NeighborIndex& index() const { return index_; }

  // Computes the missing lists for `queries` in one parallel batch.
  void prefetch(std::span<const std::uint32_t> queries) {
    std::vector<std::uint32_t> todo;
    std::vector<bool> seen(lists_.size(), false);
    for (auto q : queries) {
      if (q < lists_.size() && !lists_[q] && !seen[q]) {
        seen[q] = true;
        todo.push_back(q);
      }
    }
    auto res = index_.topk_batch(todo, k_, workers_);
    for (std::size_t i = 0; i < todo.size(); ++i) lists_[todo[i]] = std::move(res[i]);
  }

  const NeighborResult& get(std::uint32_t q) {
    if (q >= lists_.size()) throw ValidationError("neighbor cache: unknown query index " + std::to_string(q));
    if (!lists_[q]) {
      const std::uint32_t one[] = {q};
      prefetch(one);
    }
    return *lists_[q];
  }

 private:
  const NeighborIndex& index_;
  std::size_t k_;
  int workers_;
  std::vector<std::optional<NeighborResult>> lists_;
};

inline void write_neighbor_dump(const std::string& path, const EmbeddingSpace& space, std::span<const NeighborList> lists) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write file: " + path);
  out << "query_id\trank\tneighbor_id\tscore\n";
  out.precision(9);
  for (const auto& l : lists)
    for (std::size_t r = 0; r < l.neighbors.size(); ++r)
      out << space.vocab.id(l.query) << '\t' << r + 1 << '\t' << space.vocab.id(l.neighbors[r].index) << '\t' << l.neighbors[r].score << '\n';
}

}  // namespace songemb
