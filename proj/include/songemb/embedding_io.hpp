#pragma once

// Embedding files: a word2vec-style text format and an exact binary format
// (raw little-endian float32 rows plus a JSON sidecar).

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "songemb/corpus.hpp"
#include "songemb/error.hpp"
#include "songemb/sgns.hpp"

namespace songemb {

inline nlohmann::json to_json(const HyperParams& hp) {
  return {{"dim", hp.dim},           {"window", hp.window},   {"neg_exponent", hp.neg_exponent}, {"negatives", hp.negatives},
          {"learning_rate", hp.learning_rate}, {"epochs", hp.epochs}, {"seed", hp.seed}};
}

inline HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams hp = {}) {
  hp.dim = j.value("dim", hp.dim);
  hp.window = j.value("window", hp.window);
  hp.neg_exponent = j.value("neg_exponent", hp.neg_exponent);
  hp.negatives = j.value("negatives", hp.negatives);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.epochs = j.value("epochs", hp.epochs);
  hp.seed = j.value("seed", hp.seed);
  return hp;
}

inline void write_embeddings_text(const std::string& path, const EmbeddingSpace& space) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw RuntimeFailure("cannot write file: " + path);
  std::fprintf(f, "%zu %d\n", space.size(), space.dim);
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::fputs(space.vocab.id(i).c_str(), f);
    for (float v : space.row(i)) std::fprintf(f, " %.6f", static_cast<double>(v));
    std::fputc('\n', f);
  }
  std::fclose(f);
}

inline EmbeddingSpace read_embeddings_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::size_t n = 0;
  int dim = 0;
  in >> n >> dim;
  require(static_cast<bool>(in) && dim > 0, path + ": malformed header, expected '|V| d'");
  EmbeddingSpace space;
  space.dim = dim;
  space.vectors.resize(n * static_cast<std::size_t>(dim));
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    in >> ids[i];
    for (int k = 0; k < dim; ++k) in >> space.vectors[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)];
    require(static_cast<bool>(in), path + ": truncated at row " + std::to_string(i));
  }
  space.vocab = Vocabulary(std::move(ids), {});
  space.hyperparams.dim = dim;
  return space;
}

inline void write_embeddings_binary(const std::string& path, const EmbeddingSpace& space) {
  static_assert(std::endian::native == std::endian::little, "binary embedding format assumes a little-endian host");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(space.vectors.data()), static_cast<std::streamsize>(space.vectors.size() * sizeof(float)));
  }
  nlohmann::json side = {{"format", "songemb-f32le"},
                         {"size", space.size()},
                         {"dim", space.dim},
                         {"ids", space.vocab.ids()},
                         {"frequencies", space.vocab.frequencies()},
                         {"hyperparams", to_json(space.hyperparams)},
                         {"budget_truncated", space.stats.budget_truncated}};
  std::ofstream js(path + ".json");
  if (!js) throw RuntimeFailure("cannot write file: " + path + ".json");
  js << side.dump(2) << '\n';
}

inline EmbeddingSpace read_embeddings_binary(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw ValidationError("cannot open sidecar: " + path + ".json");
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ".json: " + e.what());
  }
  require(side.value("format", "") == "songemb-f32le", path + ".json: unknown format");
  EmbeddingSpace space;
  space.dim = side.at("dim").get<int>();
  const auto n = side.at("size").get<std::size_t>();
  auto ids = side.at("ids").get<std::vector<std::string>>();
  auto freq = side.value("frequencies", std::vector<std::uint64_t>{});
  require(ids.size() == n, path + ".json: id count mismatch");
  space.vocab = Vocabulary(std::move(ids), std::move(freq));
  if (side.contains("hyperparams")) space.hyperparams = hyperparams_from_json(side["hyperparams"]);
  space.stats.budget_truncated = side.value("budget_truncated", false);
  space.vectors.resize(n * static_cast<std::size_t>(space.dim));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  in.read(reinterpret_cast<char*>(space.vectors.data()), static_cast<std::streamsize>(space.vectors.size() * sizeof(float)));
  require(in.gcount() == static_cast<std::streamsize>(space.vectors.size() * sizeof(float)), path + ": truncated binary");
  return space;
}

// Picks the format by extension: ".bin" is binary, anything else text.
inline EmbeddingSpace read_embeddings(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return read_embeddings_binary(path);
  return read_embeddings_text(path);
}

inline void write_embeddings(const std::string& path, const EmbeddingSpace& space) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return write_embeddings_binary(path, space);
  write_embeddings_text(path, space);
}

}  // namespace songemb
