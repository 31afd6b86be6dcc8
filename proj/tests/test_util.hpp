#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "songemb/corpus.hpp"

namespace songemb::testing {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("songemb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SequenceDataset dataset_from(const std::string& text) {
  std::istringstream in(text);
  return parse_sequences(in);
}

// Every sequence labeled train.
inline SequenceDataset train_only(const std::string& text) {
  auto ds = dataset_from(text);
  ds.labels.assign(ds.sequences.size(), Split::train);
  return ds;
}

}  // namespace songemb::testing
