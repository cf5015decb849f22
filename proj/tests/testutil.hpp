#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "risksample/dataset.hpp"
#include "risksample/util.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("risksample-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Minimal corpus with the requested label balance; one attribute per record.
inline risksample::Corpus make_label_corpus(std::size_t n_pairs, double pos_rate,
                                            std::uint64_t seed) {
  risksample::Corpus corpus;
  corpus.schema = {"name"};
  risksample::Rng rng(seed);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::string tag = std::to_string(i);
    corpus.left_table.push_back({"l" + tag, {"item " + tag}});
    corpus.right_table.push_back({"r" + tag, {"thing " + tag}});
    risksample::RecordPair p;
    p.pair_id = risksample::make_pair_id("l" + tag, "r" + tag);
    p.left_index = i;
    p.right_index = i;
    p.label = rng.uniform() < pos_rate ? 1 : 0;
    corpus.pairs.push_back(std::move(p));
  }
  corpus.rebuild_pair_index();
  return corpus;
}

}  // namespace testutil
