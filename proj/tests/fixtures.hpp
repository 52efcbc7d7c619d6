#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "plfl/data.hpp"
#include "plfl/model.hpp"

namespace plfl::fixtures {

/// Small model used where default dims would only slow a test down.
inline ModelDims tiny_dims() {
  ModelDims d;
  d.hidden = 3;
  d.lookback = 4;
  d.mlp_hidden = {5, 4};
  return d;
}

/// Two-week synthetic clients windowed for `dims` with look-ahead 2.
inline std::vector<DatasetSplits> synthetic_splits(std::size_t clients, std::uint64_t seed, const ModelDims& dims,
                                                   std::size_t length = 2 * kStepsPerWeek) {
  SyntheticSpec spec;
  spec.clients = clients;
  spec.length = length;
  std::vector<DatasetSplits> out;
  for (const auto& s : generate_synthetic(spec, seed)) out.push_back(split_and_window(s, SplitSpec{}, dims.lookback, 2));
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("plfl_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace plfl::fixtures
