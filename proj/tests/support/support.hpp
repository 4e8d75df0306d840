// Helpers shared by the unit and acceptance tests.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "icubench/neural/batch.hpp"
#include "icubench/neural/lstm.hpp"
#include "icubench/rng.hpp"
#include "oracles.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("icubench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Random batch: numeric ~ N(0, 1), categorical uniform over each vocab.
inline icubench::nn::SequenceBatch random_batch(icubench::Rng& rng, std::vector<int> lengths, int n_numeric,
                                                const std::vector<int>& vocab_sizes) {
  icubench::nn::SequenceBatch batch;
  batch.reset(std::move(lengths), n_numeric, static_cast<int>(vocab_sizes.size()));
  for (int t = 0; t < batch.length; ++t) {
    for (int b = 0; b < batch.size; ++b) {
      for (int r = 0; r < n_numeric; ++r) batch.numeric[t](r, b) = rng.normal();
      for (std::size_t v = 0; v < vocab_sizes.size(); ++v) {
        batch.categorical[t](static_cast<Eigen::Index>(v), b) =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_sizes[v])));
      }
    }
  }
  return batch;
}

inline oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
  oracle::Matrix out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

inline oracle::LstmWeights weights_of(icubench::nn::LstmDirection& d) {
  oracle::LstmWeights w;
  w.wx = to_rows(d.wx->value);
  w.wh = to_rows(d.wh->value);
  w.b.assign(d.bias->value.data(), d.bias->value.data() + d.bias->value.size());
  return w;
}

/// Column b of a batch's step inputs as plain vectors, valid steps only.
inline std::vector<std::vector<double>> sequence_of(const std::vector<Eigen::MatrixXd>& xs, int b, int length) {
  std::vector<std::vector<double>> out;
  for (int t = 0; t < length; ++t) {
    const auto col = xs[t].col(b);
    out.emplace_back(col.data(), col.data() + col.size());
  }
  return out;
}

}  // namespace testing
