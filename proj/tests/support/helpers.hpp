#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vafusion/numerics/array.hpp"
#include "vafusion/numerics/autograd.hpp"
#include "vafusion/numerics/rng.hpp"

namespace testing {

inline oracle::Mat to_mat(const vaf::NumArray& a) {
  oracle::Mat m(a.rows(), std::vector<double>(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m[r][c] = a(r, c);
  return m;
}

inline vaf::NumArray from_mat(const oracle::Mat& m) {
  vaf::NumArray a = vaf::NumArray::matrix(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) a(r, c) = m[r][c];
  return a;
}

inline std::vector<double> to_vec(const vaf::NumArray& a) { return {a.values().begin(), a.values().end()}; }

inline oracle::Dense dense_of(const vaf::ParameterSet& p, const std::string& name) {
  oracle::Dense d;
  d.w = to_mat(p.at(name + ".weight").value);
  if (auto* b = p.find(name + ".bias")) d.b = to_vec(b->value);
  return d;
}

inline double max_diff(const oracle::Mat& a, const oracle::Mat& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) m = std::max(m, std::abs(a[r][c] - b[r][c]));
  return m;
}

inline vaf::NumArray random_array(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  vaf::Rng rng(seed);
  vaf::NumArray a = vaf::NumArray::matrix(rows, cols);
  for (double& v : a.values()) v = scale * rng.normal();
  return a;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("vaf_" + tag + "_" + std::to_string(rd()));
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
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
