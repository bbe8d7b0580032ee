#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vaf {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of 64-bit floats.
///
/// Every operation in this library views an array as a matrix: the last axis
/// is the column axis and all leading axes are folded into rows. A rank-1
/// array is therefore a single row.
class NumArray {
 public:
  NumArray() = default;
  explicit NumArray(Shape shape, double fill = 0.0);
  NumArray(Shape shape, std::vector<double> data);

  static NumArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static NumArray from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static NumArray row_vector(std::vector<double> values);
  static NumArray scalar(double v) { return matrix(1, 1, v); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  bool same_shape(const NumArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);
  double item() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Bitwise equality of shape and contents (distinguishes -0.0 and NaN payloads).
bool bit_equal(const NumArray& a, const NumArray& b);

double max_abs_diff(const NumArray& a, const NumArray& b);

/// Boolean array with the same matrix view as NumArray.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = true);
  static Mask from_rows(std::initializer_list<std::initializer_list<bool>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }
  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * cols_ + c] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  const std::uint8_t* data() const { return bits_.data(); }
  std::size_t count_row(std::size_t r) const;
  std::size_t count() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace vaf
