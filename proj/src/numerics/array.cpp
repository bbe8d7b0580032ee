#include "vafusion/numerics/array.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "vafusion/errors.hpp"

namespace vaf {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NumArray::NumArray(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

NumArray::NumArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw ShapeError("NumArray: shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

NumArray NumArray::matrix(std::size_t rows, std::size_t cols, double fill) {
  return NumArray(Shape{rows, cols}, fill);
}

NumArray NumArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("NumArray::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return NumArray(Shape{r, c}, std::move(data));
}

NumArray NumArray::row_vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return NumArray(Shape{1, n}, std::move(values));
}

std::size_t NumArray::rows() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
  return r;
}

std::size_t NumArray::cols() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  return shape_.back();
}

bool NumArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void NumArray::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double NumArray::item() const {
  if (data_.size() != 1) throw ShapeError("NumArray::item on array of shape " + shape_string(shape_));
  return data_[0];
}

bool bit_equal(const NumArray& a, const NumArray& b) {
  if (a.shape() != b.shape()) return false;
  return a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const NumArray& a, const NumArray& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Mask::Mask(std::size_t rows, std::size_t cols, bool fill) : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

Mask Mask::from_rows(std::initializer_list<std::initializer_list<bool>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Mask m(r, c, false);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Mask::from_rows: ragged rows");
    std::size_t j = 0;
    for (bool b : row) m.set(i, j++, b);
    ++i;
  }
  return m;
}

std::size_t Mask::count_row(std::size_t r) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < cols_; ++c) n += bits_[r * cols_ + c];
  return n;
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

}  // namespace vaf
