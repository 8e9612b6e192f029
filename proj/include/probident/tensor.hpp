#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace probident {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out << (i ? "," : "") << shape[i];
  }
  out << ']';
  return out.str();
}

/// Dense row-major array of doubles. The first axis is the sample axis for
/// batched data; the last axis is the unit/channel axis.
class Tensor {
 public:
  Tensor() : shape_{1}, values_(1, 0.0) {}

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    values_.assign(shape_product(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape(shape_);
    if (shape_product(shape_) != values_.size()) {
      throw std::invalid_argument("tensor: shape " + shape_string(shape_) + " does not hold " +
                                  std::to_string(values_.size()) + " values");
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }

  /// Number of entries per leading-axis slice (per sample).
  std::size_t row_size() const noexcept { return values_.size() / shape_.front(); }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double& at(std::size_t row, std::size_t col) { return values_[row * row_size() + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * row_size() + col]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * row_size(), row_size()}; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * row_size(), row_size()};
  }

  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), values_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(values_)); }

  /// Copies the given leading-axis rows, in order, into a new tensor.
  Tensor gather_rows(std::span<const std::size_t> rows) const {
    Shape shape = shape_;
    shape.front() = rows.size();
    std::vector<double> out;
    out.reserve(rows.size() * row_size());
    for (std::size_t r : rows) {
      auto src = row(r);
      out.insert(out.end(), src.begin(), src.end());
    }
    return Tensor(std::move(shape), std::move(out));
  }

  bool operator==(const Tensor&) const = default;

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) {
      throw std::invalid_argument("tensor: shape must have at least one dimension");
    }
    for (std::size_t d : shape) {
      if (d == 0) {
        throw std::invalid_argument("tensor: zero-sized dimension in " + shape_string(shape));
      }
    }
  }

  Shape shape_;
  std::vector<double> values_;
};

}  // namespace probident
