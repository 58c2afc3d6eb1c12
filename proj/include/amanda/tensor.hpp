#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "amanda/errors.hpp"

namespace amanda {

using Shape = std::vector<std::size_t>;

/// Boolean mask stored one byte per entry; nonzero means "keep".
using Mask = std::vector<std::uint8_t>;

std::string shape_str(const Shape& s);

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major array. `grad` is empty until a backward pass fills it.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::vector<T> grad;

  Tensor() = default;
  Tensor(Shape s, std::vector<T> d, bool rg = false)
      : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    validate();
  }

  static Tensor zeros(Shape s, bool rg = false) {
    const std::size_t n = shape_size(s);
    return Tensor(std::move(s), std::vector<T>(n, T(0)), rg);
  }
  static Tensor filled(Shape s, T v) {
    const std::size_t n = shape_size(s);
    return Tensor(std::move(s), std::vector<T>(n, v));
  }
  static Tensor matrix(std::size_t r, std::size_t c, std::initializer_list<T> vals) {
    return Tensor({r, c}, std::vector<T>(vals));
  }
  static Tensor vector(std::initializer_list<T> vals) {
    return Tensor({vals.size()}, std::vector<T>(vals));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool has_grad() const { return !grad.empty(); }

  /// Row count when viewed as a matrix whose columns are the last axis.
  std::size_t rows() const { return shape.empty() ? 1 : size() / shape.back(); }
  std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }

  T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  void zero_grad() { grad.assign(data.size(), T(0)); }

  void validate() const {
    for (std::size_t e : shape) {
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    }
    if (shape_size(shape) != data.size()) {
      throw DimensionError("shape " + shape_str(shape) + " does not match " +
                           std::to_string(data.size()) + " values");
    }
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    out.requires_grad = requires_grad;
    return out;
  }
};

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace amanda
