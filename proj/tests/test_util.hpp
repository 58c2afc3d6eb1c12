#pragma once

#include <random>

#include "amanda/ops.hpp"

namespace amanda::testing {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  auto t = Tensor<double>::zeros(std::move(shape));
  for (auto& x : t.data) x = u(rng);
  return t;
}

// Contracts an output with fixed random weights so gradient entries are O(1).
inline Var<double> contract(Var<double> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum_all(mul_const(y, random_tensor(y.shape(), rng)));
}

inline double row_sum(const Tensor<double>& t, std::size_t r) {
  double s = 0.0;
  for (std::size_t c = 0; c < t.cols(); ++c) s += t.at(r, c);
  return s;
}

}  // namespace amanda::testing
