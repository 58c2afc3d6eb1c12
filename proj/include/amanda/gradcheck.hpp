#pragma once

#include <functional>

#include "amanda/graph.hpp"

namespace amanda {

/// Builds a scalar expression from the leaf standing in for `x`.
using ScalarFn = std::function<Var<double>(Graph<double>&, Var<double>)>;

/// Largest coordinate-wise relative error between the backward-pass gradient of
/// `f` at `x` and a central difference with step `eps`:
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const ScalarFn& f, const Tensor<double>& x, double eps = 1e-6);

}  // namespace amanda
