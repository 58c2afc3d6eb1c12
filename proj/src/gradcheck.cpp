#include "amanda/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace amanda {
namespace {

double evaluate(const ScalarFn& f, const Tensor<double>& x) {
  Graph<double> g;
  Var<double> root = f(g, g.constant(x));
  if (root.size() != 1) throw DimensionError("finite_diff_check: function is not scalar-valued");
  const double v = root.value().data[0];
  if (!std::isfinite(v)) throw NonFiniteError("finite_diff_check: non-finite function value");
  return v;
}

}  // namespace

double finite_diff_check(const ScalarFn& f, const Tensor<double>& x, double eps) {
  Tensor<double> leaf(x.shape, x.data, true);
  {
    Graph<double> g;
    Var<double> root = f(g, g.param(leaf));
    g.backward(root);
  }
  const std::vector<double> analytic = leaf.grad;
  double worst = 0.0;
  Tensor<double> probe(x.shape, x.data);
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe.data[i] = x.data[i] + eps;
    const double up = evaluate(f, probe);
    probe.data[i] = x.data[i] - eps;
    const double down = evaluate(f, probe);
    probe.data[i] = x.data[i];
    const double numeric = (up - down) / (2.0 * eps);
    if (!std::isfinite(analytic[i]) || !std::isfinite(numeric)) {
      throw NonFiniteError("finite_diff_check: non-finite gradient at coordinate " + std::to_string(i));
    }
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace amanda
