#include "amanda/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amanda {
namespace {

template <typename T>
Shape matrix_shape(std::size_t r, std::size_t c) {
  return Shape{r, c};
}

template <typename T>
void require_same_graph(Var<T> a, Var<T> b, const char* op) {
  if (a.graph != b.graph) throw Error(std::string(op) + ": operands belong to different graphs");
}

// c[p x r] += a[p x q] * b[q x r]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    T* ci = c + i * r;
    const T* ai = a + i * q;
    for (std::size_t k = 0; k < q; ++k) {
      const T aik = ai[k];
      if (aik == T(0)) continue;
      const T* bk = b + k * r;
      for (std::size_t j = 0; j < r; ++j) ci[j] += aik * bk[j];
    }
  }
}

// c[p x r] += a[p x q] * b[r x q]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    const T* ai = a + i * q;
    for (std::size_t j = 0; j < r; ++j) {
      const T* bj = b + j * q;
      T acc = T(0);
      for (std::size_t k = 0; k < q; ++k) acc += ai[k] * bj[k];
      c[i * r + j] += acc;
    }
  }
}

// c[q x r] += a[p x q]^T * b[p x r]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    const T* ai = a + i * q;
    const T* bi = b + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const T aik = ai[k];
      if (aik == T(0)) continue;
      T* ck = c + k * r;
      for (std::size_t j = 0; j < r; ++j) ck[j] += aik * bi[j];
    }
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t p = av.rows(), q = av.cols(), r = bv.cols();
  if (bv.rows() != q || bv.rank() > 2) {
    throw DimensionError("matmul: inner extents differ: " + shape_str(av.shape) + " x " + shape_str(bv.shape));
  }
  auto out = Tensor<T>::zeros(matrix_shape<T>(p, r));
  gemm_nn(av.data.data(), bv.data.data(), out.data.data(), p, q, r);
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->record("matmul", std::move(out), {ia, ib}, [ia, ib, p, q, r](Graph<T>& g, std::size_t, const std::vector<T>& dc) {
    if (g.needs_grad(ia)) gemm_nt(dc.data(), g.value(ib).data.data(), g.grad_mut(ia).data(), p, r, q);
    if (g.needs_grad(ib)) gemm_tn(g.value(ia).data.data(), dc.data(), g.grad_mut(ib).data(), p, q, r);
  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "matmul_nt");
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t p = av.rows(), q = av.cols(), r = bv.rows();
  if (bv.cols() != q) {
    throw DimensionError("matmul_nt: inner extents differ: " + shape_str(av.shape) + " x " + shape_str(bv.shape) +
                         "^T");
  }
  auto out = Tensor<T>::zeros(matrix_shape<T>(p, r));
  gemm_nt(av.data.data(), bv.data.data(), out.data.data(), p, q, r);
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->record("matmul_nt", std::move(out), {ia, ib},
                         [ia, ib, p, q, r](Graph<T>& g, std::size_t, const std::vector<T>& dc) {
                           // dA = dC * B ; dB = dC^T * A
                           if (g.needs_grad(ia)) gemm_nn(dc.data(), g.value(ib).data.data(), g.grad_mut(ia).data(), p, r, q);
                           if (g.needs_grad(ib)) gemm_tn(dc.data(), g.value(ia).data.data(), g.grad_mut(ib).data(), p, r, q);
                         });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "add");
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t ia = a.id, ib = b.id;
  if (av.shape == bv.shape) {
    Tensor<T> out(av.shape, av.data);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
    return a.graph->record("add", std::move(out), {ia, ib}, [ia, ib](Graph<T>& g, std::size_t, const std::vector<T>& d) {
      accumulate(g, ia, d);
      accumulate(g, ib, d);
    });
  }
  if (bv.size() != av.cols() || bv.rows() != 1) {
    throw DimensionError("add: cannot broadcast " + shape_str(bv.shape) + " onto " + shape_str(av.shape));
  }
  const std::size_t r = av.rows(), c = av.cols();
  Tensor<T> out(av.shape, av.data);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += bv.data[j];
  return a.graph->record("add_row", std::move(out), {ia, ib}, [ia, ib, r, c](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    accumulate(g, ia, d);
    if (g.needs_grad(ib)) {
      auto& gb = g.grad_mut(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += d[i * c + j];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "mul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.size() != bv.size() || av.cols() != bv.cols()) {
    throw DimensionError("mul: shapes differ: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  Tensor<T> out(av.shape, av.data);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->record("mul", std::move(out), {ia, ib}, [ia, ib](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    // both branches read the other operand, so a == b accumulates 2x.
    if (g.needs_grad(ia)) {
      auto& ga = g.grad_mut(ia);
      const auto& bd = g.value(ib).data;
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * bd[i];
    }
    if (g.needs_grad(ib)) {
      auto& gb = g.grad_mut(ib);
      const auto& ad = g.value(ia).data;
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i] * ad[i];
    }
  });
}

template <typename T>
Var<T> mul_const(Var<T> a, const Tensor<T>& c) {
  const auto& av = a.value();
  if (av.size() != c.size()) {
    throw DimensionError("mul_const: shapes differ: " + shape_str(av.shape) + " vs " + shape_str(c.shape));
  }
  Tensor<T> out(av.shape, av.data);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= c.data[i];
  const std::size_t ia = a.id;
  return a.graph->record("mul_const", std::move(out), {ia}, [ia, factor = c.data](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * factor[i];
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  const auto& av = a.value();
  Tensor<T> out(av.shape, av.data);
  for (auto& x : out.data) x *= s;
  const std::size_t ia = a.id;
  return a.graph->record("scale", std::move(out), {ia}, [ia, s](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * s;
  });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  const auto& av = a.value();
  Tensor<T> out(av.shape, av.data);
  for (auto& x : out.data) x = sigmoid_scalar(x);
  const std::size_t ia = a.id;
  return a.graph->record("sigmoid", std::move(out), {ia}, [ia](Graph<T>& g, std::size_t self, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    const auto& y = g.value(self).data;
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  const auto& av = a.value();
  Tensor<T> out(av.shape, av.data);
  for (auto& x : out.data) x = std::tanh(x);
  const std::size_t ia = a.id;
  return a.graph->record("tanh", std::move(out), {ia}, [ia](Graph<T>& g, std::size_t self, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    const auto& y = g.value(self).data;
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var<T> concat_last(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "concat_last");
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t r = av.rows();
  if (bv.rows() != r) {
    throw DimensionError("concat_last: row counts differ: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  const std::size_t ca = av.cols(), cb = bv.cols(), c = ca + cb;
  Shape shape = av.rank() == 1 && bv.rank() == 1 ? Shape{c} : Shape{r, c};
  auto out = Tensor<T>::zeros(shape);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(av.data.begin() + i * ca, ca, out.data.begin() + i * c);
    std::copy_n(bv.data.begin() + i * cb, cb, out.data.begin() + i * c + ca);
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->record("concat_last", std::move(out), {ia, ib},
                         [ia, ib, r, ca, cb, c](Graph<T>& g, std::size_t, const std::vector<T>& d) {
                           if (g.needs_grad(ia)) {
                             auto& ga = g.grad_mut(ia);
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += d[i * c + j];
                           }
                           if (g.needs_grad(ib)) {
                             auto& gb = g.grad_mut(ib);
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += d[i * c + ca + j];
                           }
                         });
}

template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t len) {
  const auto& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  if (len == 0 || start + len > c) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for " + shape_str(av.shape));
  }
  auto out = Tensor<T>::zeros(av.rank() == 1 ? Shape{len} : Shape{r, len});
  for (std::size_t i = 0; i < r; ++i) std::copy_n(av.data.begin() + i * c + start, len, out.data.begin() + i * len);
  const std::size_t ia = a.id;
  return a.graph->record("slice_cols", std::move(out), {ia}, [ia, r, c, start, len](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j) ga[i * c + start + j] += d[i * len + j];
  });
}

template <typename T>
Var<T> row(Var<T> a, std::size_t r) {
  const auto& av = a.value();
  const std::size_t c = av.cols();
  if (r >= av.rows()) throw DimensionError("row: index " + std::to_string(r) + " out of range for " + shape_str(av.shape));
  Tensor<T> out(Shape{1, c}, std::vector<T>(av.data.begin() + r * c, av.data.begin() + (r + 1) * c));
  const std::size_t ia = a.id;
  return a.graph->record("row", std::move(out), {ia}, [ia, r, c](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += d[j];
  });
}

template <typename T>
Var<T> stack_rows(const std::vector<Var<T>>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  Graph<T>* graph = rows.front().graph;
  const std::size_t c = rows.front().cols();
  std::vector<std::size_t> ids;
  std::vector<T> data;
  for (const auto& v : rows) {
    if (v.graph != graph) throw Error("stack_rows: operands belong to different graphs");
    if (v.cols() != c) {
      throw DimensionError("stack_rows: column counts differ: " + std::to_string(c) + " vs " + shape_str(v.shape()));
    }
    ids.push_back(v.id);
    data.insert(data.end(), v.value().data.begin(), v.value().data.end());
  }
  const std::size_t r = data.size() / c;
  auto inputs = ids;
  return graph->record("stack_rows", Tensor<T>(Shape{r, c}, std::move(data)), std::move(inputs),
                       [ids](Graph<T>& g, std::size_t, const std::vector<T>& d) {
                         std::size_t off = 0;
                         for (std::size_t id : ids) {
                           const std::size_t n = g.value(id).size();
                           if (g.needs_grad(id)) {
                             auto& gi = g.grad_mut(id);
                             for (std::size_t k = 0; k < n; ++k) gi[k] += d[off + k];
                           }
                           off += n;
                         }
                       });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  const auto& av = a.value();
  if (shape_size(shape) != av.size()) {
    throw DimensionError("reshape: " + shape_str(av.shape) + " to " + shape_str(shape));
  }
  const std::size_t ia = a.id;
  return a.graph->record("reshape", Tensor<T>(std::move(shape), av.data), {ia},
                         [ia](Graph<T>& g, std::size_t, const std::vector<T>& d) { accumulate(g, ia, d); });
}

template <typename T>
Var<T> max_over_last(Var<T> a) {
  const auto& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  auto out = Tensor<T>::zeros(Shape{r});
  std::vector<std::size_t> arg(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (av.data[i * c + j] > av.data[i * c + best]) best = j;
    arg[i] = best;
    out.data[i] = av.data[i * c + best];
  }
  const std::size_t ia = a.id;
  return a.graph->record("max_over_last", std::move(out), {ia}, [ia, c, arg = std::move(arg)](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < arg.size(); ++i) ga[i * c + arg[i]] += d[i];
  });
}

template <typename T>
Var<T> max_n(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw DimensionError("max_n: no inputs");
  Graph<T>* graph = xs.front().graph;
  const auto& first = xs.front().value();
  Tensor<T> out(first.shape, first.data);
  std::vector<std::uint32_t> arg(out.size(), 0);
  std::vector<std::size_t> ids{xs.front().id};
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const auto& xv = xs[k].value();
    if (xs[k].graph != graph) throw Error("max_n: operands belong to different graphs");
    if (xv.shape != first.shape) {
      throw DimensionError("max_n: shapes differ: " + shape_str(first.shape) + " vs " + shape_str(xv.shape));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (xv.data[i] > out.data[i]) {
        out.data[i] = xv.data[i];
        arg[i] = static_cast<std::uint32_t>(k);
      }
    }
    ids.push_back(xs[k].id);
  }
  auto inputs = ids;
  return graph->record("max_n", std::move(out), std::move(inputs),
                       [ids, arg = std::move(arg)](Graph<T>& g, std::size_t, const std::vector<T>& d) {
                         for (std::size_t i = 0; i < d.size(); ++i) {
                           const std::size_t id = ids[arg[i]];
                           if (g.needs_grad(id)) g.grad_mut(id)[i] += d[i];
                         }
                       });
}

namespace {

void check_row_mask(const Mask& m, std::size_t rows, const char* op) {
  if (m.size() != rows) {
    throw DimensionError(std::string(op) + ": mask has " + std::to_string(m.size()) + " entries for " +
                         std::to_string(rows) + " rows");
  }
  if (std::none_of(m.begin(), m.end(), [](std::uint8_t x) { return x != 0; })) {
    throw DegenerateRowError(std::string(op) + ": every row is masked");
  }
}

}  // namespace

template <typename T>
Var<T> max_over_rows(Var<T> a, const Mask& row_mask) {
  const auto& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  check_row_mask(row_mask, r, "max_over_rows");
  auto out = Tensor<T>::zeros(Shape{1, c});
  std::vector<std::size_t> arg(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    if (!row_mask[i]) continue;
    for (std::size_t j = 0; j < c; ++j) {
      if (arg[j] == r || av.data[i * c + j] > out.data[j]) {
        arg[j] = i;
        out.data[j] = av.data[i * c + j];
      }
    }
  }
  const std::size_t ia = a.id;
  return a.graph->record("max_over_rows", std::move(out), {ia}, [ia, c, arg = std::move(arg)](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t j = 0; j < c; ++j) ga[arg[j] * c + j] += d[j];
  });
}

template <typename T>
Var<T> sum_over_rows(Var<T> a, const Mask& row_mask) {
  const auto& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  check_row_mask(row_mask, r, "sum_over_rows");
  auto out = Tensor<T>::zeros(Shape{1, c});
  for (std::size_t i = 0; i < r; ++i)
    if (row_mask[i])
      for (std::size_t j = 0; j < c; ++j) out.data[j] += av.data[i * c + j];
  const std::size_t ia = a.id;
  return a.graph->record("sum_over_rows", std::move(out), {ia}, [ia, r, c, row_mask](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < r; ++i)
      if (row_mask[i])
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += d[j];
  });
}

template <typename T>
Var<T> mean_over_rows(Var<T> a, const Mask& row_mask) {
  const std::size_t n = static_cast<std::size_t>(std::count_if(row_mask.begin(), row_mask.end(), [](std::uint8_t x) { return x != 0; }));
  Var<T> s = sum_over_rows(a, row_mask);
  return scale(s, T(1) / static_cast<T>(n));
}

template <typename T>
Var<T> masked_row_softmax(Var<T> m, const Mask& mask) {
  const auto& mv = m.value();
  const std::size_t r = mv.rows(), c = mv.cols();
  const bool per_column = mask.size() == c && mask.size() != mv.size();
  if (!per_column && mask.size() != mv.size()) {
    throw DimensionError("masked_row_softmax: mask of " + std::to_string(mask.size()) + " entries for " +
                         shape_str(mv.shape));
  }
  auto keep = [&](std::size_t i, std::size_t j) { return per_column ? mask[j] != 0 : mask[i * c + j] != 0; };
  Tensor<T> out(mv.shape, mv.data);
  const T surrogate = static_cast<T>(kMaskedLogit);
  for (std::size_t i = 0; i < r; ++i) {
    T* y = out.data.data() + i * c;
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (keep(i, j)) any = true;
      else y[j] += surrogate;
    }
    if (!any) throw DegenerateRowError("masked_row_softmax: row " + std::to_string(i) + " is fully masked");
    const T mx = *std::max_element(y, y + c);
    T z = T(0);
    for (std::size_t j = 0; j < c; ++j) {
      y[j] = std::exp(y[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < c; ++j) y[j] = keep(i, j) ? y[j] / z : T(0);
  }
  const std::size_t im = m.id;
  return m.graph->record("masked_row_softmax", std::move(out), {im}, [im, r, c](Graph<T>& g, std::size_t self, const std::vector<T>& d) {
    auto& gm = g.grad_mut(im);
    const auto& y = g.value(self).data;
    for (std::size_t i = 0; i < r; ++i) {
      T dot = T(0);
      for (std::size_t j = 0; j < c; ++j) dot += d[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += y[i * c + j] * (d[i * c + j] - dot);
    }
  });
}

template <typename T>
Var<T> masked_cross_entropy(Var<T> logits, const Mask& mask, std::size_t target) {
  const auto& lv = logits.value();
  const std::size_t n = lv.size();
  if (lv.rows() != 1) throw DimensionError("masked_cross_entropy: expected a vector, got " + shape_str(lv.shape));
  if (mask.size() != n) throw DimensionError("masked_cross_entropy: mask size differs from logits");
  if (target >= n || !mask[target]) throw DimensionError("masked_cross_entropy: target outside unmasked range");
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (mask[j]) mx = std::max(mx, lv.data[j]);
  std::vector<T> p(n, T(0));
  T z = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask[j]) continue;
    p[j] = std::exp(lv.data[j] - mx);
    z += p[j];
  }
  for (auto& x : p) x /= z;
  const T loss = -(lv.data[target] - mx - std::log(z));
  const std::size_t il = logits.id;
  return logits.graph->record("masked_cross_entropy", Tensor<T>(Shape{1}, {loss}), {il},
                              [il, target, p = std::move(p)](Graph<T>& g, std::size_t, const std::vector<T>& d) {
                                auto& gl = g.grad_mut(il);
                                for (std::size_t j = 0; j < p.size(); ++j) gl[j] += d[0] * p[j];
                                gl[target] -= d[0];
                              });
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  const auto& av = a.value();
  T s = T(0);
  for (const T& x : av.data) s += x;
  const std::size_t ia = a.id;
  return a.graph->record("sum_all", Tensor<T>(Shape{1}, {s}), {ia}, [ia](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (auto& x : ga) x += d[0];
  });
}

template <typename T>
Var<T> gather_rows(Var<T> table, const std::vector<std::size_t>& ids) {
  const auto& tv = table.value();
  const std::size_t n = tv.rows(), c = tv.cols();
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  auto out = Tensor<T>::zeros(Shape{ids.size(), c});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= n) throw DimensionError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " + std::to_string(n));
    std::copy_n(tv.data.begin() + ids[i] * c, c, out.data.begin() + i * c);
  }
  const std::size_t it = table.id;
  return table.graph->record("gather_rows", std::move(out), {it}, [it, c, ids](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& gt = g.grad_mut(it);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) gt[ids[i] * c + j] += d[i * c + j];
  });
}

std::size_t window_count(std::size_t length, std::size_t width) {
  return std::max(length, width) - width + 1;
}

template <typename T>
Var<T> char_windows(Var<T> emb, const std::vector<WordSpan>& words, std::size_t width) {
  const auto& ev = emb.value();
  const std::size_t d = ev.cols();
  if (width == 0) throw DimensionError("char_windows: zero width");
  // src[row * width + k] = source embedding row, or npos for padding.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> src;
  for (const auto& w : words) {
    if (w.length == 0) throw DimensionError("char_windows: empty word");
    if (w.offset + w.length > ev.rows()) throw DimensionError("char_windows: word outside embedding rows");
    const std::size_t padded = std::max(w.length, width);
    const std::size_t left = (padded - w.length) / 2;
    const std::size_t positions = padded - width + 1;
    for (std::size_t p = 0; p < positions; ++p) {
      for (std::size_t k = 0; k < width; ++k) {
        const std::size_t idx = p + k;  // index in padded sequence
        src.push_back(idx >= left && idx < left + w.length ? w.offset + idx - left : npos);
      }
    }
  }
  const std::size_t rows = src.size() / width;
  auto out = Tensor<T>::zeros(Shape{rows, width * d});
  for (std::size_t s = 0; s < src.size(); ++s) {
    if (src[s] != npos) std::copy_n(ev.data.begin() + src[s] * d, d, out.data.begin() + s * d);
  }
  const std::size_t ie = emb.id;
  return emb.graph->record("char_windows", std::move(out), {ie}, [ie, d, src = std::move(src)](Graph<T>& g, std::size_t, const std::vector<T>& dg) {
    auto& ge = g.grad_mut(ie);
    for (std::size_t s = 0; s < src.size(); ++s) {
      if (src[s] == npos) continue;
      for (std::size_t j = 0; j < d; ++j) ge[src[s] * d + j] += dg[s * d + j];
    }
  });
}

template <typename T>
Var<T> segment_max_rows(Var<T> a, const std::vector<std::size_t>& segment_rows) {
  const auto& av = a.value();
  const std::size_t c = av.cols();
  std::size_t total = 0;
  for (std::size_t s : segment_rows) {
    if (s == 0) throw DimensionError("segment_max_rows: empty segment");
    total += s;
  }
  if (total != av.rows()) throw DimensionError("segment_max_rows: segments cover " + std::to_string(total) + " of " + std::to_string(av.rows()) + " rows");
  auto out = Tensor<T>::zeros(Shape{segment_rows.size(), c});
  std::vector<std::size_t> arg(segment_rows.size() * c);
  std::size_t base = 0;
  for (std::size_t s = 0; s < segment_rows.size(); ++s) {
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = base;
      for (std::size_t i = base + 1; i < base + segment_rows[s]; ++i)
        if (av.data[i * c + j] > av.data[best * c + j]) best = i;
      arg[s * c + j] = best;
      out.data[s * c + j] = av.data[best * c + j];
    }
    base += segment_rows[s];
  }
  const std::size_t ia = a.id;
  return a.graph->record("segment_max_rows", std::move(out), {ia}, [ia, c, arg = std::move(arg)](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t k = 0; k < arg.size(); ++k) ga[arg[k] * c + k % c] += d[k];
  });
}

template <typename T>
Var<T> mask_rows(Var<T> a, const Mask& row_mask) {
  const auto& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  if (row_mask.size() != r) throw DimensionError("mask_rows: mask size differs from row count");
  Tensor<T> out(av.shape, av.data);
  for (std::size_t i = 0; i < r; ++i)
    if (!row_mask[i]) std::fill_n(out.data.begin() + i * c, c, T(0));
  const std::size_t ia = a.id;
  return a.graph->record("mask_rows", std::move(out), {ia}, [ia, r, c, row_mask](Graph<T>& g, std::size_t, const std::vector<T>& d) {
    auto& ga = g.grad_mut(ia);
    for (std::size_t i = 0; i < r; ++i)
      if (row_mask[i])
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += d[i * c + j];
  });
}

#define AMANDA_INSTANTIATE_OPS(T)                                                            \
  template Var<T> matmul(Var<T>, Var<T>);                                                   \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                                \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> mul(Var<T>, Var<T>);                                                      \
  template Var<T> mul_const(Var<T>, const Tensor<T>&);                                      \
  template Var<T> scale(Var<T>, T);                                                         \
  template Var<T> sigmoid(Var<T>);                                                          \
  template Var<T> tanh(Var<T>);                                                             \
  template Var<T> concat_last(Var<T>, Var<T>);                                              \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);                             \
  template Var<T> row(Var<T>, std::size_t);                                                 \
  template Var<T> stack_rows(const std::vector<Var<T>>&);                                   \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> max_over_last(Var<T>);                                                    \
  template Var<T> max_n(const std::vector<Var<T>>&);                                        \
  template Var<T> max_over_rows(Var<T>, const Mask&);                                       \
  template Var<T> sum_over_rows(Var<T>, const Mask&);                                       \
  template Var<T> mean_over_rows(Var<T>, const Mask&);                                      \
  template Var<T> masked_row_softmax(Var<T>, const Mask&);                                  \
  template Var<T> masked_cross_entropy(Var<T>, const Mask&, std::size_t);                   \
  template Var<T> sum_all(Var<T>);                                                          \
  template Var<T> gather_rows(Var<T>, const std::vector<std::size_t>&);                     \
  template Var<T> char_windows(Var<T>, const std::vector<WordSpan>&, std::size_t);          \
  template Var<T> segment_max_rows(Var<T>, const std::vector<std::size_t>&);                \
  template Var<T> mask_rows(Var<T>, const Mask&);

AMANDA_INSTANTIATE_OPS(float)
AMANDA_INSTANTIATE_OPS(double)

}  // namespace amanda
