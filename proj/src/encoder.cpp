#include "amanda/encoder.hpp"

namespace amanda {
namespace {

// One direction; returns the hidden state per step (zeros at masked steps).
template <typename T>
std::vector<Var<T>> run_direction(const LstmCellVars<T>& cell, Var<T> projected, const Mask& mask, bool reverse) {
  Graph<T>& g = *projected.graph;
  const std::size_t steps = projected.rows();
  const std::size_t h = cell.wh.rows();
  const Var<T> zero = g.constant(Tensor<T>::zeros({1, h}));
  std::vector<Var<T>> out(steps, zero);
  Var<T> hs = zero, cs = zero;
  bool fresh = true;  // state is exactly zero; skip the recurrent product
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    if (!mask[t]) {
      hs = cs = zero;
      fresh = true;
      continue;
    }
    Var<T> z = row(projected, t);
    if (!fresh) z = add(z, matmul(hs, cell.wh));
    Var<T> i = sigmoid(slice_cols(z, 0, h));
    Var<T> f = sigmoid(slice_cols(z, h, h));
    Var<T> o = sigmoid(slice_cols(z, 2 * h, h));
    Var<T> c_hat = tanh(slice_cols(z, 3 * h, h));
    cs = fresh ? mul(i, c_hat) : add(mul(f, cs), mul(i, c_hat));
    hs = mul(o, tanh(cs));
    fresh = false;
    out[t] = hs;
  }
  return out;
}

}  // namespace

template <typename T>
Var<T> bilstm_encode(const BiLstmVars<T>& layer, Var<T> x, const Mask& mask) {
  const std::size_t steps = x.rows();
  if (mask.size() != steps) throw DimensionError("bilstm_encode: mask length differs from sequence length");
  if (x.cols() != layer.input_dim()) {
    throw DimensionError("bilstm_encode: input " + shape_str(x.shape()) + " does not match cell input " +
                         shape_str(layer.fwd.wx.shape()));
  }
  const std::size_t h = layer.hidden();
  if (layer.fwd.wx.cols() != 4 * h || layer.fwd.b.size() != 4 * h) {
    throw DimensionError("bilstm_encode: gate weights must have 4h columns");
  }
  // Input projections for all steps at once, bias folded in.
  Var<T> fwd_in = add(matmul(x, layer.fwd.wx), layer.fwd.b);
  Var<T> bwd_in = add(matmul(x, layer.bwd.wx), layer.bwd.b);
  auto fwd = run_direction(layer.fwd, fwd_in, mask, false);
  auto bwd = run_direction(layer.bwd, bwd_in, mask, true);
  return concat_last(stack_rows(fwd), stack_rows(bwd));
}

template <typename T>
QuestionDependent<T> question_dependent_encoding(Var<T> passage, Var<T> question, Var<T> attention,
                                                 const Mask& passage_mask, const Mask& question_mask,
                                                 const BiLstmVars<T>& layer) {
  if (attention.rows() != passage.rows() || attention.cols() != question.rows()) {
    throw DimensionError("question_dependent_encoding: attention " + shape_str(attention.shape()) +
                         " does not match passage " + shape_str(passage.shape()) + " and question " +
                         shape_str(question.shape()));
  }
  QuestionDependent<T> out;
  out.R = masked_row_softmax(attention, question_mask);
  out.G = matmul(out.R, question);
  out.S = concat_last(passage, out.G);
  out.V = bilstm_encode(layer, out.S, passage_mask);
  return out;
}

template Var<float> bilstm_encode(const BiLstmVars<float>&, Var<float>, const Mask&);
template Var<double> bilstm_encode(const BiLstmVars<double>&, Var<double>, const Mask&);
template QuestionDependent<float> question_dependent_encoding(Var<float>, Var<float>, Var<float>, const Mask&,
                                                              const Mask&, const BiLstmVars<float>&);
template QuestionDependent<double> question_dependent_encoding(Var<double>, Var<double>, Var<double>, const Mask&,
                                                               const Mask&, const BiLstmVars<double>&);

}  // namespace amanda
