#include "amanda/multifactor.hpp"

namespace amanda {

template <typename T>
Var<T> multifactor_scores(Var<T> v, Var<T> factors) {
  const auto& fs = factors.shape();
  if (fs.size() != 3) throw DimensionError("multifactor_scores: factor tensor must be H x m x H, got " + shape_str(fs));
  const std::size_t h = fs[0], m = fs[1];
  if (m < 1) throw DimensionError("multifactor_scores: need at least one factor");
  if (fs[2] != h || v.cols() != h) {
    throw DimensionError("multifactor_scores: encoding " + shape_str(v.shape()) + " vs factors " + shape_str(fs));
  }
  // Row a of the [H x mH] view is W_f[a, :, :]; columns [kH, (k+1)H) hold slice k.
  Var<T> projected = matmul(v, reshape(factors, {h, m * h}));
  std::vector<Var<T>> per_factor;
  per_factor.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    Var<T> left = m == 1 ? projected : slice_cols(projected, k * h, h);
    per_factor.push_back(matmul_nt(left, v));
  }
  return m == 1 ? per_factor.front() : max_n(per_factor);
}

template <typename T>
AttentiveAggregate<T> attentive_aggregate(Var<T> scores, Var<T> v, const Mask& passage_mask) {
  if (scores.rows() != v.rows() || scores.cols() != v.rows()) {
    throw DimensionError("attentive_aggregate: scores " + shape_str(scores.shape()) + " vs encoding " +
                         shape_str(v.shape()));
  }
  AttentiveAggregate<T> out;
  out.F_tilde = masked_row_softmax(scores, passage_mask);
  out.M = matmul(out.F_tilde, v);
  out.M_tilde = concat_last(v, out.M);
  return out;
}

template <typename T>
Var<T> gated_fusion(Var<T> m_tilde, Var<T> w_g, Var<T> b_g) {
  return mul(m_tilde, sigmoid(add(matmul(m_tilde, w_g), b_g)));
}

template <typename T>
PointerEncodings<T> pointer_encodings(Var<T> y, const BiLstmVars<T>& begin_layer, const BiLstmVars<T>& end_layer,
                                      const Mask& passage_mask) {
  PointerEncodings<T> out;
  out.B = bilstm_encode(begin_layer, y, passage_mask);
  out.E = bilstm_encode(end_layer, out.B, passage_mask);
  return out;
}

template <typename T>
PointerEncodings<T> pointer_encodings_feedforward(Var<T> y, const BiLstmVars<T>& begin_layer, Var<T> w, Var<T> b,
                                                  const Mask& passage_mask) {
  PointerEncodings<T> out;
  out.B = bilstm_encode(begin_layer, y, passage_mask);
  out.E = mask_rows(tanh(add(matmul(out.B, w), b)), passage_mask);
  return out;
}

#define AMANDA_INSTANTIATE_MF(T)                                                                                 \
  template Var<T> multifactor_scores(Var<T>, Var<T>);                                                            \
  template AttentiveAggregate<T> attentive_aggregate(Var<T>, Var<T>, const Mask&);                               \
  template Var<T> gated_fusion(Var<T>, Var<T>, Var<T>);                                                          \
  template PointerEncodings<T> pointer_encodings(Var<T>, const BiLstmVars<T>&, const BiLstmVars<T>&, const Mask&); \
  template PointerEncodings<T> pointer_encodings_feedforward(Var<T>, const BiLstmVars<T>&, Var<T>, Var<T>, const Mask&);

AMANDA_INSTANTIATE_MF(float)
AMANDA_INSTANTIATE_MF(double)

}  // namespace amanda
