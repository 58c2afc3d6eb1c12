#pragma once

#include "amanda/encoder.hpp"

namespace amanda {

/// F[i,j] = max_k v_i W_f[:,k,:] v_j^T for the 3-way tensor `factors` [H x m x H].
/// One T x T score block is formed per factor.
template <typename T>
Var<T> multifactor_scores(Var<T> v, Var<T> factors);

template <typename T>
struct AttentiveAggregate {
  Var<T> F_tilde;  // [T x T]
  Var<T> M;        // [T x H]
  Var<T> M_tilde;  // [T x 2H] = V || M
};

/// Row-softmax of F over unmasked passage positions, then M = F~ V.
template <typename T>
AttentiveAggregate<T> attentive_aggregate(Var<T> scores, Var<T> v, const Mask& passage_mask);

/// y_t = m~_t * sigmoid(m~_t W_g + b_g)
template <typename T>
Var<T> gated_fusion(Var<T> m_tilde, Var<T> w_g, Var<T> b_g);

template <typename T>
struct PointerEncodings {
  Var<T> B;
  Var<T> E;
};

/// B = BiLSTM(Y); E = BiLSTM(B).
template <typename T>
PointerEncodings<T> pointer_encodings(Var<T> y, const BiLstmVars<T>& begin_layer, const BiLstmVars<T>& end_layer,
                                      const Mask& passage_mask);

/// Variant with the second recurrent layer replaced by E = tanh(B W + b).
template <typename T>
PointerEncodings<T> pointer_encodings_feedforward(Var<T> y, const BiLstmVars<T>& begin_layer, Var<T> w, Var<T> b,
                                                  const Mask& passage_mask);

}  // namespace amanda
