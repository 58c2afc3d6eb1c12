#pragma once

#include "amanda/ops.hpp"
#include "amanda/params.hpp"

namespace amanda {

/// One LSTM direction. Gates are packed along columns as [input, forget, output, candidate].
template <typename T>
struct LstmCellVars {
  Var<T> wx;  // [d x 4h]
  Var<T> wh;  // [h x 4h]
  Var<T> b;   // [4h]
};

template <typename T>
struct BiLstmVars {
  LstmCellVars<T> fwd;
  LstmCellVars<T> bwd;
  std::size_t hidden() const { return fwd.wh.rows(); }
  std::size_t input_dim() const { return fwd.wx.rows(); }
};

/// Looks up `<prefix>.fwd.{wx,wh,b}` and `<prefix>.bwd.{wx,wh,b}`.
template <typename T>
BiLstmVars<T> bilstm_vars(const BoundParams<T>& p, const std::string& prefix) {
  auto cell = [&](const std::string& dir) {
    return LstmCellVars<T>{p[prefix + "." + dir + ".wx"], p[prefix + "." + dir + ".wh"], p[prefix + "." + dir + ".b"]};
  };
  return {cell("fwd"), cell("bwd")};
}

/// Runs both directions over `x` [T x d] from zero states and concatenates the
/// per-step hidden states into [T x 2h]. Masked steps output zeros and reset
/// the carried state to zero.
template <typename T>
Var<T> bilstm_encode(const BiLstmVars<T>& layer, Var<T> x, const Mask& mask);

/// A = P Q^T.
template <typename T>
Var<T> attention_matrix(Var<T> passage, Var<T> question) {
  return matmul_nt(passage, question);
}

template <typename T>
struct QuestionDependent {
  Var<T> R;  // [T x U] row-softmax of A over question positions
  Var<T> G;  // [T x H] = R Q
  Var<T> S;  // [T x 2H] = P || G
  Var<T> V;  // [T x H] = BiLSTM(S)
};

template <typename T>
QuestionDependent<T> question_dependent_encoding(Var<T> passage, Var<T> question, Var<T> attention,
                                                 const Mask& passage_mask, const Mask& question_mask,
                                                 const BiLstmVars<T>& layer);

}  // namespace amanda
