#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amanda/config.hpp"
#include "amanda/ops.hpp"

namespace amanda {

/// k = softmax(maxcol(A)): per-question-position max over unmasked passage
/// rows, normalized over unmasked question positions. Returns [1 x U].
template <typename T>
Var<T> max_attentional_weights(Var<T> attention, const Mask& passage_mask, const Mask& question_mask);

/// Aggregation variants: column max (default), column mean, or column sum of A.
template <typename T>
Var<T> question_weights(Aggregation kind, Var<T> attention, const Mask& passage_mask, const Mask& question_mask);

/// q_ma = k Q.
template <typename T>
Var<T> aggregate_question(Var<T> k, Var<T> question);

inline const std::vector<std::string>& wh_words() {
  static const std::vector<std::string> words{"what", "who", "how", "when", "which", "where", "why"};
  return words;
}

/// 0-based rows of Q forming q_f: the first wh-word (case-insensitive) and the
/// token after it. A wh-word in final position pairs with itself. Without a
/// wh-word (or with `first_two`) the first two rows are used; a one-token
/// question pairs row 0 with itself.
std::pair<std::size_t, std::size_t> question_type_rows(const std::vector<std::string>& tokens, bool first_two = false);

/// First wh-word of a question (lowercased), or "other".
std::string question_type(const std::vector<std::string>& tokens);

/// q_f = q_i || q_j.
template <typename T>
Var<T> question_type_repr(Var<T> question, std::pair<std::size_t, std::size_t> rows);

/// q~ = tanh(input W_q + b_q) where input is whichever of q_ma, q_f are enabled.
template <typename T>
Var<T> final_question_vector(std::optional<Var<T>> q_ma, std::optional<Var<T>> q_f, Var<T> w_q, Var<T> b_q);

/// s = q~ X^T as [1 x T].
template <typename T>
Var<T> span_scores(Var<T> q_tilde, Var<T> encodings) {
  return matmul_nt(q_tilde, encodings);
}

template <typename T>
Var<T> span_distribution(Var<T> scores, const Mask& passage_mask) {
  return masked_row_softmax(scores, passage_mask);
}

struct SpanPrediction {
  std::size_t b = 1;  // 1-based
  std::size_t e = 1;  // 1-based, b <= e
  double joint_prob = 0.0;
};

/// argmax over b <= e (and e - b + 1 <= max_len when max_len > 0) of
/// pr_b[b] * pr_e[e], ties to the lexicographically smallest (b, e). Linear time.
SpanPrediction decode_span(const std::vector<double>& pr_b, const std::vector<double>& pr_e, std::size_t max_len = 0);

/// -log pr_b[gold_b] - log pr_e[gold_e], 1-based gold indices.
double span_loss(const std::vector<double>& pr_b, const std::vector<double>& pr_e, std::size_t gold_b,
                 std::size_t gold_e);

}  // namespace amanda
