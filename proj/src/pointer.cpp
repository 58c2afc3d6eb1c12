#include "amanda/pointer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "amanda/embed.hpp"

namespace amanda {

template <typename T>
Var<T> max_attentional_weights(Var<T> attention, const Mask& passage_mask, const Mask& question_mask) {
  return masked_row_softmax(max_over_rows(attention, passage_mask), question_mask);
}

template <typename T>
Var<T> question_weights(Aggregation kind, Var<T> attention, const Mask& passage_mask, const Mask& question_mask) {
  switch (kind) {
    case Aggregation::kMax: return max_attentional_weights(attention, passage_mask, question_mask);
    case Aggregation::kMean: return masked_row_softmax(mean_over_rows(attention, passage_mask), question_mask);
    case Aggregation::kSum: return masked_row_softmax(sum_over_rows(attention, passage_mask), question_mask);
  }
  throw ConfigError("unknown aggregation kind");
}

template <typename T>
Var<T> aggregate_question(Var<T> k, Var<T> question) {
  return matmul(k, question);
}

std::pair<std::size_t, std::size_t> question_type_rows(const std::vector<std::string>& tokens, bool first_two) {
  const std::size_t u = tokens.size();
  if (u == 0) throw DimensionError("question_type_rows: empty question");
  if (!first_two) {
    const auto& wh = wh_words();
    for (std::size_t i = 0; i < u; ++i) {
      if (std::find(wh.begin(), wh.end(), to_lower_ascii(tokens[i])) != wh.end()) {
        return {i, i + 1 < u ? i + 1 : i};
      }
    }
  }
  return {0, u > 1 ? 1 : 0};
}

std::string question_type(const std::vector<std::string>& tokens) {
  const auto& wh = wh_words();
  for (const auto& t : tokens) {
    const std::string low = to_lower_ascii(t);
    if (std::find(wh.begin(), wh.end(), low) != wh.end()) return low;
  }
  return "other";
}

template <typename T>
Var<T> question_type_repr(Var<T> question, std::pair<std::size_t, std::size_t> rows) {
  return concat_last(row(question, rows.first), row(question, rows.second));
}

template <typename T>
Var<T> final_question_vector(std::optional<Var<T>> q_ma, std::optional<Var<T>> q_f, Var<T> w_q, Var<T> b_q) {
  if (!q_ma && !q_f) throw ConfigError("final_question_vector: needs q_ma or q_f");
  Var<T> input = q_ma && q_f ? concat_last(*q_ma, *q_f) : (q_ma ? *q_ma : *q_f);
  return tanh(add(matmul(input, w_q), b_q));
}

SpanPrediction decode_span(const std::vector<double>& pr_b, const std::vector<double>& pr_e, std::size_t max_len) {
  const std::size_t n = pr_b.size();
  if (n == 0 || pr_e.size() != n) throw DimensionError("decode_span: distributions must be nonempty and equal length");
  SpanPrediction best{0, 0, -1.0};
  // Candidate begins for the current end, values non-increasing from the
  // front; equal values keep the earlier index in front.
  std::deque<std::size_t> window;
  for (std::size_t e = 0; e < n; ++e) {
    while (!window.empty() && pr_b[window.back()] < pr_b[e]) window.pop_back();
    window.push_back(e);
    if (max_len > 0) {
      while (window.front() + max_len <= e) window.pop_front();
    }
    const std::size_t b = window.front();
    const double joint = pr_b[b] * pr_e[e];
    if (joint > best.joint_prob || (joint == best.joint_prob && b + 1 < best.b)) {
      best = {b + 1, e + 1, joint};
    }
  }
  return best;
}

double span_loss(const std::vector<double>& pr_b, const std::vector<double>& pr_e, std::size_t gold_b,
                 std::size_t gold_e) {
  const std::size_t n = pr_b.size();
  if (pr_e.size() != n) throw DimensionError("span_loss: distributions differ in length");
  if (gold_b < 1 || gold_b > gold_e || gold_e > n) {
    throw DimensionError("span_loss: gold span (" + std::to_string(gold_b) + ", " + std::to_string(gold_e) +
                         ") outside 1 <= b <= e <= " + std::to_string(n));
  }
  return -std::log(pr_b[gold_b - 1]) - std::log(pr_e[gold_e - 1]);
}

#define AMANDA_INSTANTIATE_POINTER(T)                                                                   \
  template Var<T> max_attentional_weights(Var<T>, const Mask&, const Mask&);                            \
  template Var<T> question_weights(Aggregation, Var<T>, const Mask&, const Mask&);                      \
  template Var<T> aggregate_question(Var<T>, Var<T>);                                                   \
  template Var<T> question_type_repr(Var<T>, std::pair<std::size_t, std::size_t>);                      \
  template Var<T> final_question_vector(std::optional<Var<T>>, std::optional<Var<T>>, Var<T>, Var<T>);

AMANDA_INSTANTIATE_POINTER(float)
AMANDA_INSTANTIATE_POINTER(double)

}  // namespace amanda
