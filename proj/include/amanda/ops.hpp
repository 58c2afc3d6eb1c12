#pragma once

// Differentiable operations over Graph nodes. Matrices are row-major; a rank-1
// tensor of length n is treated as a 1 x n row wherever a matrix is expected.

#include <cstddef>
#include <utility>
#include <vector>

#include "amanda/graph.hpp"

namespace amanda {

/// Additive surrogate for -infinity used by masked softmax.
inline constexpr double kMaskedLogit = -1e30;

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a * b^T without materializing the transpose.
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);

/// Same-shape sum, or `b` broadcast as a row over every row of `a`.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
/// Multiplies by a fixed tensor (dropout masks, constant factors).
template <typename T> Var<T> mul_const(Var<T> a, const Tensor<T>& c);
template <typename T> Var<T> scale(Var<T> a, T s);
template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);

/// Concatenation along the last axis; rows must agree.
template <typename T> Var<T> concat_last(Var<T> a, Var<T> b);
template <typename T> Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t len);
template <typename T> Var<T> row(Var<T> a, std::size_t r);
template <typename T> Var<T> stack_rows(const std::vector<Var<T>>& rows);
template <typename T> Var<T> reshape(Var<T> a, Shape shape);

/// Max over the last axis, producing one value per row. Ties route gradient
/// to the lowest index.
template <typename T> Var<T> max_over_last(Var<T> a);
/// Elementwise max across same-shape inputs; ties go to the earliest input.
template <typename T> Var<T> max_n(const std::vector<Var<T>>& xs);

/// Column-wise reductions over the rows whose `row_mask` entry is set; 1 x c result.
template <typename T> Var<T> max_over_rows(Var<T> a, const Mask& row_mask);
template <typename T> Var<T> sum_over_rows(Var<T> a, const Mask& row_mask);
template <typename T> Var<T> mean_over_rows(Var<T> a, const Mask& row_mask);

/// Row-wise softmax restricted to unmasked entries; masked entries are exactly
/// zero. `mask` has one entry per element, or one per column (shared by rows).
template <typename T> Var<T> masked_row_softmax(Var<T> m, const Mask& mask);

/// -log softmax(logits)[target] restricted to unmasked entries, computed stably.
template <typename T> Var<T> masked_cross_entropy(Var<T> logits, const Mask& mask, std::size_t target);

template <typename T> Var<T> sum_all(Var<T> a);

/// Rows of `table` selected by `ids`; gradient scatters back into the table.
template <typename T> Var<T> gather_rows(Var<T> table, const std::vector<std::size_t>& ids);

/// Sliding windows for a 1-D convolution over several words at once.
/// `emb` stacks the character embeddings of all words; word i occupies rows
/// [offset_i, offset_i + length_i). Words shorter than `width` are zero-padded
/// symmetrically (extra pad on the right). Each output row is one window
/// flattened as (position-in-window, channel).
struct WordSpan {
  std::size_t offset;
  std::size_t length;
};
std::size_t window_count(std::size_t length, std::size_t width);
template <typename T>
Var<T> char_windows(Var<T> emb, const std::vector<WordSpan>& words, std::size_t width);

/// Column-wise max over consecutive row segments of the given sizes.
template <typename T>
Var<T> segment_max_rows(Var<T> a, const std::vector<std::size_t>& segment_rows);

/// Zeroes the rows whose mask entry is unset.
template <typename T> Var<T> mask_rows(Var<T> a, const Mask& row_mask);

}  // namespace amanda
