#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "amanda/ops.hpp"

namespace amanda {

/// Frozen pretrained word vectors. Out-of-vocabulary words embed as zeros.
class WordTable {
 public:
  WordTable() = default;
  explicit WordTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ ? values_.size() / dim_ : 0; }

  /// Appends a row; returns false (and keeps the first) for duplicate tokens.
  bool insert(const std::string& token, const std::vector<float>& vec);

  /// Row index of a token: lowercased form first, then the raw form.
  std::optional<std::size_t> find(std::string_view token) const;
  const float* row(std::size_t i) const { return values_.data() + i * dim_; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> values_;
};

/// Reads `token v1 ... v_dim` lines. Throws ParseError naming the line.
WordTable load_word_vectors(const std::string& path, std::size_t dim);

template <typename T>
Tensor<T> embed_word(const WordTable& table, std::string_view token);

/// Character vocabulary: id 0 is reserved for padding, id 1 is the unknown row.
class CharVocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;

  CharVocab();
  /// Adds every character of `word` to the vocabulary.
  void add_word(std::string_view word);
  std::vector<std::size_t> ids(std::string_view word) const;
  std::size_t size() const { return chars_.size(); }
  const std::vector<std::string>& chars() const { return chars_; }
  static CharVocab from_chars(const std::vector<std::string>& chars);

 private:
  std::vector<std::string> chars_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Splits UTF-8 text into code points (invalid bytes pass through one at a time).
std::vector<std::string> utf8_chars(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Char-CNN parameters as bound graph leaves.
template <typename T>
struct CharCnnVars {
  Var<T> table;    // [|C| x d_c]
  Var<T> filters;  // [width x d_c x n_f]
  Var<T> bias;     // [n_f]
  std::size_t width;
};

/// Character-CNN embedding of several words at once: each word's character
/// vectors are convolved with the filters and max-pooled over positions,
/// giving one n_f-dimensional row per word.
template <typename T>
Var<T> char_cnn_embed(const CharCnnVars<T>& cnn, const std::vector<std::vector<std::size_t>>& words);

/// Rows of word vectors for the given table rows (-1 for OOV or padding).
template <typename T>
Tensor<T> word_rows(const WordTable& table, const std::vector<long>& ids);

/// Word vector || char-CNN vector per token. `cnn` may be null (char ablation).
template <typename T>
Var<T> embed_sequence(Graph<T>& g, const WordTable& table, const CharCnnVars<T>* cnn, const std::vector<long>& word_ids,
                      const std::vector<std::vector<std::size_t>>& char_ids);

}  // namespace amanda
