#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace amanda {

enum class Aggregation { kMax, kMean, kSum };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

/// Hyperparameters and ablation switches. Defaults are the standard
/// experimental settings; everything is overridable from a flat JSON object.
struct Config {
  std::size_t word_dim = 300;
  std::size_t char_dim = 50;       // per-character lookup width
  std::size_t char_filters = 50;   // char-CNN output width
  std::size_t char_width = 5;
  std::size_t hidden = 150;        // per LSTM direction; H = 2 * hidden
  double dropout = 0.3;
  std::size_t factors = 4;
  std::size_t batch_size = 60;
  double learning_rate = 0.001;
  double clip_norm = 5.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;

  // Components; `false` ablates the component.
  bool multifactor = true;
  bool q_ma = true;
  bool q_f = true;
  bool char_emb = true;
  bool qdep_encoding = true;
  bool second_pointer_lstm = true;
  Aggregation aggregation = Aggregation::kMax;

  /// Represent question type by the first two question tokens regardless of wh-words.
  bool qtype_first_two = false;
  /// Decode cap on answer length in tokens; 0 disables it.
  std::size_t max_answer_len = 0;
  /// Pretrained word-vector file; empty means every word is out of vocabulary.
  std::string word_vectors;

  std::size_t encoding_dim() const { return 2 * hidden; }
  std::size_t embedding_dim() const { return word_dim + (char_emb ? char_filters : 0); }

  void validate() const;
  nlohmann::json to_json() const;
  /// Applies the keys of `j` on top of `base`; unknown keys are errors.
  static Config from_json(const nlohmann::json& j, Config base);
  static Config from_json(const nlohmann::json& j);
  static Config load(const std::string& path);
};

}  // namespace amanda
