#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace amanda {

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& s);
std::vector<std::string> normalized_tokens(const std::string& s);

/// 1 when the normalized prediction equals any normalized gold.
int exact_match(const std::string& prediction, const std::vector<std::string>& golds);

/// Max over golds of the token-multiset F1. Two empty token lists score 1.
double token_f1(const std::string& prediction, const std::vector<std::string>& golds);

struct Bucket {
  std::size_t count = 0;
  double em = 0.0;  // percentages
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t count = 0;
  double em = 0.0;
  double f1 = 0.0;
  std::size_t unigram_count = 0;
  std::optional<double> unigram_accuracy;  // EM over single-token golds
  std::size_t ngram_count = 0;
  std::optional<double> ngram_f1;          // F1 over multi-token golds
  std::map<std::string, Bucket> by_question_type;
  std::map<std::string, Bucket> by_answer_length;  // predicted length in tokens

  nlohmann::json to_json() const;
};

/// One scored item: prediction text and length, the references and the question's type word.
struct ScoredItem {
  std::string prediction;
  std::size_t predicted_length = 1;
  std::vector<std::string> golds;
  std::string question_type;
};

/// Builds the report; the unigram/n-gram split uses the first gold's normalized length.
EvalReport score(const std::vector<ScoredItem>& items);

std::string length_bucket(std::size_t tokens);

}  // namespace amanda
