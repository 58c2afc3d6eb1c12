#include "amanda/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "amanda/errors.hpp"

namespace amanda {

std::vector<std::string> normalized_tokens(const std::string& s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (unsigned char c : s) {
    if (std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    if (w == "a" || w == "an" || w == "the") continue;
    out.push_back(w);
  }
  return out;
}

std::string normalize_answer(const std::string& s) {
  std::string out;
  for (const auto& w : normalized_tokens(s)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(prediction);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

namespace {

double f1_one(std::vector<std::string> pred, std::vector<std::string> gold) {
  if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
  std::sort(pred.begin(), pred.end());
  std::sort(gold.begin(), gold.end());
  std::vector<std::string> common;
  std::set_intersection(pred.begin(), pred.end(), gold.begin(), gold.end(), std::back_inserter(common));
  if (common.empty()) return 0.0;
  const double precision = static_cast<double>(common.size()) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common.size()) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

void add_to(Bucket& b, int em, double f1) {
  ++b.count;
  b.em += em;
  b.f1 += f1;
}

void finish(Bucket& b) {
  if (!b.count) return;
  b.em = 100.0 * b.em / static_cast<double>(b.count);
  b.f1 = 100.0 * b.f1 / static_cast<double>(b.count);
}

nlohmann::json bucket_json(const std::map<std::string, Bucket>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, b] : m) j[k] = {{"count", b.count}, {"em", b.em}, {"f1", b.f1}};
  return j;
}

}  // namespace

double token_f1(const std::string& prediction, const std::vector<std::string>& golds) {
  const auto p = normalized_tokens(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_one(p, normalized_tokens(g)));
  return best;
}

std::string length_bucket(std::size_t tokens) { return tokens >= 5 ? "5+" : std::to_string(tokens); }

EvalReport score(const std::vector<ScoredItem>& items) {
  if (items.empty()) throw Error("cannot evaluate an empty dataset");
  EvalReport r;
  Bucket total, unigram, ngram;
  for (const auto& it : items) {
    const int em = exact_match(it.prediction, it.golds);
    const double f1 = token_f1(it.prediction, it.golds);
    add_to(total, em, f1);
    const std::size_t gold_len = it.golds.empty() ? 0 : normalized_tokens(it.golds.front()).size();
    add_to(gold_len <= 1 ? unigram : ngram, em, f1);
    add_to(r.by_question_type[it.question_type], em, f1);
    add_to(r.by_answer_length[length_bucket(it.predicted_length)], em, f1);
  }
  finish(total);
  finish(unigram);
  finish(ngram);
  for (auto& [_, b] : r.by_question_type) finish(b);
  for (auto& [_, b] : r.by_answer_length) finish(b);
  r.count = total.count;
  r.em = total.em;
  r.f1 = total.f1;
  r.unigram_count = unigram.count;
  if (unigram.count) r.unigram_accuracy = unigram.em;
  r.ngram_count = ngram.count;
  if (ngram.count) r.ngram_f1 = ngram.f1;
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j{{"count", count},
                   {"em", em},
                   {"f1", f1},
                   {"unigram_count", unigram_count},
                   {"unigram_accuracy", nullptr},
                   {"ngram_count", ngram_count},
                   {"ngram_f1", nullptr},
                   {"by_question_type", bucket_json(by_question_type)},
                   {"by_answer_length", bucket_json(by_answer_length)}};
  if (unigram_accuracy) j["unigram_accuracy"] = *unigram_accuracy;
  if (ngram_f1) j["ngram_f1"] = *ngram_f1;
  return j;
}

}  // namespace amanda
