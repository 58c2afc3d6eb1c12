#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <string>
#include <utility>
#include <vector>

#include "amanda/embed.hpp"

namespace amanda {

/// A token with code-point offsets [begin, end) into the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Whitespace split, then leading and trailing ASCII punctuation peeled off
/// as one-character tokens. A trailing period stays attached when the token
/// already contains a period ("U.S."). Internal punctuation is kept.
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);

/// Maps an answer onto a 1-based inclusive token span. With `char_start` the
/// span covers every token overlapping the answer's characters; otherwise
/// the first token-level occurrence (exact, then case-insensitive) is used.
std::pair<std::size_t, std::size_t> align_answer(const std::string& passage, const std::vector<Token>& tokens,
                                                 const std::string& answer,
                                                 std::optional<std::size_t> char_start = std::nullopt);

/// Source text of tokens [b, e] (1-based inclusive).
std::string span_text(const std::string& passage, const std::vector<Token>& tokens, std::size_t b, std::size_t e);

struct Sample {
  std::string id;
  std::string passage;
  std::string question;
  std::vector<Token> passage_tokens;
  std::vector<Token> question_tokens;
  std::size_t gold_b = 1;
  std::size_t gold_e = 1;
  std::string answer;                // the aligned answer used for training
  std::vector<std::string> answers;  // every reference answer, for metrics
};

/// Tokenizes and aligns one passage/question/answers triple. Throws
/// AlignmentError when no answer can be located.
struct AnswerRef {
  std::string text;
  std::optional<std::size_t> char_start;
};
Sample make_sample(std::string id, std::string passage, std::string question, const std::vector<AnswerRef>& answers);

struct Dataset {
  std::vector<Sample> samples;
  std::size_t skipped = 0;  // lines whose answers could not be aligned
};

/// JSON lines: {"id", "passage", "question", "answers": [{"text", "char_start"}]}.
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<Sample>& samples);

/// Word-table rows and character ids for model input.
struct Featurizer {
  std::shared_ptr<const WordTable> words;
  CharVocab chars;
};

inline constexpr long kOovWord = -1;
inline constexpr long kPadWord = -2;

/// One (possibly padded) passage/question pair as the model consumes it.
struct SampleInput {
  std::vector<long> passage_words;
  std::vector<std::vector<std::size_t>> passage_chars;
  Mask passage_mask;
  std::vector<long> question_words;
  std::vector<std::vector<std::size_t>> question_chars;
  Mask question_mask;
  std::pair<std::size_t, std::size_t> qtype_rows{0, 0};
  std::size_t gold_b = 0;  // 1-based; 0 when unknown
  std::size_t gold_e = 0;

  std::size_t passage_length() const;
};

SampleInput featurize(const Featurizer& f, const Sample& s, bool qtype_first_two = false);

/// Padded stack of samples. Row-major matrices; pads carry kPadWord and char id 0.
struct Batch {
  std::vector<std::size_t> indices;  // positions in the source sample list
  std::size_t passage_len = 0;
  std::size_t question_len = 0;
  std::size_t char_len = 0;
  std::vector<long> passage_words;          // size x passage_len
  std::vector<std::size_t> passage_chars;   // size x passage_len x char_len
  Mask passage_mask;
  std::vector<long> question_words;
  std::vector<std::size_t> question_chars;
  Mask question_mask;
  std::vector<std::size_t> gold_b;
  std::vector<std::size_t> gold_e;
  std::vector<std::pair<std::size_t, std::size_t>> qtype_rows;

  std::size_t size() const { return indices.size(); }
  /// Row `i` with padding (masked positions) intact.
  SampleInput row(std::size_t i) const;
};

/// Splits samples into batches of `batch_size`, shuffled deterministically
/// when a seed is given, padded to each batch's longest member.
std::vector<Batch> make_batches(const std::vector<Sample>& samples, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed, const Featurizer& f,
                                bool qtype_first_two = false);

/// Bounded single-producer/single-consumer hand-off. `pop` returns nullopt
/// once the producer closed the queue and it is drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
  }
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
};

/// Builds the batches of `make_batches` on a background thread, handing them
/// over through a queue of the given depth. Order matches `make_batches`.
class BatchPrefetcher {
 public:
  BatchPrefetcher(const std::vector<Sample>& samples, std::size_t batch_size, std::optional<std::uint64_t> seed,
                  const Featurizer& f, bool qtype_first_two, std::size_t depth);
  ~BatchPrefetcher();
  BatchPrefetcher(const BatchPrefetcher&) = delete;
  BatchPrefetcher& operator=(const BatchPrefetcher&) = delete;

  std::optional<Batch> next() { return queue_.pop(); }

 private:
  BoundedQueue<Batch> queue_;
  std::thread worker_;
};

enum class SyntheticTask { kMarkerSpan, kCorefTwoSentence };

struct SyntheticSpec {
  SyntheticTask task = SyntheticTask::kMarkerSpan;
  std::size_t vocab_size = 50;
  std::size_t passage_len = 20;
  std::size_t answer_min = 1;
  std::size_t answer_max = 3;
  std::uint64_t seed = 1;
};

SyntheticTask parse_synthetic_task(const std::string& s);

/// Deterministic synthetic QA data whose answers are recoverable from the passage.
///
/// marker-span: filler words w<i> with two marker tokens k<j>, each followed by
/// a filler span closed by ".". The question asks what follows one marker.
///
/// coref-two-sentence: sentence one introduces two entity spans with aliases
/// ("e3 e7 is the a1"), sentence two says what each alias did ("the a1 v4").
/// The question names an action ("who v4 ?"); the answer is the entity span
/// in sentence one whose alias performed it.
std::vector<Sample> gen_synthetic(const SyntheticSpec& spec, std::size_t n);

/// Every distinct token the synthetic generator can emit for `spec`.
std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec);

/// Random frozen vectors for the given tokens (a stand-in for pretrained vectors).
WordTable random_word_table(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed);
void save_word_vectors(const std::string& path, const WordTable& table, const std::vector<std::string>& tokens);

}  // namespace amanda
