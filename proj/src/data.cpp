#include "amanda/data.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "amanda/pointer.hpp"
#include "json.hpp"

namespace amanda {
namespace {

bool is_space(const std::string& ch) {
  return ch == " " || ch == "\t" || ch == "\n" || ch == "\r" || ch == "\v" || ch == "\f" || ch == "\xC2\xA0";
}

bool is_punct(const std::string& ch) {
  return ch.size() == 1 && std::ispunct(static_cast<unsigned char>(ch[0]));
}

std::string join(const std::vector<std::string>& chars, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) out += chars[i];
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const auto chars = utf8_chars(text);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < chars.size()) {
    if (is_space(chars[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    std::size_t end = i;
    while (end < chars.size() && !is_space(chars[end])) ++end;
    const std::size_t chunk_end = end;

    while (begin < end && is_punct(chars[begin])) {
      out.push_back({chars[begin], begin, begin + 1});
      ++begin;
    }
    std::vector<Token> trailing;
    while (end > begin && is_punct(chars[end - 1])) {
      if (chars[end - 1] == ".") {
        bool inner_period = false;
        for (std::size_t k = begin; k + 1 < end; ++k) inner_period = inner_period || chars[k] == ".";
        if (inner_period) break;
      }
      trailing.push_back({chars[end - 1], end - 1, end});
      --end;
    }
    if (begin < end) out.push_back({join(chars, begin, end), begin, end});
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    i = chunk_end;
  }
  return out;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::pair<std::size_t, std::size_t> align_answer(const std::string& passage, const std::vector<Token>& tokens,
                                                 const std::string& answer, std::optional<std::size_t> char_start) {
  if (answer.empty()) throw AlignmentError("empty answer text");
  if (char_start) {
    const std::size_t s = *char_start;
    const std::size_t len = utf8_chars(answer).size();
    const std::size_t e = s + len;
    const auto passage_chars = utf8_chars(passage);
    if (e > passage_chars.size()) throw AlignmentError("answer offset beyond passage end");
    std::size_t b_tok = 0, e_tok = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].end > s && tokens[t].begin < e) {
        if (!b_tok) b_tok = t + 1;
        e_tok = t + 1;
      }
    }
    if (!b_tok) throw AlignmentError("answer offset covers no token");
    return {b_tok, e_tok};
  }
  const auto target = tokenize(answer);
  if (target.empty()) throw AlignmentError("answer has no tokens");
  for (bool fold : {false, true}) {
    for (std::size_t t = 0; t + target.size() <= tokens.size(); ++t) {
      bool match = true;
      for (std::size_t k = 0; k < target.size() && match; ++k) {
        match = fold ? to_lower_ascii(tokens[t + k].text) == to_lower_ascii(target[k].text)
                     : tokens[t + k].text == target[k].text;
      }
      if (match) return {t + 1, t + target.size()};
    }
  }
  throw AlignmentError("answer '" + answer + "' not found in passage");
}

std::string span_text(const std::string& passage, const std::vector<Token>& tokens, std::size_t b, std::size_t e) {
  if (b < 1 || b > e || e > tokens.size()) throw DimensionError("span_text: span outside passage");
  const auto chars = utf8_chars(passage);
  return join(chars, tokens[b - 1].begin, tokens[e - 1].end);
}

Sample make_sample(std::string id, std::string passage, std::string question, const std::vector<AnswerRef>& answers) {
  Sample s;
  s.id = std::move(id);
  s.passage = std::move(passage);
  s.question = std::move(question);
  s.passage_tokens = tokenize(s.passage);
  s.question_tokens = tokenize(s.question);
  if (s.passage_tokens.empty()) throw AlignmentError("empty passage");
  if (s.question_tokens.empty()) throw AlignmentError("empty question");
  bool aligned = false;
  for (const auto& a : answers) {
    s.answers.push_back(a.text);
    if (aligned) continue;
    try {
      auto [b, e] = align_answer(s.passage, s.passage_tokens, a.text, a.char_start);
      s.gold_b = b;
      s.gold_e = e;
      s.answer = a.text;
      aligned = true;
    } catch (const AlignmentError&) {
    }
  }
  if (!aligned) throw AlignmentError("no alignable answer for sample " + s.id);
  return s;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    auto field = [&](const char* key) -> const nlohmann::json& {
      if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"", lineno);
      return j.at(key);
    };
    std::vector<AnswerRef> answers;
    std::string id, passage, question;
    try {
      id = field("id").get<std::string>();
      passage = field("passage").get<std::string>();
      question = field("question").get<std::string>();
      const auto& arr = field("answers");
      if (!arr.is_array()) throw ParseError("\"answers\" must be an array", lineno);
      for (const auto& a : arr) {
        AnswerRef ref;
        ref.text = a.at("text").get<std::string>();
        if (a.contains("char_start") && !a.at("char_start").is_null()) {
          ref.char_start = a.at("char_start").get<std::size_t>();
        }
        answers.push_back(std::move(ref));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad field: ") + e.what(), lineno);
    }
    try {
      ds.samples.push_back(make_sample(std::move(id), std::move(passage), std::move(question), answers));
    } catch (const AlignmentError&) {
      ++ds.skipped;
    }
  }
  return ds;
}

void save_dataset(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path);
  for (const auto& s : samples) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& a : s.answers) {
      nlohmann::json entry{{"text", a}, {"char_start", nullptr}};
      if (a == s.answer) entry["char_start"] = s.passage_tokens[s.gold_b - 1].begin;
      answers.push_back(std::move(entry));
    }
    nlohmann::json j{{"id", s.id}, {"passage", s.passage}, {"question", s.question}, {"answers", answers}};
    out << j.dump() << '\n';
  }
}

std::size_t SampleInput::passage_length() const {
  return static_cast<std::size_t>(std::count_if(passage_mask.begin(), passage_mask.end(), [](auto m) { return m != 0; }));
}

namespace {

void encode_tokens(const Featurizer& f, const std::vector<Token>& tokens, std::vector<long>& words,
                   std::vector<std::vector<std::size_t>>& chars) {
  for (const auto& t : tokens) {
    auto row = f.words ? f.words->find(t.text) : std::nullopt;
    words.push_back(row ? static_cast<long>(*row) : kOovWord);
    chars.push_back(f.chars.ids(t.text));
  }
}

}  // namespace

SampleInput featurize(const Featurizer& f, const Sample& s, bool qtype_first_two) {
  SampleInput in;
  encode_tokens(f, s.passage_tokens, in.passage_words, in.passage_chars);
  encode_tokens(f, s.question_tokens, in.question_words, in.question_chars);
  in.passage_mask.assign(s.passage_tokens.size(), 1);
  in.question_mask.assign(s.question_tokens.size(), 1);
  in.qtype_rows = question_type_rows(token_texts(s.question_tokens), qtype_first_two);
  in.gold_b = s.gold_b;
  in.gold_e = s.gold_e;
  return in;
}

SampleInput Batch::row(std::size_t i) const {
  SampleInput in;
  auto unpack = [&](std::size_t len, const std::vector<long>& words, const std::vector<std::size_t>& chars,
                    const Mask& mask, std::vector<long>& w_out, std::vector<std::vector<std::size_t>>& c_out,
                    Mask& m_out) {
    for (std::size_t t = 0; t < len; ++t) {
      w_out.push_back(words[i * len + t]);
      m_out.push_back(mask[i * len + t]);
      std::vector<std::size_t> ids;
      for (std::size_t k = 0; k < char_len; ++k) {
        const std::size_t c = chars[(i * len + t) * char_len + k];
        if (c == CharVocab::kPad) break;
        ids.push_back(c);
      }
      if (ids.empty()) ids.push_back(CharVocab::kPad);
      c_out.push_back(std::move(ids));
    }
  };
  unpack(passage_len, passage_words, passage_chars, passage_mask, in.passage_words, in.passage_chars, in.passage_mask);
  unpack(question_len, question_words, question_chars, question_mask, in.question_words, in.question_chars,
         in.question_mask);
  in.qtype_rows = qtype_rows[i];
  in.gold_b = gold_b[i];
  in.gold_e = gold_e[i];
  return in;
}

namespace {

Batch build_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& order, std::size_t from,
                  std::size_t to, const Featurizer& f, bool qtype_first_two) {
  Batch b;
  std::vector<SampleInput> inputs;
  for (std::size_t k = from; k < to; ++k) {
    b.indices.push_back(order[k]);
    inputs.push_back(featurize(f, samples[order[k]], qtype_first_two));
  }
  for (const auto& in : inputs) {
    b.passage_len = std::max(b.passage_len, in.passage_words.size());
    b.question_len = std::max(b.question_len, in.question_words.size());
    for (const auto& c : in.passage_chars) b.char_len = std::max(b.char_len, c.size());
    for (const auto& c : in.question_chars) b.char_len = std::max(b.char_len, c.size());
  }
  const std::size_t n = inputs.size();
  b.passage_words.assign(n * b.passage_len, kPadWord);
  b.passage_chars.assign(n * b.passage_len * b.char_len, CharVocab::kPad);
  b.passage_mask.assign(n * b.passage_len, 0);
  b.question_words.assign(n * b.question_len, kPadWord);
  b.question_chars.assign(n * b.question_len * b.char_len, CharVocab::kPad);
  b.question_mask.assign(n * b.question_len, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = inputs[i];
    for (std::size_t t = 0; t < in.passage_words.size(); ++t) {
      b.passage_words[i * b.passage_len + t] = in.passage_words[t];
      b.passage_mask[i * b.passage_len + t] = 1;
      std::copy(in.passage_chars[t].begin(), in.passage_chars[t].end(),
                b.passage_chars.begin() + (i * b.passage_len + t) * b.char_len);
    }
    for (std::size_t t = 0; t < in.question_words.size(); ++t) {
      b.question_words[i * b.question_len + t] = in.question_words[t];
      b.question_mask[i * b.question_len + t] = 1;
      std::copy(in.question_chars[t].begin(), in.question_chars[t].end(),
                b.question_chars.begin() + (i * b.question_len + t) * b.char_len);
    }
    b.gold_b.push_back(in.gold_b);
    b.gold_e.push_back(in.gold_e);
    b.qtype_rows.push_back(in.qtype_rows);
  }
  return b;
}

std::vector<std::size_t> batch_order(std::size_t n, std::optional<std::uint64_t> seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (seed) {
    std::mt19937_64 rng(*seed);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  return order;
}

}  // namespace

std::vector<Batch> make_batches(const std::vector<Sample>& samples, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed, const Featurizer& f, bool qtype_first_two) {
  if (samples.empty()) throw Error("make_batches: no samples");
  if (batch_size == 0) throw Error("make_batches: batch size must be positive");
  const auto order = batch_order(samples.size(), shuffle_seed);
  std::vector<Batch> out;
  for (std::size_t from = 0; from < order.size(); from += batch_size) {
    out.push_back(build_batch(samples, order, from, std::min(order.size(), from + batch_size), f, qtype_first_two));
  }
  return out;
}

BatchPrefetcher::BatchPrefetcher(const std::vector<Sample>& samples, std::size_t batch_size,
                                 std::optional<std::uint64_t> seed, const Featurizer& f, bool qtype_first_two,
                                 std::size_t depth)
    : queue_(depth) {
  if (samples.empty()) throw Error("BatchPrefetcher: no samples");
  if (batch_size == 0) throw Error("BatchPrefetcher: batch size must be positive");
  worker_ = std::thread([this, &samples, batch_size, seed, &f, qtype_first_two] {
    const auto order = batch_order(samples.size(), seed);
    for (std::size_t from = 0; from < order.size(); from += batch_size) {
      queue_.push(build_batch(samples, order, from, std::min(order.size(), from + batch_size), f, qtype_first_two));
    }
    queue_.close();
  });
}

BatchPrefetcher::~BatchPrefetcher() {
  // Drain so a blocked producer can finish.
  while (queue_.pop()) {
  }
  worker_.join();
}

SyntheticTask parse_synthetic_task(const std::string& s) {
  if (s == "marker-span") return SyntheticTask::kMarkerSpan;
  if (s == "coref-two-sentence") return SyntheticTask::kCorefTwoSentence;
  throw ConfigError("unknown synthetic task '" + s + "' (expected marker-span or coref-two-sentence)");
}

namespace {

constexpr std::size_t kMarkers = 4;
constexpr std::size_t kAliases = 6;
constexpr std::size_t kActions = 6;

std::string word(char prefix, std::size_t i) { return std::string(1, prefix) + std::to_string(i); }

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Splits `total` filler slots into `parts` random nonnegative gaps.
std::vector<std::size_t> random_gaps(std::size_t total, std::size_t parts, std::mt19937_64& rng) {
  std::vector<std::size_t> gaps(parts, 0);
  for (std::size_t i = 0; i < total; ++i) ++gaps[rng() % parts];
  return gaps;
}

Sample marker_span(const SyntheticSpec& spec, std::size_t index, std::mt19937_64& rng) {
  auto filler = [&] { return word('w', rng() % spec.vocab_size); };
  const std::size_t m1 = rng() % kMarkers;
  std::size_t m2 = rng() % (kMarkers - 1);
  if (m2 >= m1) ++m2;
  const std::size_t markers[2] = {m1, m2};
  std::vector<std::string> segments[2];
  std::size_t used = 0;
  for (int s = 0; s < 2; ++s) {
    segments[s].push_back(word('k', markers[s]));
    const std::size_t len = spec.answer_min + rng() % (spec.answer_max - spec.answer_min + 1);
    for (std::size_t k = 0; k < len; ++k) segments[s].push_back(filler());
    segments[s].push_back(".");
    used += segments[s].size();
  }
  const auto gaps = random_gaps(spec.passage_len - used, 3, rng);
  const std::size_t asked = rng() % 2;
  std::vector<std::string> tokens;
  std::size_t answer_at = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < gaps[s]; ++k) tokens.push_back(filler());
    if (s < 2) {
      if (s == asked) answer_at = tokens.size() + 1;
      tokens.insert(tokens.end(), segments[s].begin(), segments[s].end());
    }
  }
  const std::vector<std::string> answer(segments[asked].begin() + 1, segments[asked].end() - 1);
  const std::string passage = join_tokens(tokens);
  const auto toks = tokenize(passage);
  return make_sample("marker-" + std::to_string(spec.seed) + "-" + std::to_string(index), passage,
                     "what follows " + word('k', markers[asked]) + " ?",
                     {{join_tokens(answer), toks[answer_at].begin}});
}

Sample coref_two_sentence(const SyntheticSpec& spec, std::size_t index, std::mt19937_64& rng) {
  auto filler = [&] { return word('w', rng() % spec.vocab_size); };
  std::vector<std::string> entity[2];
  for (auto& e : entity) {
    const std::size_t len = spec.answer_min + rng() % (spec.answer_max - spec.answer_min + 1);
    for (std::size_t k = 0; k < len; ++k) e.push_back(word('e', rng() % spec.vocab_size));
  }
  const std::size_t alias0 = rng() % kAliases;
  std::size_t alias1 = rng() % (kAliases - 1);
  if (alias1 >= alias0) ++alias1;
  const std::size_t act0 = rng() % kActions;
  std::size_t act1 = rng() % (kActions - 1);
  if (act1 >= act0) ++act1;
  const std::size_t alias[2] = {alias0, alias1};
  const std::size_t action[2] = {act0, act1};

  std::vector<std::string> first = entity[0];
  std::size_t entity_at[2] = {0, 0};
  for (const char* t : {"is", "the"}) first.push_back(t);
  first.push_back(word('a', alias[0]));
  first.push_back("and");
  entity_at[1] = first.size();
  first.insert(first.end(), entity[1].begin(), entity[1].end());
  for (const char* t : {"is", "the"}) first.push_back(t);
  first.push_back(word('a', alias[1]));
  first.push_back(".");

  // Sentence two mentions the aliases in random order.
  const std::size_t lead = rng() % 2;
  std::vector<std::string> second;
  for (std::size_t k : {lead, 1 - lead}) {
    if (!second.empty()) second.push_back("and");
    second.push_back("the");
    second.push_back(word('a', alias[k]));
    second.push_back(word('v', action[k]));
  }
  second.push_back(".");

  const std::size_t used = first.size() + second.size();
  const auto gaps = random_gaps(spec.passage_len - used, 3, rng);
  std::vector<std::string> tokens;
  for (std::size_t k = 0; k < gaps[0]; ++k) tokens.push_back(filler());
  const std::size_t offset = tokens.size();
  entity_at[0] = offset;
  entity_at[1] += offset;
  tokens.insert(tokens.end(), first.begin(), first.end());
  for (std::size_t k = 0; k < gaps[1]; ++k) tokens.push_back(filler());
  tokens.insert(tokens.end(), second.begin(), second.end());
  for (std::size_t k = 0; k < gaps[2]; ++k) tokens.push_back(filler());

  const std::size_t asked = rng() % 2;
  const std::string passage = join_tokens(tokens);
  const auto toks = tokenize(passage);
  return make_sample("coref-" + std::to_string(spec.seed) + "-" + std::to_string(index), passage,
                     "who " + word('v', action[asked]) + " ?",
                     {{join_tokens(entity[asked]), toks[entity_at[asked]].begin}});
}

std::size_t min_passage_len(const SyntheticSpec& spec) {
  return spec.task == SyntheticTask::kMarkerSpan ? 2 * (spec.answer_max + 2) : 2 * spec.answer_max + 15;
}

}  // namespace

std::vector<Sample> gen_synthetic(const SyntheticSpec& spec, std::size_t n) {
  if (spec.vocab_size == 0) throw ConfigError("synthetic vocab_size must be positive");
  if (spec.answer_min < 1 || spec.answer_min > spec.answer_max) {
    throw ConfigError("synthetic answer lengths need 1 <= answer_min <= answer_max");
  }
  if (spec.passage_len < min_passage_len(spec)) {
    throw ConfigError("synthetic passage_len " + std::to_string(spec.passage_len) + " too short; need at least " +
                      std::to_string(min_passage_len(spec)));
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(spec.task == SyntheticTask::kMarkerSpan ? marker_span(spec, i, rng)
                                                          : coref_two_sentence(spec, i, rng));
  }
  return out;
}

std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < spec.vocab_size; ++i) v.push_back(word('w', i));
  v.push_back(".");
  v.push_back("?");
  if (spec.task == SyntheticTask::kMarkerSpan) {
    for (std::size_t i = 0; i < kMarkers; ++i) v.push_back(word('k', i));
    v.push_back("what");
    v.push_back("follows");
  } else {
    for (std::size_t i = 0; i < spec.vocab_size; ++i) v.push_back(word('e', i));
    for (std::size_t i = 0; i < kAliases; ++i) v.push_back(word('a', i));
    for (std::size_t i = 0; i < kActions; ++i) v.push_back(word('v', i));
    for (const char* t : {"is", "the", "and", "who"}) v.push_back(t);
  }
  return v;
}

WordTable random_word_table(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  WordTable table(dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  for (const auto& t : tokens) {
    std::vector<float> vec(dim);
    for (auto& x : vec) x = u(rng);
    table.insert(t, std::move(vec));
  }
  return table;
}

void save_word_vectors(const std::string& path, const WordTable& table, const std::vector<std::string>& tokens) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write word vectors " + path);
  out.precision(9);
  for (const auto& t : tokens) {
    auto r = table.find(t);
    if (!r) continue;
    out << t;
    const float* row = table.row(*r);
    for (std::size_t k = 0; k < table.dim(); ++k) out << ' ' << row[k];
    out << '\n';
  }
}

}  // namespace amanda
