#include <filesystem>
#include <fstream>
#include <regex>
#include <set>

#include "amanda/data.hpp"
#include "doctest.h"

using namespace amanda;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("amanda_data_" + name)).string();
}

std::string write_file(const std::string& name, const std::string& body) {
  const auto path = temp_path(name);
  std::ofstream(path) << body;
  return path;
}

const char* kTable1Passage =
    "The family of a Korean-American missionary believed held in North Korea said Tuesday they are "
    "thankful for the media attention. Robert Park told relatives he was bringing a message of love.";

std::string collapse_ws(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += c;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

TEST_CASE("tokenize examples") {
  auto t = tokenize("Robert Park told relatives");
  REQUIRE(t.size() == 4);
  CHECK(token_texts(t) == std::vector<std::string>{"Robert", "Park", "told", "relatives"});
  CHECK(t[1].begin == 7);
  CHECK(t[1].end == 11);
  CHECK(tokenize("").empty());
  CHECK(token_texts(tokenize("U.S. officials")) == std::vector<std::string>{"U.S.", "officials"});
  CHECK(token_texts(tokenize("(hello, world!)")) == std::vector<std::string>{"(", "hello", ",", "world", "!", ")"});
  CHECK(token_texts(tokenize("don't stop.")) == std::vector<std::string>{"don't", "stop", "."});
  auto u = tokenize("café\xC2\xA0noir");
  REQUIRE(u.size() == 2);
  CHECK(u[1].begin == 5);  // offsets count code points
}

TEST_CASE("align_answer examples") {
  const std::string passage = kTable1Passage;
  auto toks = tokenize(passage);
  auto [b, e] = align_answer(passage, toks, "Robert Park");
  CHECK(e == b + 1);
  CHECK(toks[b - 1].text == "Robert");
  CHECK(span_text(passage, toks, b, e) == "Robert Park");

  auto whole = align_answer("a b c", tokenize("a b c"), "a b c");
  CHECK(whole == std::pair<std::size_t, std::size_t>{1, 3});
  CHECK_THROWS_AS(align_answer(passage, toks, "Pyongyang"), AlignmentError);
  CHECK(align_answer(passage, toks, "robert park") == std::pair<std::size_t, std::size_t>{b, e});

  const std::string twice = "Park met Park today";
  auto tt = tokenize(twice);
  CHECK(align_answer(twice, tt, "Park") == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(align_answer(twice, tt, "Park", 9) == std::pair<std::size_t, std::size_t>{3, 3});
  CHECK_THROWS_AS(align_answer(twice, tt, "Park", 40), AlignmentError);
}

TEST_CASE("load_dataset parses, offsets, and skips") {
  const std::string body =
      R"({"id":"a","passage":"Park met Park today","question":"Who met?","answers":[{"text":"Park","char_start":9}]})"
      "\n"
      R"({"id":"b","passage":"x y z","question":"what?","answers":[{"text":"nope","char_start":null},{"text":"y z"}]})"
      "\n"
      R"({"id":"c","passage":"x y z","question":"what?","answers":[{"text":"absent"}]})"
      "\n";
  auto ds = load_dataset(write_file("ok.jsonl", body));
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.skipped == 1);
  CHECK(ds.samples[0].gold_b == 3);
  CHECK(ds.samples[1].gold_b == 2);
  CHECK(ds.samples[1].gold_e == 3);
  CHECK(ds.samples[1].answer == "y z");
  CHECK(ds.samples[1].answers.size() == 2);

  auto missing = write_file("missing.jsonl", body + R"({"id":"d","passage":"x","answers":[]})" "\n");
  try {
    load_dataset(missing);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("question") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset(write_file("bad.jsonl", "{not json\n")), ParseError);
  CHECK_THROWS_AS(load_dataset(temp_path("does_not_exist.jsonl")), Error);

  // Save and reload keeps the same spans.
  const auto path = temp_path("roundtrip.jsonl");
  save_dataset(path, ds.samples);
  auto again = load_dataset(path);
  REQUIRE(again.samples.size() == 2);
  CHECK(again.samples[0].gold_b == 3);
  CHECK(again.samples[1].gold_e == 3);
}

TEST_CASE("make_batches sizes, determinism and masks") {
  SyntheticSpec spec;
  auto samples = gen_synthetic(spec, 61);
  Featurizer f{std::make_shared<WordTable>(random_word_table(synthetic_vocabulary(spec), 4, 1)), {}};
  auto batches = make_batches(samples, 60, 7, f);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 60);
  CHECK(batches[1].size() == 1);

  auto again = make_batches(samples, 60, 7, f);
  CHECK(again[0].indices == batches[0].indices);
  CHECK(again[0].passage_words == batches[0].passage_words);
  CHECK(make_batches(samples, 60, 8, f)[0].indices != batches[0].indices);

  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Sample& s = samples[b.indices[i]];
      seen.insert(b.indices[i]);
      std::size_t mask_sum = 0;
      for (std::size_t t = 0; t < b.passage_len; ++t) {
        mask_sum += b.passage_mask[i * b.passage_len + t];
        if (!b.passage_mask[i * b.passage_len + t]) CHECK(b.passage_words[i * b.passage_len + t] == kPadWord);
      }
      CHECK(mask_sum == s.passage_tokens.size());
      // Un-batching recovers the featurized sample.
      SampleInput direct = featurize(f, s);
      SampleInput row = b.row(i);
      CHECK(std::vector<long>(row.passage_words.begin(), row.passage_words.begin() + direct.passage_words.size()) ==
            direct.passage_words);
      CHECK(std::vector<std::vector<std::size_t>>(row.passage_chars.begin(),
                                                  row.passage_chars.begin() + direct.passage_chars.size()) ==
            direct.passage_chars);
      CHECK(row.gold_b == s.gold_b);
      CHECK(row.qtype_rows == direct.qtype_rows);
    }
  }
  CHECK(seen.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(seen.count(i) == 1);
}

TEST_CASE("prefetcher matches make_batches at any depth") {
  SyntheticSpec spec;
  spec.task = SyntheticTask::kCorefTwoSentence;
  spec.passage_len = 24;
  auto samples = gen_synthetic(spec, 50);
  Featurizer f{std::make_shared<WordTable>(random_word_table(synthetic_vocabulary(spec), 4, 1)), {}};
  auto expected = make_batches(samples, 7, 3, f);
  for (std::size_t depth : {1, 2, 16}) {
    BatchPrefetcher pre(samples, 7, 3, f, false, depth);
    std::size_t k = 0;
    while (auto b = pre.next()) {
      REQUIRE(k < expected.size());
      CHECK(b->indices == expected[k].indices);
      CHECK(b->passage_chars == expected[k].passage_chars);
      ++k;
    }
    CHECK(k == expected.size());
  }
  { BatchPrefetcher abandoned(samples, 1, 3, f, false, 1); }  // destructor must not hang
}

TEST_CASE("marker-span generator is solvable and deterministic") {
  SyntheticSpec spec;
  spec.seed = 42;
  auto a = gen_synthetic(spec, 300);
  auto b = gen_synthetic(spec, 300);
  const std::regex marker(R"(k(\d))");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Sample& s = a[i];
    CHECK(s.passage == b[i].passage);
    CHECK(s.passage_tokens.size() == spec.passage_len);
    REQUIRE(1 <= s.gold_b);
    REQUIRE(s.gold_b <= s.gold_e);
    REQUIRE(s.gold_e <= s.passage_tokens.size());
    const std::size_t len = s.gold_e - s.gold_b + 1;
    CHECK(len >= spec.answer_min);
    CHECK(len <= spec.answer_max);
    // Oracle: the text between the question's marker and the next period.
    std::smatch m;
    REQUIRE(std::regex_search(s.question, m, marker));
    const std::regex span(" ?" + m.str(0) + " ([^.]*) \\.");
    std::smatch hit;
    REQUIRE(std::regex_search(s.passage, hit, span));
    CHECK(hit.str(1) == s.answer);
    CHECK(collapse_ws(span_text(s.passage, s.passage_tokens, s.gold_b, s.gold_e)) == collapse_ws(s.answer));
  }
  SyntheticSpec bad = spec;
  bad.answer_max = 30;
  CHECK_THROWS_AS(gen_synthetic(bad, 1), ConfigError);
  CHECK_THROWS_AS(parse_synthetic_task("nope"), ConfigError);
}

TEST_CASE("coref generator puts the answer in sentence one") {
  SyntheticSpec spec;
  spec.task = SyntheticTask::kCorefTwoSentence;
  spec.passage_len = 24;
  spec.seed = 9;
  auto samples = gen_synthetic(spec, 200);
  std::size_t first_entity = 0;
  for (const auto& s : samples) {
    auto toks = token_texts(s.passage_tokens);
    CHECK(toks.size() == spec.passage_len);
    const std::size_t period = static_cast<std::size_t>(std::find(toks.begin(), toks.end(), ".") - toks.begin());
    CHECK(s.gold_e <= period);
    // Oracle: action -> alias in sentence two -> entity span before "is the <alias>".
    const std::string action = token_texts(s.question_tokens)[1];
    std::size_t at = period + 1;
    while (toks[at] != action) ++at;
    const std::string alias = toks[at - 1];
    std::size_t intro = 0;
    while (!(toks[intro] == alias && intro < period)) ++intro;
    const std::size_t end = intro - 2;  // "<entity> is the <alias>"
    CHECK(s.gold_e == end);
    std::size_t begin = end;
    while (begin > 1 && toks[begin - 2][0] == 'e') --begin;
    CHECK(s.gold_b == begin);
    first_entity += s.gold_b < 4;
  }
  // Both entities get asked about.
  CHECK(first_entity > 40);
  CHECK(first_entity < 160);

  SyntheticSpec tight = spec;
  tight.passage_len = 20;
  CHECK_THROWS_AS(gen_synthetic(tight, 1), ConfigError);
}

TEST_CASE("synthetic vocabulary covers generated tokens and vectors round-trip") {
  for (auto task : {SyntheticTask::kMarkerSpan, SyntheticTask::kCorefTwoSentence}) {
    SyntheticSpec spec;
    spec.task = task;
    spec.passage_len = 26;
    auto vocab = synthetic_vocabulary(spec);
    std::set<std::string> known(vocab.begin(), vocab.end());
    for (const auto& s : gen_synthetic(spec, 100)) {
      for (const auto& t : s.passage_tokens) CHECK(known.count(t.text));
      for (const auto& t : s.question_tokens) CHECK(known.count(t.text));
    }
    auto table = random_word_table(vocab, 8, 3);
    const auto path = temp_path("vectors.txt");
    save_word_vectors(path, table, vocab);
    auto loaded = load_word_vectors(path, 8);
    REQUIRE(loaded.size() == table.size());
    for (std::size_t k = 0; k < 8; ++k) CHECK(loaded.row(0)[k] == table.row(0)[k]);
  }
}
