#include <filesystem>
#include <fstream>

#include "amanda/embed.hpp"
#include "amanda/gradcheck.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace amanda;
using amanda::testing::contract;
using amanda::testing::random_tensor;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / ("amanda_embed_" + name);
  std::ofstream(path) << body;
  return path.string();
}

std::string vector_line(const std::string& token, std::size_t n, double start) {
  std::string s = token;
  for (std::size_t i = 0; i < n; ++i) s += " " + std::to_string(start + 0.001 * static_cast<double>(i));
  return s + "\n";
}

}  // namespace

TEST_CASE("load_word_vectors stores rows and reports bad lines") {
  auto path = temp_file("ok.txt", vector_line("the", 300, 0.1) + vector_line("Park", 300, -0.2));
  WordTable t = load_word_vectors(path, 300);
  CHECK(t.size() == 2);
  auto row = embed_word<double>(t, "the");
  CHECK(row.shape == Shape{300});
  CHECK(row.data[0] == doctest::Approx(0.1));
  CHECK(row.data[299] == doctest::Approx(0.1 + 0.299));

  WordTable empty = load_word_vectors(temp_file("empty.txt", ""), 300);
  CHECK(empty.size() == 0);
  for (double v : embed_word<double>(empty, "anything").data) CHECK(v == 0.0);

  auto bad = temp_file("bad.txt", vector_line("a", 300, 0.0) + vector_line("b", 299, 0.0));
  try {
    load_word_vectors(bad, 300);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_word_vectors(temp_file("nan.txt", "x 1 zz 3\n"), 3), ParseError);
}

TEST_CASE("embed_word lookups") {
  WordTable t(3);
  t.insert("park", {1, 2, 3});
  t.insert("NASA", {4, 5, 6});
  CHECK(embed_word<double>(t, "park").data == std::vector<double>{1, 2, 3});
  CHECK(embed_word<double>(t, "Park").data == std::vector<double>{1, 2, 3});  // lowercased first
  CHECK(embed_word<double>(t, "NASA").data == std::vector<double>{4, 5, 6});  // raw-case fallback
  CHECK(embed_word<double>(t, "unseen").data == std::vector<double>{0, 0, 0});
  CHECK_FALSE(t.insert("park", {7, 8, 9}));
  CHECK(embed_word<double>(t, "park").data == std::vector<double>{1, 2, 3});
}

TEST_CASE("char vocabulary reserves pad and unknown") {
  CharVocab v;
  v.add_word("ab");
  v.add_word("bé");
  CHECK(v.size() == 5);
  CHECK(v.ids("abé") == std::vector<std::size_t>{2, 3, 4});
  CHECK(v.ids("z") == std::vector<std::size_t>{CharVocab::kUnknown});
  CHECK(CharVocab::from_chars(v.chars()).ids("bé") == v.ids("bé"));
}

TEST_CASE("char_cnn_embed examples") {
  Graph<double> g;
  // One channel; char id k has value k - 1 for k >= 2.
  auto table = g.constant(Tensor<double>::matrix(5, 1, {0, 0, 1, 2, 3}));
  auto ones = g.constant(Tensor<double>({2, 1, 1}, {1, 1}));
  auto bias = g.constant(Tensor<double>::vector({0}));
  CharCnnVars<double> cnn{table, ones, bias, 2};
  // windows of "x y z" = [1+2, 2+3] -> max 5
  auto out = char_cnn_embed(cnn, {{2, 3, 4}});
  CHECK(out.shape() == Shape{1, 1});
  CHECK(out.value().data[0] == 5.0);

  // Shorter than the filter: padded to one valid window.
  CharCnnVars<double> wide{table, g.constant(Tensor<double>({3, 1, 1}, {1, 1, 1})), bias, 3};
  auto single = char_cnn_embed(wide, {{4}});
  CHECK(single.value().data[0] == 3.0);
  CHECK(window_count(1, 3) == 1);

  // Position-weighted filter distinguishes a word from its reverse.
  CharCnnVars<double> ordered{table, g.constant(Tensor<double>({2, 1, 1}, {1, -1})), bias, 2};
  auto both = char_cnn_embed(ordered, {{2, 3, 4}, {4, 3, 2}});
  CHECK(both.value().at(0, 0) == -1.0);
  CHECK(both.value().at(1, 0) == 1.0);
}

TEST_CASE("char_cnn_embed default widths and gradient") {
  std::mt19937_64 rng(3);
  Graph<double> g;
  auto table = g.constant(random_tensor({10, 50}, rng));
  auto filters = g.constant(random_tensor({5, 50, 50}, rng));
  auto bias = g.constant(random_tensor({50}, rng));
  CharCnnVars<double> cnn{table, filters, bias, 5};
  CHECK(char_cnn_embed(cnn, {{2}, {2, 3, 4, 5, 6, 7, 8, 9}}).shape() == Shape{2, 50});

  auto small_table = random_tensor({6, 3}, rng);
  auto small_filters = random_tensor({3, 3, 4}, rng);
  auto f = [&](Graph<double>& gg, Var<double> x) {
    CharCnnVars<double> c{x, gg.constant(small_filters), gg.constant(Tensor<double>::zeros({4})), 3};
    return contract(char_cnn_embed(c, {{2, 3, 4, 5}, {5}, {1, 2}}), 11);
  };
  CHECK(finite_diff_check(f, small_table) < 1e-4);
  auto h = [&](Graph<double>& gg, Var<double> x) {
    CharCnnVars<double> c{gg.constant(small_table), x, gg.constant(Tensor<double>::zeros({4})), 3};
    return contract(char_cnn_embed(c, {{2, 3, 4, 5}, {5}, {1, 2}}), 12);
  };
  CHECK(finite_diff_check(h, small_filters) < 1e-4);
}

TEST_CASE("embed_sequence shapes and frozen word half") {
  WordTable words(300);
  std::vector<float> v(300, 0.5f);
  words.insert("park", v);
  std::mt19937_64 rng(5);
  auto table = random_tensor({8, 50}, rng);
  table.requires_grad = true;
  auto filters = random_tensor({5, 50, 50}, rng);
  auto bias = Tensor<double>::zeros({50});

  Graph<double> g;
  auto tv = g.param(table);
  CharCnnVars<double> cnn{tv, g.constant(filters), g.constant(bias), 5};
  auto one = embed_sequence(g, words, &cnn, {0}, {{2, 3}});
  CHECK(one.shape() == Shape{1, 350});

  auto oov = embed_sequence(g, words, &cnn, {-1, -1}, {{2, 3, 4}, {5}});
  bool char_nonzero = false;
  for (std::size_t c = 0; c < 300; ++c) CHECK(oov.value().at(0, c) == 0.0);
  for (std::size_t c = 300; c < 350; ++c) char_nonzero = char_nonzero || oov.value().at(0, c) != 0.0;
  CHECK(char_nonzero);

  auto same = embed_sequence(g, words, &cnn, {0, 0}, {{2, 3}, {2, 3}});
  for (std::size_t c = 0; c < 350; ++c) CHECK(same.value().at(0, c) == same.value().at(1, c));

  auto words_only = embed_sequence<double>(g, words, nullptr, {0, -1}, {});
  CHECK(words_only.shape() == Shape{2, 300});

  // Only the character table is a gradient leaf; the word rows are constants.
  g.backward(sum_all(one));
  CHECK_FALSE(table.grad.empty());
}
