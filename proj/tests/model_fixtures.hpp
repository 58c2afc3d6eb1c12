#pragma once

// Tiny models and a whole-model finite-difference check, shared by the
// train/eval tests and the acceptance binary.

#include <algorithm>
#include <map>
#include <memory>
#include <set>

#include "amanda/gradcheck.hpp"
#include "amanda/model.hpp"

namespace amanda::testing {

// T = 6, U = 4, h = 4, m = 2.
inline Config tiny_config() {
  Config c;
  c.word_dim = 5;
  c.char_dim = 3;
  c.char_filters = 3;
  c.char_width = 3;
  c.hidden = 4;
  c.factors = 2;
  c.dropout = 0.0;
  c.batch_size = 4;
  c.seed = 3;
  return c;
}

inline Sample tiny_sample() {
  return make_sample("tiny", "the red fox met Robert Park", "who met the fox", {{"Robert Park", std::nullopt}});
}

inline std::shared_ptr<const WordTable> tiny_words(std::size_t dim) {
  // "met" and "Park" stay out of vocabulary on purpose.
  return std::make_shared<WordTable>(random_word_table({"the", "red", "fox", "robert", "who"}, dim, 17));
}

inline Model tiny_model(const Config& cfg) {
  return Model::create(cfg, tiny_words(cfg.word_dim), {tiny_sample()});
}

// Largest relative error over every parameter of the composed loss. Many
// coordinates have gradients near 1e-9 here, so the step is 1e-4: at 1e-6 the
// cancellation error of the difference quotient (~1e-10) swamps them.
inline double full_model_fd_error(const Model& model, const SampleInput& in, double step = 1e-4) {
  ModelParams<double> params = model.params.cast<double>();
  double worst = 0.0;
  for (auto& [name, tensor] : params.items()) {
    const std::string target = name;
    ScalarFn f = [&](Graph<double>& g, Var<double> x) {
      BoundParams<double> bound;
      for (auto& [n, t] : params.items()) bound.vars.emplace(n, n == target ? x : g.constant(t));
      return *forward(model.config, bound, *model.words, in).loss;
    };
    worst = std::max(worst, finite_diff_check(f, tensor, step));
  }
  return worst;
}

// One architecture variant and how its census must differ from the full model.
struct Variant {
  std::string name;
  Config config;
  std::set<std::string> removed;
  std::map<std::string, Shape> added;
  std::map<std::string, Shape> reshaped;
};

struct CensusDiff {
  std::set<std::string> removed;
  std::map<std::string, Shape> added;
  std::map<std::string, Shape> reshaped;
};

inline CensusDiff census_diff(const std::map<std::string, Shape>& full, const std::map<std::string, Shape>& other) {
  CensusDiff d;
  for (const auto& [n, s] : full) {
    auto it = other.find(n);
    if (it == other.end()) {
      d.removed.insert(n);
    } else if (it->second != s) {
      d.reshaped[n] = it->second;
    }
  }
  for (const auto& [n, s] : other) {
    if (!full.count(n)) d.added[n] = s;
  }
  return d;
}

inline std::set<std::string> lstm_names(const std::string& prefix) {
  std::set<std::string> out;
  for (const char* dir : {"fwd", "bwd"}) {
    for (const char* w : {"wx", "wh", "b"}) out.insert(prefix + "." + dir + "." + w);
  }
  return out;
}

// Six component ablations and three aggregation variants of `base`.
inline std::vector<Variant> variants(const Config& base) {
  const std::size_t h = base.hidden, H = base.encoding_dim();
  auto with = [&](auto edit) {
    Config c = base;
    edit(c);
    return c;
  };
  std::vector<Variant> out;
  out.push_back({"minus multifactor", with([](Config& c) { c.multifactor = false; }),
                 {"mf.wf", "gate.w", "gate.b"}, {},
                 {{"ptr_b.fwd.wx", {H, 4 * h}}, {"ptr_b.bwd.wx", {H, 4 * h}}}});
  out.push_back({"minus q_ma", with([](Config& c) { c.q_ma = false; }), {}, {}, {{"q.w", {2 * H, H}}}});
  out.push_back({"minus q_f", with([](Config& c) { c.q_f = false; }), {}, {}, {{"q.w", {H, H}}}});
  out.push_back({"minus q_ma and q_f", with([](Config& c) { c.q_ma = c.q_f = false; }), {"q.w", "q.b"},
                 {{"q.const", {H}}}, {}});
  out.push_back({"minus char embedding", with([](Config& c) { c.char_emb = false; }),
                 {"char.table", "char.filters", "char.bias"}, {},
                 {{"enc.fwd.wx", {base.word_dim, 4 * h}}, {"enc.bwd.wx", {base.word_dim, 4 * h}}}});
  out.push_back({"minus question-dependent encoding", with([](Config& c) { c.qdep_encoding = false; }),
                 lstm_names("qdep"), {}, {}});
  out.push_back({"minus second pointer LSTM", with([](Config& c) { c.second_pointer_lstm = false; }),
                 lstm_names("ptr_e"), {{"ptr_e_ff.w", {H, H}}, {"ptr_e_ff.b", {H}}}, {}});
  for (auto a : {Aggregation::kMax, Aggregation::kMean, Aggregation::kSum}) {
    out.push_back({"aggregation " + to_string(a), with([a](Config& c) { c.aggregation = a; }), {}, {}, {}});
  }
  return out;
}

inline bool matches(const CensusDiff& d, const Variant& v) {
  return d.removed == v.removed && d.added == v.added && d.reshaped == v.reshaped;
}

}  // namespace amanda::testing
