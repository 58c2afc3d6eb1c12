#include "amanda/model.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "amanda/multifactor.hpp"

namespace amanda {
namespace {

using Layout = std::vector<std::pair<std::string, Shape>>;

void add_bilstm(Layout& out, const std::string& prefix, std::size_t in, std::size_t h) {
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string base = prefix + "." + dir;
    out.push_back({base + ".wx", {in, 4 * h}});
    out.push_back({base + ".wh", {h, 4 * h}});
    out.push_back({base + ".b", {4 * h}});
  }
}

// Parameter names and shapes in creation order.
Layout layout(const Config& cfg, std::size_t char_vocab) {
  cfg.validate();
  const std::size_t h = cfg.hidden;
  const std::size_t H = cfg.encoding_dim();
  Layout out;
  if (cfg.char_emb) {
    if (char_vocab < 2) throw ConfigError("character vocabulary must hold at least the pad and unknown rows");
    out.push_back({"char.table", {char_vocab, cfg.char_dim}});
    out.push_back({"char.filters", {cfg.char_width, cfg.char_dim, cfg.char_filters}});
    out.push_back({"char.bias", {cfg.char_filters}});
  }
  add_bilstm(out, "enc", cfg.embedding_dim(), h);
  if (cfg.qdep_encoding) add_bilstm(out, "qdep", 2 * H, h);
  if (cfg.multifactor) {
    out.push_back({"mf.wf", {H, cfg.factors, H}});
    out.push_back({"gate.w", {2 * H, 2 * H}});
    out.push_back({"gate.b", {2 * H}});
  }
  add_bilstm(out, "ptr_b", cfg.multifactor ? 2 * H : H, h);
  if (cfg.second_pointer_lstm) {
    add_bilstm(out, "ptr_e", H, h);
  } else {
    out.push_back({"ptr_e_ff.w", {H, H}});
    out.push_back({"ptr_e_ff.b", {H}});
  }
  const std::size_t q_in = (cfg.q_ma ? H : 0) + (cfg.q_f ? 2 * H : 0);
  if (q_in) {
    out.push_back({"q.w", {q_in, H}});
    out.push_back({"q.b", {H}});
  } else {
    out.push_back({"q.const", {H}});
  }
  return out;
}

bool is_lstm_bias(const std::string& name) {
  const std::size_t n = name.size();
  return n > 6 && name.compare(n - 2, 2, ".b") == 0 &&
         (name.compare(n - 6, 6, ".fwd.b") == 0 || name.compare(n - 6, 6, ".bwd.b") == 0);
}

void fill_uniform(Tensor<float>& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& x : t.data) x = static_cast<float>(u(rng));
}

double glorot(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

std::map<std::string, Shape> expected_census(const Config& cfg, std::size_t char_vocab) {
  std::map<std::string, Shape> out;
  for (auto& [name, shape] : layout(cfg, char_vocab)) out[name] = shape;
  return out;
}

ModelParams<float> init_params(const Config& cfg, std::size_t char_vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams<float> params;
  for (auto& [name, shape] : layout(cfg, char_vocab)) {
    Tensor<float> t = Tensor<float>::zeros(shape);
    if (name == "char.table" || name == "q.const") {
      fill_uniform(t, 0.1, rng);
    } else if (name == "char.filters") {
      fill_uniform(t, glorot(shape[0] * shape[1], shape[2]), rng);
    } else if (name == "mf.wf") {
      fill_uniform(t, glorot(shape[0], shape[2]), rng);  // per H x H slice
    } else if (is_lstm_bias(name)) {
      // LSTM bias: forget gate starts open.
      const std::size_t h = shape[0] / 4;
      for (std::size_t i = h; i < 2 * h; ++i) t.data[i] = 1.0f;
    } else if (shape.size() == 2) {
      fill_uniform(t, glorot(shape[0], shape[1]), rng);
    }
    params.add(name, std::move(t));
  }
  return params;
}

template <typename T>
Var<T> Dropout::apply(Var<T> x) {
  if (rate <= 0.0) return x;
  Tensor<T> keep = Tensor<T>::zeros(x.shape());
  std::bernoulli_distribution coin(1.0 - rate);
  const T scale_up = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& k : keep.data) k = coin(rng) ? scale_up : T(0);
  return mul_const(x, keep);
}

template <typename T>
ForwardResult<T> forward(const Config& cfg, const BoundParams<T>& p, const WordTable& words, const SampleInput& in,
                         Dropout* dropout) {
  const Mask& pmask = in.passage_mask;
  const Mask& qmask = in.question_mask;
  auto drop = [&](Var<T> x) { return dropout ? dropout->apply(x) : x; };
  Graph<T>& g = *p["enc.fwd.wx"].graph;

  std::optional<CharCnnVars<T>> cnn;
  if (cfg.char_emb) cnn = CharCnnVars<T>{p["char.table"], p["char.filters"], p["char.bias"], cfg.char_width};
  const CharCnnVars<T>* cnn_ptr = cnn ? &*cnn : nullptr;

  ForwardResult<T> r;
  const auto enc = bilstm_vars(p, "enc");
  Var<T> emb_p = drop(embed_sequence(g, words, cnn_ptr, in.passage_words, in.passage_chars));
  Var<T> emb_q = drop(embed_sequence(g, words, cnn_ptr, in.question_words, in.question_chars));
  r.P = drop(bilstm_encode(enc, emb_p, pmask));
  r.Q = drop(bilstm_encode(enc, emb_q, qmask));
  r.A = attention_matrix(r.P, r.Q);

  if (cfg.qdep_encoding) {
    auto qd = question_dependent_encoding(r.P, r.Q, r.A, pmask, qmask, bilstm_vars(p, "qdep"));
    r.R = qd.R;
    r.V = drop(qd.V);
  } else {
    r.V = r.P;
  }

  if (cfg.multifactor) {
    auto agg = attentive_aggregate(multifactor_scores(r.V, p["mf.wf"]), r.V, pmask);
    r.F_tilde = agg.F_tilde;
    r.Y = drop(gated_fusion(agg.M_tilde, p["gate.w"], p["gate.b"]));
  } else {
    r.Y = r.V;
  }

  PointerEncodings<T> enc_ptr =
      cfg.second_pointer_lstm
          ? pointer_encodings(r.Y, bilstm_vars(p, "ptr_b"), bilstm_vars(p, "ptr_e"), pmask)
          : pointer_encodings_feedforward(r.Y, bilstm_vars(p, "ptr_b"), p["ptr_e_ff.w"], p["ptr_e_ff.b"], pmask);
  r.B = drop(enc_ptr.B);
  r.E = drop(enc_ptr.E);

  r.k = question_weights(cfg.aggregation, r.A, pmask, qmask);
  if (cfg.q_ma) r.q_ma = aggregate_question(r.k, r.Q);
  if (cfg.q_f) r.q_f = question_type_repr(r.Q, in.qtype_rows);
  if (cfg.q_ma || cfg.q_f) {
    r.q_tilde = final_question_vector(r.q_ma, r.q_f, p["q.w"], p["q.b"]);
  } else {
    r.q_tilde = reshape(p["q.const"], {1, cfg.encoding_dim()});
  }

  r.s_b = span_scores(r.q_tilde, r.B);
  r.s_e = span_scores(r.q_tilde, r.E);
  r.pr_b = span_distribution(r.s_b, pmask);
  r.pr_e = span_distribution(r.s_e, pmask);

  if (in.gold_b != 0) {
    const std::size_t n = pmask.size();
    if (in.gold_b > in.gold_e || in.gold_e > n || !pmask[in.gold_b - 1] || !pmask[in.gold_e - 1]) {
      throw DimensionError("forward: gold span (" + std::to_string(in.gold_b) + ", " + std::to_string(in.gold_e) +
                           ") outside the passage");
    }
    r.loss = add(masked_cross_entropy(r.s_b, pmask, in.gold_b - 1), masked_cross_entropy(r.s_e, pmask, in.gold_e - 1));
  }
  return r;
}

template Var<float> Dropout::apply(Var<float>);
template Var<double> Dropout::apply(Var<double>);
template ForwardResult<float> forward(const Config&, const BoundParams<float>&, const WordTable&, const SampleInput&,
                                      Dropout*);
template ForwardResult<double> forward(const Config&, const BoundParams<double>&, const WordTable&,
                                       const SampleInput&, Dropout*);

Model Model::create(const Config& cfg, std::shared_ptr<const WordTable> words, const std::vector<Sample>& samples) {
  cfg.validate();
  if (!words) throw ConfigError("model needs a word table");
  if (words->dim() != cfg.word_dim) {
    throw ConfigError("word vectors have " + std::to_string(words->dim()) + " dimensions, config says " +
                      std::to_string(cfg.word_dim));
  }
  Model m;
  m.config = cfg;
  m.words = std::move(words);
  for (const auto& s : samples) {
    for (const auto& t : s.passage_tokens) m.chars.add_word(t.text);
    for (const auto& t : s.question_tokens) m.chars.add_word(t.text);
  }
  m.params = init_params(cfg, m.chars.size(), cfg.seed);
  return m;
}

SampleInput Model::input(const Sample& s) const { return featurize(featurizer(), s, config.qtype_first_two); }

namespace {

SpanPrediction decode(const Model& model, const SampleInput& in) {
  Graph<float> g;
  ModelParams<float>& params = const_cast<ModelParams<float>&>(model.params);  // read-only: no backward runs
  auto bound = bind(g, params);
  auto r = forward(model.config, bound, *model.words, in);
  const auto& pb = r.pr_b.value().data;
  const auto& pe = r.pr_e.value().data;
  return decode_span(std::vector<double>(pb.begin(), pb.end()), std::vector<double>(pe.begin(), pe.end()),
                     model.config.max_answer_len);
}

}  // namespace

Prediction predict(const Model& model, const Sample& s) {
  SampleInput in = model.input(s);
  in.gold_b = in.gold_e = 0;
  Prediction p;
  p.id = s.id;
  p.span = decode(model, in);
  p.text = span_text(s.passage, s.passage_tokens, p.span.b, p.span.e);
  return p;
}

std::vector<Prediction> predict_all(const Model& model, const std::vector<Sample>& samples, std::size_t threads) {
  std::vector<Prediction> out(samples.size());
  threads = std::max<std::size_t>(1, std::min(threads, samples.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = predict(model, samples[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < samples.size(); i = next++) out[i] = predict(model, samples[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Prediction> select_by_id(const std::vector<Prediction>& preds) {
  std::vector<Prediction> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& p : preds) {
    auto it = slot.find(p.id);
    if (it == slot.end()) {
      slot.emplace(p.id, out.size());
      out.push_back(p);
    } else if (p.span.joint_prob > out[it->second].span.joint_prob) {
      out[it->second] = p;
    }
  }
  return out;
}

SampleInput strip_padding(const SampleInput& in) {
  SampleInput out;
  for (std::size_t t = 0; t < in.passage_mask.size(); ++t) {
    if (!in.passage_mask[t]) continue;
    out.passage_words.push_back(in.passage_words[t]);
    out.passage_chars.push_back(in.passage_chars[t]);
    out.passage_mask.push_back(1);
  }
  for (std::size_t t = 0; t < in.question_mask.size(); ++t) {
    if (!in.question_mask[t]) continue;
    out.question_words.push_back(in.question_words[t]);
    out.question_chars.push_back(in.question_chars[t]);
    out.question_mask.push_back(1);
  }
  out.qtype_rows = in.qtype_rows;
  out.gold_b = in.gold_b;
  out.gold_e = in.gold_e;
  return out;
}

}  // namespace amanda
