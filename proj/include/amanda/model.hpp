#pragma once

#include <memory>
#include <optional>
#include <random>

#include "amanda/data.hpp"
#include "amanda/embed.hpp"
#include "amanda/params.hpp"
#include "amanda/pointer.hpp"

namespace amanda {

/// Inverted dropout with its own generator. A null context means evaluation.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64 rng;

  Dropout(double p, std::uint64_t seed) : rate(p), rng(seed) {}

  template <typename T>
  Var<T> apply(Var<T> x);
};

/// Every named intermediate of one forward pass. Members are unset when the
/// configuration ablates the component producing them.
template <typename T>
struct ForwardResult {
  Var<T> P, Q, A;
  std::optional<Var<T>> R;
  Var<T> V;
  std::optional<Var<T>> F_tilde;
  Var<T> Y, B, E;
  Var<T> k;
  std::optional<Var<T>> q_ma, q_f;
  Var<T> q_tilde;
  Var<T> s_b, s_e, pr_b, pr_e;
  std::optional<Var<T>> loss;  // only with a known gold span
};

/// Runs the configured architecture on one sample.
template <typename T>
ForwardResult<T> forward(const Config& cfg, const BoundParams<T>& p, const WordTable& words, const SampleInput& in,
                         Dropout* dropout = nullptr);

/// A trained or freshly initialized model with its vocabularies.
struct Model {
  Config config;
  ModelParams<float> params;
  std::shared_ptr<const WordTable> words;
  CharVocab chars;

  /// Builds vocabularies from `samples` (characters) and initializes parameters.
  static Model create(const Config& cfg, std::shared_ptr<const WordTable> words, const std::vector<Sample>& samples);

  Featurizer featurizer() const { return {words, chars}; }
  SampleInput input(const Sample& s) const;
};

struct Prediction {
  std::string id;
  std::string text;
  SpanPrediction span;
};

/// Decoded span for one sample (no dropout, no gradient).
Prediction predict(const Model& model, const Sample& s);
std::vector<Prediction> predict_all(const Model& model, const std::vector<Sample>& samples, std::size_t threads = 1);

/// Keeps, for each id, the prediction with the highest joint probability
/// (first occurrence wins ties). Output follows first appearance of each id.
std::vector<Prediction> select_by_id(const std::vector<Prediction>& preds);

/// Drops padded positions, leaving only the real tokens of a batch row.
SampleInput strip_padding(const SampleInput& in);

}  // namespace amanda
