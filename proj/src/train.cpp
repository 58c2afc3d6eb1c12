#include "amanda/train.hpp"

#include <cmath>
#include <unordered_map>

#include "amanda/checkpoint.hpp"

namespace amanda {

double clip_gradients(ModelParams<float>& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, t] : params.items()) {
    for (float g : t.grad) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in " + name);
      sq += static_cast<double>(g) * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, t] : params.items()) {
      for (float& g : t.grad) g = static_cast<float>(g * s);
    }
  }
  return norm;
}

void adam_step(ModelParams<float>& params, AdamState& st, double lr) {
  auto& items = params.items();
  if (st.m.empty()) {
    for (auto& [_, t] : items) {
      st.m.emplace_back(t.size(), 0.0f);
      st.v.emplace_back(t.size(), 0.0f);
    }
  }
  if (st.m.size() != items.size()) throw DimensionError("adam_step: optimizer state does not match parameters");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t p = 0; p < items.size(); ++p) {
    auto& t = items[p].second;
    if (t.grad.empty()) continue;
    auto& m = st.m[p];
    auto& v = st.v[p];
    if (m.size() != t.size()) throw DimensionError("adam_step: moment shape differs for " + items[p].first);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * g;
      const double vi = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      t.data[i] = static_cast<float>(t.data[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + st.eps));
    }
  }
}

double sample_loss(const Model& model, const SampleInput& in) {
  Graph<float> g;
  auto bound = bind(g, const_cast<ModelParams<float>&>(model.params));
  auto r = forward(model.config, bound, *model.words, in);
  if (!r.loss) throw Error("sample_loss: sample has no gold span");
  return r.loss->value().data[0];
}

double accumulate_batch(Model& model, const std::vector<SampleInput>& inputs, Dropout* dropout) {
  double total = 0.0;
  for (const auto& in : inputs) {
    Graph<float> g;
    auto bound = bind(g, model.params);
    auto r = forward(model.config, bound, *model.words, in, dropout);
    if (!r.loss) throw Error("training sample without a gold span");
    const double loss = r.loss->value().data[0];
    if (!std::isfinite(loss)) throw NonFiniteError("non-finite training loss");
    total += loss;
    g.backward(*r.loss);
  }
  return total;
}

EvalReport evaluate(const Model& model, const std::vector<Sample>& samples, std::size_t threads) {
  const auto preds = select_by_id(predict_all(model, samples, threads));
  std::unordered_map<std::string, const Sample*> first;
  for (const auto& s : samples) first.emplace(s.id, &s);
  std::vector<ScoredItem> items;
  items.reserve(preds.size());
  for (const auto& p : preds) {
    const Sample& s = *first.at(p.id);
    items.push_back({p.text, p.span.e - p.span.b + 1, s.answers, question_type(token_texts(s.question_tokens))});
  }
  return score(items);
}

TrainResult train(Model model, const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const TrainOptions& opts) {
  if (train_set.empty()) throw Error("training set is empty");
  const Config& cfg = model.config;
  const Featurizer feats = model.featurizer();
  AdamState adam;
  Dropout dropout(cfg.dropout, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainResult result;
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    BatchPrefetcher batches(train_set, cfg.batch_size, cfg.seed * 1000003ULL + epoch, feats, cfg.qtype_first_two, 2);
    while (auto batch = batches.next()) {
      std::vector<SampleInput> inputs;
      inputs.reserve(batch->size());
      for (std::size_t i = 0; i < batch->size(); ++i) inputs.push_back(strip_padding(batch->row(i)));
      model.params.zero_grad();
      rec.train_loss += accumulate_batch(model, inputs, &dropout);
      clip_gradients(model.params, cfg.clip_norm);
      adam_step(model.params, adam, cfg.learning_rate);
    }
    rec.train_loss /= static_cast<double>(train_set.size());
    rec.dev = evaluate(model, dev_set.empty() ? train_set : dev_set, opts.threads);
    if (rec.dev.f1 > best_f1) {
      best_f1 = rec.dev.f1;
      result.best = model;
      result.best_epoch = epoch;
      if (opts.checkpoint_dir) save_checkpoint(*opts.checkpoint_dir, model);
    }
    result.history.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);
    if (opts.stop_after && opts.stop_after(rec)) break;
  }
  for (auto& [_, t] : result.best.params.items()) t.grad.clear();
  return result;
}

nlohmann::json history_json(const std::vector<EpochRecord>& history, std::size_t best_epoch) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : history) {
    epochs.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"dev", r.dev.to_json()}});
  }
  return {{"best_epoch", best_epoch}, {"epochs", epochs}};
}

}  // namespace amanda
