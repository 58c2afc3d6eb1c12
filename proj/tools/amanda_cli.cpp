// amanda: train, predict, eval, inspect, gen-synthetic.
//
// Exit codes: 0 ok, 2 usage or input error, 3 training diverged, 4 checkpoint
// shape mismatch, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "amanda/checkpoint.hpp"
#include "amanda/train.hpp"

namespace {

using namespace amanda;

constexpr int kUsage = 2;
constexpr int kDiverged = 3;
constexpr int kShape = 4;

std::size_t thread_count() {
  const char* env = std::getenv("AMANDA_THREADS");
  if (!env || !*env) return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

// "key=value": value parsed as JSON, or taken as a string when that fails.
nlohmann::json parse_overrides(const std::vector<std::string>& sets) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
    try {
      j[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      j[key] = value;
    }
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::vector<Sample> read_samples(const std::string& path) {
  Dataset ds = load_dataset(path);
  if (ds.skipped) std::cerr << "skipped " << ds.skipped << " unalignable samples in " << path << "\n";
  return std::move(ds.samples);
}

struct TrainArgs {
  std::string config, train, dev, out, word_vectors;
  std::vector<std::string> sets;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  Config cfg = a.config.empty() ? Config{} : Config::load(a.config);
  cfg = Config::from_json(parse_overrides(a.sets), cfg);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.seed) cfg.seed = *a.seed;
  if (!a.word_vectors.empty()) cfg.word_vectors = a.word_vectors;
  cfg.validate();
  const auto train_set = read_samples(a.train);
  const auto dev_set = a.dev.empty() ? std::vector<Sample>{} : read_samples(a.dev);
  if (train_set.empty()) throw Error("no usable training samples in " + a.train);

  Model model = Model::create(cfg, load_words_for(cfg), train_set);
  TrainOptions opts;
  opts.checkpoint_dir = a.out;
  opts.threads = thread_count();
  std::vector<EpochRecord> seen;
  std::size_t best_epoch = 0;
  double best_f1 = -1.0;
  opts.on_epoch = [&](const EpochRecord& r) {
    seen.push_back(r);
    if (r.dev.f1 > best_f1) best_f1 = r.dev.f1, best_epoch = r.epoch;
    std::fprintf(stderr, "epoch %zu  loss %.4f  dev EM %.2f  F1 %.2f\n", r.epoch, r.train_loss, r.dev.em, r.dev.f1);
    write_text(a.out + "/metrics.json", history_json(seen, best_epoch).dump(2) + "\n");
  };
  try {
    train(std::move(model), train_set, dev_set, opts);
  } catch (const NonFiniteError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    if (best_epoch) std::cerr << "last good checkpoint (epoch " << best_epoch << ") kept in " << a.out << "\n";
    return kDiverged;
  }
  return 0;
}

std::string prediction_lines(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    nlohmann::json j{{"id", p.id}, {"answer", p.text}, {"b", p.span.b}, {"e", p.span.e}, {"joint_prob", p.span.joint_prob}};
    out += j.dump() + "\n";
  }
  return out;
}

Model open_model(const std::string& dir, const std::string& word_vectors, std::optional<std::size_t> max_len) {
  Model m = load_checkpoint(dir, word_vectors.empty() ? std::nullopt : std::optional<std::string>(word_vectors));
  if (max_len) m.config.max_answer_len = *max_len;
  return m;
}

std::string grid(const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels,
                 const Tensor<float>& m) {
  std::string out;
  char buf[32];
  for (const auto& c : col_labels) out += "\t" + c;
  out += "\n";
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out += row_labels[r];
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      std::snprintf(buf, sizeof buf, "\t%.6f", m.data[r * col_labels.size() + c]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

int cmd_inspect(const std::string& model_dir, const std::string& input, const std::string& id, const std::string& what,
                const std::string& out, const std::string& word_vectors) {
  Model model = open_model(model_dir, word_vectors, std::nullopt);
  const auto samples = read_samples(input);
  const Sample* sample = nullptr;
  for (const auto& s : samples) {
    if (s.id == id) {
      sample = &s;
      break;
    }
  }
  if (!sample) {
    std::cerr << "error: no sample with id '" << id << "' in " << input << "\n";
    return kUsage;
  }
  SampleInput in = model.input(*sample);
  in.gold_b = in.gold_e = 0;
  Graph<float> g;
  auto bound = bind(g, model.params);
  auto r = forward(model.config, bound, *model.words, in);
  const auto ptoks = token_texts(sample->passage_tokens);
  const auto qtoks = token_texts(sample->question_tokens);
  std::string text;
  if (what == "A") {
    text = "# A: passage rows x question columns\n" + grid(ptoks, qtoks, r.A.value());
  } else if (what == "F") {
    if (!r.F_tilde) throw ConfigError("model was trained without multi-factor attention; no F to dump");
    text = "# F~: passage rows x passage columns, rows sum to 1\n" + grid(ptoks, ptoks, r.F_tilde->value());
  } else {
    text = "# k: question weights, sum to 1\n" + grid(qtoks, {"k"}, r.k.value());
  }
  write_text(out, text);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"AMANDA extractive question answering"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model and write the best-dev checkpoint");
  train_cmd->add_option("--config", ta.config, "JSON config file (flat keys)")->check(CLI::ExistingFile);
  train_cmd->add_option("--train", ta.train, "training JSON lines")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", ta.dev, "dev JSON lines (defaults to the training set)")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ta.out, "checkpoint directory")->required();
  train_cmd->add_option("--word-vectors", ta.word_vectors, "word vector file, overrides the config");
  train_cmd->add_option("--epochs", ta.epochs, "overrides the config");
  train_cmd->add_option("--seed", ta.seed, "overrides the config");
  train_cmd->add_option("--set", ta.sets, "config override key=value, repeatable");

  std::string model_dir, input, out, word_vectors, mode = "standard", sample_id, dump;
  std::optional<std::size_t> max_len;
  auto* predict_cmd = app.add_subcommand("predict", "decode answer spans");
  auto* eval_cmd = app.add_subcommand("eval", "score a model on a labeled file");
  auto* inspect_cmd = app.add_subcommand("inspect", "dump attention for one sample");
  for (auto* c : {predict_cmd, eval_cmd, inspect_cmd}) {
    c->add_option("--model", model_dir, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--input", input, "JSON lines")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "output file (default stdout)");
    c->add_option("--word-vectors", word_vectors, "word vector file, overrides the checkpoint config");
  }
  predict_cmd->add_option("--max-answer-len", max_len, "cap on span length in tokens (default off)");
  eval_cmd->add_option("--max-answer-len", max_len, "cap on span length in tokens (default off)");
  eval_cmd->add_option("--mode", mode, "standard (EM/F1) or searchqa (unigram accuracy / n-gram F1)")
      ->check(CLI::IsMember({"standard", "searchqa"}));
  inspect_cmd->add_option("--sample-id", sample_id, "sample to inspect")->required();
  inspect_cmd->add_option("--dump", dump, "A, F or k")->required()->check(CLI::IsMember({"A", "F", "k"}));

  SyntheticSpec spec;
  std::string task = "marker-span", synth_out, vectors_out;
  std::size_t count = 100, dim = 300;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic dataset");
  gen_cmd->add_option("--task", task, "marker-span or coref-two-sentence")->capture_default_str();
  gen_cmd->add_option("--vocab", spec.vocab_size, "filler vocabulary size")->capture_default_str();
  gen_cmd->add_option("--passage-len", spec.passage_len, "passage length in tokens")->capture_default_str();
  gen_cmd->add_option("--answer-min", spec.answer_min, "shortest answer")->capture_default_str();
  gen_cmd->add_option("--answer-max", spec.answer_max, "longest answer")->capture_default_str();
  gen_cmd->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--count", count, "number of samples")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", synth_out, "output JSON lines")->required();
  gen_cmd->add_option("--vectors-out", vectors_out, "also write random word vectors for the vocabulary");
  gen_cmd->add_option("--dim", dim, "word vector width for --vectors-out")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*predict_cmd) {
      Model m = open_model(model_dir, word_vectors, max_len);
      const auto samples = read_samples(input);
      write_text(out, prediction_lines(select_by_id(predict_all(m, samples, thread_count()))));
      return 0;
    }
    if (*eval_cmd) {
      Model m = open_model(model_dir, word_vectors, max_len);
      const auto report = evaluate(m, read_samples(input), thread_count());
      nlohmann::json j = report.to_json();
      j["mode"] = mode;
      write_text(out, j.dump(2) + "\n");
      if (mode == "searchqa") {
        std::fprintf(stderr, "unigram accuracy %s  n-gram F1 %s\n",
                     report.unigram_accuracy ? std::to_string(*report.unigram_accuracy).c_str() : "n/a",
                     report.ngram_f1 ? std::to_string(*report.ngram_f1).c_str() : "n/a");
      } else {
        std::fprintf(stderr, "EM %.2f  F1 %.2f  (%zu questions)\n", report.em, report.f1, report.count);
      }
      return 0;
    }
    if (*inspect_cmd) return cmd_inspect(model_dir, input, sample_id, dump, out, word_vectors);
    if (*gen_cmd) {
      spec.task = parse_synthetic_task(task);
      const auto samples = gen_synthetic(spec, count);
      save_dataset(synth_out, samples);
      if (!vectors_out.empty()) {
        const auto vocab = synthetic_vocabulary(spec);
        save_word_vectors(vectors_out, random_word_table(vocab, dim, spec.seed), vocab);
      }
      return 0;
    }
  } catch (const ShapeMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kShape;
  } catch (const NonFiniteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
