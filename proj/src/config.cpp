#include "amanda/config.hpp"

#include <fstream>

#include "amanda/errors.hpp"

namespace amanda {

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kMax: return "max";
    case Aggregation::kMean: return "mean";
    case Aggregation::kSum: return "sum";
  }
  return "max";
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "mean") return Aggregation::kMean;
  if (s == "sum") return Aggregation::kSum;
  throw ConfigError("unknown aggregation kind '" + s + "' (expected max, mean or sum)");
}

void Config::validate() const {
  if (word_dim == 0 || hidden == 0) throw ConfigError("word_dim and hidden must be positive");
  if (char_emb && (char_dim == 0 || char_filters == 0 || char_width == 0)) {
    throw ConfigError("char_dim, char_filters and char_width must be positive");
  }
  if (factors < 1) throw ConfigError("factors must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
}

nlohmann::json Config::to_json() const {
  return {
      {"word_dim", word_dim},
      {"char_dim", char_dim},
      {"char_filters", char_filters},
      {"char_width", char_width},
      {"hidden", hidden},
      {"dropout", dropout},
      {"factors", factors},
      {"batch_size", batch_size},
      {"learning_rate", learning_rate},
      {"clip_norm", clip_norm},
      {"epochs", epochs},
      {"seed", seed},
      {"multifactor", multifactor},
      {"q_ma", q_ma},
      {"q_f", q_f},
      {"char_emb", char_emb},
      {"qdep_encoding", qdep_encoding},
      {"second_pointer_lstm", second_pointer_lstm},
      {"aggregation", to_string(aggregation)},
      {"qtype_first_two", qtype_first_two},
      {"max_answer_len", max_answer_len},
      {"word_vectors", word_vectors},
  };
}

Config Config::from_json(const nlohmann::json& j) { return from_json(j, Config{}); }

Config Config::from_json(const nlohmann::json& j, Config c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "word_dim") c.word_dim = v.get<std::size_t>();
      else if (key == "char_dim") c.char_dim = v.get<std::size_t>();
      else if (key == "char_filters") c.char_filters = v.get<std::size_t>();
      else if (key == "char_width") c.char_width = v.get<std::size_t>();
      else if (key == "hidden") c.hidden = v.get<std::size_t>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "factors") c.factors = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "clip_norm") c.clip_norm = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "multifactor") c.multifactor = v.get<bool>();
      else if (key == "q_ma") c.q_ma = v.get<bool>();
      else if (key == "q_f") c.q_f = v.get<bool>();
      else if (key == "char_emb") c.char_emb = v.get<bool>();
      else if (key == "qdep_encoding") c.qdep_encoding = v.get<bool>();
      else if (key == "second_pointer_lstm") c.second_pointer_lstm = v.get<bool>();
      else if (key == "aggregation") c.aggregation = parse_aggregation(v.get<std::string>());
      else if (key == "qtype_first_two") c.qtype_first_two = v.get<bool>();
      else if (key == "max_answer_len") c.max_answer_len = v.get<std::size_t>();
      else if (key == "word_vectors") c.word_vectors = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace amanda
