#include "amanda/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace amanda {
namespace {

static_assert(sizeof(float) == 4);

void put_le(std::string& out, float x) {
  std::uint32_t u;
  std::memcpy(&u, &x, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

float get_le(const char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float x;
  std::memcpy(&x, &u, 4);
  return x;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Model& model) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  std::string blob;
  for (const auto& [name, t] : model.params.items()) {
    manifest.push_back({{"name", name}, {"shape", t.shape}, {"offset", blob.size()}});
    for (float x : t.data) put_le(blob, x);
  }
  nlohmann::json j{{"config", model.config.to_json()},
                   {"chars", model.chars.chars()},
                   {"params", manifest},
                   {"dtype", "float32-le"}};
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "model.json");
    if (!out) throw Error("cannot write checkpoint manifest in " + dir);
    out << j.dump(2) << '\n';
  }
  std::ofstream out(base / "model.bin", std::ios::binary);
  if (!out) throw Error("cannot write checkpoint blob in " + dir);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

std::shared_ptr<const WordTable> load_words_for(const Config& cfg) {
  if (cfg.word_vectors.empty()) return std::make_shared<const WordTable>(cfg.word_dim);
  return std::make_shared<const WordTable>(load_word_vectors(cfg.word_vectors, cfg.word_dim));
}

Model load_checkpoint(const std::string& dir, const std::optional<std::string>& word_vectors) {
  const std::filesystem::path base(dir);
  std::ifstream jin(base / "model.json");
  if (!jin) throw Error("cannot read checkpoint manifest in " + dir);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(jin);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint manifest: ") + e.what());
  }
  std::ifstream bin(base / "model.bin", std::ios::binary);
  if (!bin) throw Error("cannot read checkpoint blob in " + dir);
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  Model m;
  try {
    m.config = Config::from_json(j.at("config"));
    if (word_vectors) m.config.word_vectors = *word_vectors;
    m.chars = CharVocab::from_chars(j.at("chars").get<std::vector<std::string>>());
    const auto expected = expected_census(m.config, m.chars.size());
    const auto& entries = j.at("params");
    if (entries.size() != expected.size()) {
      throw ShapeMismatchError("checkpoint holds " + std::to_string(entries.size()) + " tensors, config implies " +
                               std::to_string(expected.size()));
    }
    for (const auto& e : entries) {
      const auto name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      auto it = expected.find(name);
      if (it == expected.end()) throw ShapeMismatchError("checkpoint tensor " + name + " not used by config");
      if (it->second != shape) {
        throw ShapeMismatchError("tensor " + name + " has shape " + shape_str(shape) + ", config implies " +
                                 shape_str(it->second));
      }
      const std::size_t n = shape_size(shape);
      if (offset + 4 * n > blob.size()) throw ShapeMismatchError("checkpoint blob too short for " + name);
      Tensor<float> t = Tensor<float>::zeros(shape);
      for (std::size_t i = 0; i < n; ++i) t.data[i] = get_le(blob.data() + offset + 4 * i);
      m.params.add(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint manifest: ") + e.what());
  }
  m.words = load_words_for(m.config);
  return m;
}

}  // namespace amanda
