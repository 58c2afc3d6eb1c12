#include "amanda/embed.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace amanda {

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

bool WordTable::insert(const std::string& token, const std::vector<float>& vec) {
  if (vec.size() != dim_) throw DimensionError("word vector for '" + token + "' has wrong dimension");
  if (index_.count(token)) return false;
  index_.emplace(token, size());
  values_.insert(values_.end(), vec.begin(), vec.end());
  return true;
}

std::optional<std::size_t> WordTable::find(std::string_view token) const {
  if (auto it = index_.find(to_lower_ascii(token)); it != index_.end()) return it->second;
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

WordTable load_word_vectors(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read word vectors " + path);
  WordTable table(dim);
  std::string line;
  std::size_t lineno = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = line.find(' ');
    if (pos == std::string::npos || pos == 0) throw ParseError("expected a token followed by values", lineno);
    const std::string token = line.substr(0, pos);
    vec.clear();
    const char* p = line.data() + pos;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float v = 0.0f;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ')) {
        throw ParseError("unparsable number in vector for '" + token + "'", lineno);
      }
      vec.push_back(v);
      p = next;
    }
    if (vec.size() != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values, found " + std::to_string(vec.size()), lineno);
    }
    table.insert(token, vec);
  }
  return table;
}

template <typename T>
Tensor<T> embed_word(const WordTable& table, std::string_view token) {
  auto out = Tensor<T>::zeros({table.dim()});
  if (auto r = table.find(token)) {
    const float* src = table.row(*r);
    for (std::size_t j = 0; j < table.dim(); ++j) out.data[j] = static_cast<T>(src[j]);
  }
  return out;
}

CharVocab::CharVocab() : chars_{"<pad>", "<unk>"} {}

void CharVocab::add_word(std::string_view word) {
  for (auto& ch : utf8_chars(word)) {
    if (!index_.count(ch)) {
      index_.emplace(ch, chars_.size());
      chars_.push_back(ch);
    }
  }
}

std::vector<std::size_t> CharVocab::ids(std::string_view word) const {
  std::vector<std::size_t> out;
  for (auto& ch : utf8_chars(word)) {
    auto it = index_.find(ch);
    out.push_back(it == index_.end() ? kUnknown : it->second);
  }
  return out;
}

CharVocab CharVocab::from_chars(const std::vector<std::string>& chars) {
  if (chars.size() < 2) throw Error("character vocabulary must hold the pad and unknown rows");
  CharVocab v;
  for (std::size_t i = 2; i < chars.size(); ++i) {
    v.index_.emplace(chars[i], v.chars_.size());
    v.chars_.push_back(chars[i]);
  }
  return v;
}

template <typename T>
Var<T> char_cnn_embed(const CharCnnVars<T>& cnn, const std::vector<std::vector<std::size_t>>& words) {
  std::vector<std::size_t> flat;
  std::vector<WordSpan> spans;
  std::vector<std::size_t> positions;
  for (const auto& w : words) {
    if (w.empty()) throw DimensionError("char_cnn_embed: empty word");
    spans.push_back({flat.size(), w.size()});
    positions.push_back(window_count(w.size(), cnn.width));
    flat.insert(flat.end(), w.begin(), w.end());
  }
  const auto& fshape = cnn.filters.shape();
  if (fshape.size() != 3 || fshape[0] != cnn.width || fshape[1] != cnn.table.cols()) {
    throw DimensionError("char_cnn_embed: filters " + shape_str(fshape) + " do not match table " +
                         shape_str(cnn.table.shape()) + " and width " + std::to_string(cnn.width));
  }
  const std::size_t n_f = fshape[2];
  Var<T> chars = gather_rows(cnn.table, flat);
  Var<T> windows = char_windows(chars, spans, cnn.width);
  Var<T> conv = add(matmul(windows, reshape(cnn.filters, {fshape[0] * fshape[1], n_f})), cnn.bias);
  return segment_max_rows(conv, positions);
}

template <typename T>
Tensor<T> word_rows(const WordTable& table, const std::vector<long>& ids) {
  auto out = Tensor<T>::zeros({ids.size(), table.dim()});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0) continue;
    const float* src = table.row(static_cast<std::size_t>(ids[t]));
    for (std::size_t j = 0; j < table.dim(); ++j) out.data[t * table.dim() + j] = static_cast<T>(src[j]);
  }
  return out;
}

template <typename T>
Var<T> embed_sequence(Graph<T>& g, const WordTable& table, const CharCnnVars<T>* cnn, const std::vector<long>& word_ids,
                      const std::vector<std::vector<std::size_t>>& char_ids) {
  if (word_ids.empty()) throw DimensionError("embed_sequence: empty sequence");
  Var<T> words = g.constant(word_rows<T>(table, word_ids));
  if (!cnn) return words;
  if (char_ids.size() != word_ids.size()) throw DimensionError("embed_sequence: char ids do not cover every token");
  return concat_last(words, char_cnn_embed(*cnn, char_ids));
}

#define AMANDA_INSTANTIATE_EMBED(T)                                                                       \
  template Tensor<T> embed_word<T>(const WordTable&, std::string_view);                                   \
  template Var<T> char_cnn_embed(const CharCnnVars<T>&, const std::vector<std::vector<std::size_t>>&);     \
  template Tensor<T> word_rows<T>(const WordTable&, const std::vector<long>&);                            \
  template Var<T> embed_sequence(Graph<T>&, const WordTable&, const CharCnnVars<T>*, const std::vector<long>&, \
                                 const std::vector<std::vector<std::size_t>>&);

AMANDA_INSTANTIATE_EMBED(float)
AMANDA_INSTANTIATE_EMBED(double)

}  // namespace amanda
