#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "amanda/config.hpp"
#include "amanda/graph.hpp"

namespace amanda {

/// Named learnable tensors in a fixed insertion order.
template <typename T>
class ModelParams {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw Error("duplicate parameter " + name);
    t.requires_grad = true;
    index_[name] = items_.size();
    items_.push_back({name, std::move(t)});
    return items_.back().second;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor<T>& at(const std::string& name) { return items_.at(lookup(name)).second; }
  const Tensor<T>& at(const std::string& name) const { return items_.at(lookup(name)).second; }

  std::vector<std::pair<std::string, Tensor<T>>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }

  /// Parameter name -> shape.
  std::map<std::string, Shape> census() const {
    std::map<std::string, Shape> out;
    for (const auto& [n, t] : items_) out[n] = t.shape;
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& [n, t] : items_) out.add(n, t.template cast<U>());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter " + name);
    return it->second;
  }

  std::vector<std::pair<std::string, Tensor<T>>> items_;
  std::map<std::string, std::size_t> index_;
};

/// Graph leaves for every parameter, addressable by name. Entries may be
/// replaced before a forward pass (gradient checks substitute one tensor).
template <typename T>
struct BoundParams {
  std::map<std::string, Var<T>> vars;

  Var<T> operator[](const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw Error("parameter " + name + " not bound");
    return it->second;
  }
  bool has(const std::string& name) const { return vars.count(name) != 0; }
};

template <typename T>
BoundParams<T> bind(Graph<T>& g, ModelParams<T>& params) {
  BoundParams<T> b;
  for (auto& [name, t] : params.items()) b.vars.emplace(name, g.param(t));
  return b;
}

/// Allocates every parameter the configured architecture uses, randomly
/// initialized from `seed`. `char_vocab` counts rows of the character table.
ModelParams<float> init_params(const Config& cfg, std::size_t char_vocab, std::uint64_t seed);

/// Shapes `init_params` would produce, without allocating.
std::map<std::string, Shape> expected_census(const Config& cfg, std::size_t char_vocab);

}  // namespace amanda
