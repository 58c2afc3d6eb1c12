#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "amanda/tensor.hpp"

namespace amanda {

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return value().shape; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t size() const { return value().size(); }
  const std::vector<T>& grad() const { return graph->grad(id); }
};

/// Tape of operations recorded in topological order. Nodes are appended as ops
/// run, so every input id precedes its consumer. A graph is single-owner.
template <typename T>
class Graph {
 public:
  /// Receives the node id and its accumulated output gradient and pushes it to inputs.
  using Backward = std::function<void(Graph&, std::size_t self, const std::vector<T>& out_grad)>;

  struct Node {
    const char* op = "";
    Tensor<T> value;
    std::vector<T> grad;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
    Tensor<T>* bound = nullptr;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf holding a copy of `t`; never receives gradient.
  Var<T> constant(Tensor<T> t) {
    t.requires_grad = false;
    t.grad.clear();
    return append("constant", std::move(t), {}, false, {});
  }

  /// Leaf bound to an external tensor. After backward, the tensor's grad holds
  /// d(root)/d(tensor) accumulated onto whatever it held before (zero if absent).
  Var<T> param(Tensor<T>& t) {
    Tensor<T> copy(t.shape, t.data, t.requires_grad);
    Var<T> v = append("param", std::move(copy), {}, t.requires_grad, {});
    nodes_[v.id].bound = &t;
    return v;
  }

  /// Records the result of an op. `backward` is dropped when no input needs grad.
  Var<T> record(const char* op, Tensor<T> value, std::vector<std::size_t> inputs, Backward backward);

  void backward(Var<T> root);

  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  const std::vector<T>& grad(std::size_t id) const { return nodes_[id].grad; }
  std::vector<T>& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }

 private:
  Var<T> append(const char* op, Tensor<T> value, std::vector<std::size_t> inputs, bool needs_grad,
                Backward backward);

  std::deque<Node> nodes_;  // stable addresses: values stay valid as the tape grows
};

/// Adds `g` into the gradient buffer of node `id` when it participates in backward.
template <typename T>
inline void accumulate(Graph<T>& graph, std::size_t id, const std::vector<T>& g) {
  if (!graph.needs_grad(id)) return;
  auto& dst = graph.grad_mut(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace amanda
