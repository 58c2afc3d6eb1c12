#include "amanda/graph.hpp"

#include <cmath>

namespace amanda {

template <typename T>
Var<T> Graph<T>::append(const char* op, Tensor<T> value, std::vector<std::size_t> inputs, bool needs_grad,
                        Backward backward) {
  for (const T& x : value.data) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.inputs = std::move(inputs);
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::record(const char* op, Tensor<T> value, std::vector<std::size_t> inputs, Backward backward) {
  bool needs = false;
  for (std::size_t id : inputs) needs = needs || nodes_[id].needs_grad;
  return append(op, std::move(value), std::move(inputs), needs, std::move(backward));
}

template <typename T>
void Graph<T>::backward(Var<T> root) {
  if (root.graph != this) throw Error("backward: root belongs to another graph");
  if (nodes_[root.id].value.size() != 1) {
    throw DimensionError("backward: root must be scalar, got " + shape_str(nodes_[root.id].value.shape));
  }
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad.assign(n.value.size(), T(0));
  }
  if (nodes_[root.id].needs_grad) nodes_[root.id].grad[0] = T(1);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) n.backward(*this, i, n.grad);
  }
  for (auto& n : nodes_) {
    if (!n.bound || !n.bound->requires_grad) continue;
    Tensor<T>& p = *n.bound;
    if (p.grad.size() != p.data.size()) p.grad.assign(p.data.size(), T(0));
    for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad[k] += n.grad[k];
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace amanda
