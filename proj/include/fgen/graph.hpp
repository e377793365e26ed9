#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fgen/tensor.hpp"

namespace fgen {

enum class Mode { Train, Eval };

// A named, differentiable leaf. `decay` marks tensors included in the L2
// penalty.
template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool decay = false;
};

// Insertion-ordered parameter storage with stable element addresses.
template <class S>
class ParameterSet {
 public:
  Parameter<S>& add(std::string name, Tensor<S> value, bool decay = false) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    index_.emplace(name, items_.size());
    Tensor<S> grad(value.shape());
    items_.push_back(Parameter<S>{std::move(name), std::move(value), std::move(grad), decay});
    return items_.back();
  }

  Parameter<S>& at(std::size_t i) { return items_.at(i); }
  const Parameter<S>& at(std::size_t i) const { return items_.at(i); }

  Parameter<S>& operator[](const std::string& name) { return items_.at(index_of(name)); }
  const Parameter<S>& operator[](const std::string& name) const { return items_.at(index_of(name)); }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return items_.size(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : items_) p.grad.fill(S{});
  }

  std::map<std::string, Tensor<S>> gradients() const {
    std::map<std::string, Tensor<S>> out;
    for (const auto& p : items_) out.emplace(p.name, p.grad);
    return out;
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::deque<Parameter<S>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <class S>
class Graph;

// Handle to a node of a Graph.
template <class S>
struct Var {
  Graph<S>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<S>& value() const { return graph->value(id); }
  const Shape& shape() const { return value().shape(); }
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tape of primitive applications. Node ids are assigned in recording order,
// which is a topological order; backward walks them in reverse. Parameter
// leaves read and accumulate directly into their Parameter's storage.
template <class S>
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<S> constant(Tensor<S> value, const char* op = "constant") {
    return push(op, std::move(value), nullptr, {}, nullptr, false);
  }

  // Differentiable leaf that is not a Parameter (used by gradient checks).
  Var<S> variable(Tensor<S> value) { return push("variable", std::move(value), nullptr, {}, nullptr, true); }

  Var<S> parameter(Parameter<S>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    auto v = push("parameter", Tensor<S>{}, &p, {}, nullptr, true);
    param_nodes_.emplace(&p, v.id);
    return v;
  }

  // Records a primitive. The node requires a gradient iff any input does;
  // `fn` is only kept in that case.
  Var<S> record(const char* op, Tensor<S> value, std::vector<std::size_t> inputs, Backward fn) {
    bool needs = false;
    for (auto i : inputs) {
      if (i >= nodes_.size()) throw std::logic_error(std::string(op) + ": operand is not an earlier node");
      needs = needs || nodes_[i].requires_grad;
    }
    return push(op, std::move(value), nullptr, std::move(inputs), needs ? std::move(fn) : nullptr, needs);
  }

  const Tensor<S>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->value : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t input(std::size_t id, std::size_t k) const { return nodes_[id].inputs[k]; }
  std::size_t input_count(std::size_t id) const { return nodes_[id].inputs.size(); }

  // Gradient accumulator of a node, allocated (zeroed) on first use.
  Tensor<S>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.param) return n.param->grad;
    if (!n.has_grad) {
      n.grad = Tensor<S>(value(id).shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  bool has_grad(std::size_t id) const { return nodes_[id].param || nodes_[id].has_grad; }

  const char* op(std::size_t id) const { return nodes_.at(id).op; }

  // Accumulates d(seed * loss)/d(leaf) into every differentiable leaf.
  void backward(Var<S> loss, S seed = S{1}) {
    if (loss.graph != this) throw std::logic_error("backward: loss belongs to a different graph");
    if (value(loss.id).size() != 1)
      throw std::invalid_argument("backward: loss must be a scalar, got " + shape_str(value(loss.id).shape()));
    if (!nodes_[loss.id].requires_grad) return;
    grad(loss.id)[0] += seed;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.has_grad) n.backward(*this, i);
    }
  }

  void clear() {
    nodes_.clear();
    param_nodes_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op;
    Tensor<S> value;
    Tensor<S> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter<S>* param = nullptr;
    std::vector<std::size_t> inputs;
    Backward backward;
  };

  Var<S> push(const char* op, Tensor<S> value, Parameter<S>* p, std::vector<std::size_t> inputs,
              Backward fn, bool needs_grad) {
    const std::size_t id = nodes_.size();
    if (!p && !value.all_finite())
      throw NonFiniteError("non-finite value produced by node #" + std::to_string(id) + " (" + op + ")");
    nodes_.push_back(Node{op, std::move(value), {}, false, needs_grad, p, std::move(inputs), std::move(fn)});
    return {this, id};
  }

  std::deque<Node> nodes_;  // stable references across push_back
  std::unordered_map<const Parameter<S>*, std::size_t> param_nodes_;
};

}  // namespace fgen
