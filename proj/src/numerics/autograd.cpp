#include "vafusion/numerics/autograd.hpp"

#include <unordered_set>

#include "vafusion/errors.hpp"

namespace vaf {

Parameter& ParameterSet::add(std::string name, NumArray init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  NumArray grad(init.shape(), 0.0);
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterSet::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParameterSet::at(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter: " + std::string(name));
}

const Parameter& ParameterSet::at(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter: " + std::string(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

NumArray& Node::grad_buffer() {
  if (grad.size() != val().size()) grad = NumArray(val().shape(), 0.0);
  return grad;
}

Var Var::constant(NumArray v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return Var(std::move(n));
}

Var Var::input(NumArray v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return Var(std::move(n));
}

Var make_result(NumArray value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (auto& in : inputs) n->inputs.push_back(in.ptr());
    n->backward = std::move(backward_fn);
  }
  return Var(std::move(n));
}

void backward(const Var& root) { backward(root, NumArray(root.value().shape(), 1.0)); }

void backward(const Var& root, const NumArray& seed) {
  if (!root.requires_grad()) return;
  if (!seed.same_shape(root.value())) throw ShapeError("backward: seed shape mismatch");

  // Iterative post-order DFS gives a topological order without recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n != root.node() && !n->inputs.empty()) n->grad = NumArray();
  }
  NumArray& g = root.node()->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    if (n->backward) n->backward(*n);
    if (n->sink) {
      NumArray& pg = n->sink->grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n->grad[i];
    }
  }
}

Var Context::param(Parameter& p) const {
  auto n = std::make_shared<Node>();
  n->param = &p;
  if (record_) {
    n->requires_grad = true;
    n->sink = &p;
  }
  return Var(std::move(n));
}

Var Context::param(const Parameter& p) const {
  auto n = std::make_shared<Node>();
  n->param = &p;
  return Var(std::move(n));
}

}  // namespace vaf
