#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vafusion/numerics/array.hpp"

namespace vaf {

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  NumArray value;
  NumArray grad;
};

/// Owns a model's parameters. References stay valid for the set's lifetime.
class ParameterSet {
 public:
  Parameter& add(std::string name, NumArray init);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in a recorded computation. Nodes form a DAG through `inputs`;
/// `backward` reads this node's grad and accumulates into its inputs.
struct Node {
  NumArray value;
  NumArray grad;
  const Parameter* param = nullptr;  // value borrowed from a parameter
  Parameter* sink = nullptr;         // gradient accumulated into this parameter
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  const NumArray& val() const { return param ? param->value : value; }
  NumArray& grad_buffer();
};

/// Handle to a node. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  static Var constant(NumArray v);
  /// A leaf whose gradient is kept after backward (used for input sensitivities).
  static Var input(NumArray v);

  const NumArray& value() const { return node_->val(); }
  const NumArray& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

/// Builds an op result. When no input requires a gradient the node is recorded
/// as a constant and `backward` is dropped.
Var make_result(NumArray value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Reverse-mode sweep from a scalar root (seed 1).
void backward(const Var& root);
void backward(const Var& root, const NumArray& seed);

/// Evaluation mode, gradient recording and the dropout stream for one forward pass.
///
/// Dropout masks come from a counter-based hash of (seed, call index, element),
/// so a pass is reproducible from its seed alone.
class Context {
 public:
  static Context inference() { return Context(false, false, 0); }
  static Context eval_with_grad() { return Context(false, true, 0); }
  static Context training(std::uint64_t seed, bool record = true) { return Context(true, record, seed); }

  bool training() const { return train_; }
  bool recording() const { return record_; }
  std::uint64_t seed() const { return seed_; }

  Var param(Parameter& p) const;
  Var param(const Parameter& p) const;

  /// Fresh stream identifier for one dropout call.
  std::uint64_t next_stream() { return counter_++; }

 private:
  Context(bool train, bool record, std::uint64_t seed) : train_(train), record_(record), seed_(seed) {}
  bool train_;
  bool record_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace vaf
