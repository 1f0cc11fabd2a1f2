#include "nn/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "common/error.hpp"

namespace lcnf::nn {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s + "]";
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

namespace {

std::shared_ptr<Node> new_node(Shape shape, std::vector<double> values, Role role) {
  if (numel(shape) != values.size())
    throw ShapeError("tensor shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) + " values");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->role = role;
  n->requires_grad = role == Role::Parameter;
  return n;
}

void check_finite(const Node& n) {
  for (double v : n.value)
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor " + shape_str(n.shape));
}

thread_local bool g_no_grad = false;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  auto n = new_node(std::move(shape), std::move(values), Role::Parameter);
  check_finite(*n);
  n->ensure_grad();
  return Tensor(std::move(n));
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_node(std::move(shape), std::move(values), Role::Constant));
}

Tensor Tensor::zeros(Shape shape, Role role) {
  const std::size_t n = numel(shape);
  if (role == Role::Parameter) return parameter(std::move(shape), std::vector<double>(n, 0.0));
  return Tensor(new_node(std::move(shape), std::vector<double>(n, 0.0), role));
}

std::span<const double> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn) {
  auto n = new_node(std::move(shape), std::move(values), Role::Activation);
  check_finite(*n);
  if (!g_no_grad)
    for (const auto& p : parents)
      if (p.requires_grad()) n->requires_grad = true;
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.ptr());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
  if (!loss) throw ShapeError("backward on an empty tensor");
  if (loss.size() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order)
    if (n->role != Role::Parameter) n->grad.assign(n->value.size(), 0.0);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

void zero_grad(std::span<Tensor> params) {
  for (auto& p : params) {
    auto g = p.mutable_grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

}  // namespace lcnf::nn
