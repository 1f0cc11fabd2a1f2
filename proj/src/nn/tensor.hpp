#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lcnf::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class Role { Parameter, Activation, Constant };

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily by backward()
  Role role = Role::Activation;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad.
  std::function<void(Node&)> backward_fn;

  void ensure_grad();
};

/// Handle to a value in the dynamic autodiff graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, Role role = Role::Constant);

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  bool requires_grad() const { return node_->requires_grad; }
  Role role() const { return node_->role; }

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  /// Gradient; zeros if backward never reached this tensor.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();

  double item() const;
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

/// Creates the output node of an op; `requires_grad` is inherited from parents.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar. Parameter gradients accumulate across
/// calls; intermediate gradients are reset per call.
void backward(const Tensor& loss);

void zero_grad(std::span<Tensor> params);

/// While alive on this thread, ops record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace lcnf::nn
