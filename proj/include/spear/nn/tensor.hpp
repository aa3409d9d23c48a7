#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace spear::nn {

/// (batch, channels, length). Parameters reuse the same triple, e.g. conv
/// weights are (out_ch, in_ch, kernel) and biases (channels, 1, 1).
struct Shape {
  int batch = 1;
  int channels = 1;
  int length = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(batch) * static_cast<std::size_t>(channels) * static_cast<std::size_t>(length);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor handle with shared storage and an optional
/// gradient slot. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->data.size(); }

  std::span<double> data() { return node_->data; }
  std::span<const double> data() const { return node_->data; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient; all zeros if nothing has been accumulated yet.
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad_fn() const { return static_cast<bool>(node_->backward_fn); }
  double item() const;

  /// Copy of the values with no autograd history.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While alive on a thread, ops on that thread record no backward graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse-mode pass from a scalar: accumulates d(loss)/d(t) into every
/// reachable tensor that requires grad, then releases the graph. Throws if
/// the loss has no recorded forward pass.
void backward(const Tensor& loss);

}  // namespace spear::nn
