#include "spear/nn/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

namespace spear::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from(shape, std::vector<double>(shape.numel(), 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.batch < 1 || shape.channels < 1 || shape.length < 1) throw std::invalid_argument("tensor: empty dimension");
  if (data.size() != shape.numel()) throw std::invalid_argument("tensor: data length does not match shape");
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

std::span<double> Tensor::grad() { return node_->grad_buffer(); }

std::span<const double> Tensor::grad() const { return node_->grad_buffer(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("tensor: item() on a non-scalar");
  return node_->data[0];
}

Tensor Tensor::detach() const { return from(shape(), node_->data, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  if (!loss.has_grad_fn()) throw std::logic_error("backward: no recorded forward pass for this tensor");

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->backward_fn && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    node->backward_fn(*node);
  }
  for (detail::Node* node : order) {
    node->backward_fn = nullptr;
    node->inputs.clear();
  }
}

}  // namespace spear::nn
