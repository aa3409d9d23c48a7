#include "spear/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "spear/nn/ops.hpp"

namespace spear::nn {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> data(shape.numel());
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(data), true);
}

}  // namespace

Tensor Conv1dLayer::forward(const Tensor& x) const { return conv1d(x, weight, bias, stride, padding); }

Tensor ConvTranspose1dLayer::forward(const Tensor& x) const {
  return conv_transpose1d(x, weight, bias, stride, padding);
}

Tensor BatchNorm1dLayer::forward(const Tensor& x, Mode mode) {
  return batch_norm(x, gamma, beta, running_mean, running_var, mode == Mode::Train, momentum, eps);
}

Tensor BatchNorm1dLayer::forward_eval(const Tensor& x) const {
  auto mean = running_mean;
  auto var = running_var;
  return batch_norm(x, gamma, beta, mean, var, false, momentum, eps);
}

Conv1dLayer make_conv1d(int in_ch, int out_ch, int kernel, int stride, int padding, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in_ch * kernel));
  Conv1dLayer layer;
  layer.weight = uniform_tensor(Shape{out_ch, in_ch, kernel}, bound, rng);
  layer.bias = Tensor::zeros(Shape{out_ch, 1, 1}, true);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

ConvTranspose1dLayer make_conv_transpose1d(int in_ch, int out_ch, int kernel, int stride, int padding, Rng& rng) {
  const double fan_in = std::max(1.0, static_cast<double>(in_ch * kernel) / static_cast<double>(stride));
  ConvTranspose1dLayer layer;
  layer.weight = uniform_tensor(Shape{in_ch, out_ch, kernel}, std::sqrt(6.0 / fan_in), rng);
  layer.bias = Tensor::zeros(Shape{out_ch, 1, 1}, true);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

BatchNorm1dLayer make_batch_norm1d(int channels) {
  BatchNorm1dLayer bn;
  bn.gamma = Tensor::from(Shape{channels, 1, 1}, std::vector<double>(static_cast<std::size_t>(channels), 1.0), true);
  bn.beta = Tensor::zeros(Shape{channels, 1, 1}, true);
  bn.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
  bn.running_var.assign(static_cast<std::size_t>(channels), 1.0);
  return bn;
}

Tensor clone_parameter(const Tensor& t) {
  if (!t.defined()) return {};
  return Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), t.requires_grad());
}

}  // namespace spear::nn
