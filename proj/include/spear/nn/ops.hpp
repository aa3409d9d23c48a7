#pragma once

#include <vector>

#include "spear/nn/tensor.hpp"

namespace spear::nn {

/// x: (B, Cin, L), w: (Cout, Cin, K), b: (Cout, 1, 1) or undefined.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding);

/// x: (B, Cin, L), w: (Cin, Cout, K), b: (Cout, 1, 1) or undefined.
/// Output length (L - 1) * stride - 2 * padding + K.
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Per-channel batch normalization over (batch, length). In training mode the
/// batch statistics are used and the running statistics are updated with
/// `momentum` (unbiased variance); otherwise the running statistics are used.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, std::vector<double>& running_mean,
                  std::vector<double>& running_var, bool training, double momentum, double eps);

/// sqrt(mean((pred - target)^2)) over every element. The gradient at an exact
/// match is taken as 0.
Tensor rmse_loss(const Tensor& pred, const Tensor& target);

Tensor sum(const Tensor& x);

}  // namespace spear::nn
