#pragma once

#include <vector>

#include "spear/nn/tensor.hpp"
#include "spear/rng.hpp"

namespace spear::nn {

enum class Mode { Train, Eval };

struct Conv1dLayer {
  Tensor weight;  // (out_ch, in_ch, kernel)
  Tensor bias;    // (out_ch, 1, 1)
  int stride = 1;
  int padding = 0;

  int in_ch() const { return weight.shape().channels; }
  int out_ch() const { return weight.shape().batch; }
  int kernel() const { return weight.shape().length; }
  Tensor forward(const Tensor& x) const;
};

struct ConvTranspose1dLayer {
  Tensor weight;  // (in_ch, out_ch, kernel)
  Tensor bias;    // (out_ch, 1, 1)
  int stride = 1;
  int padding = 0;

  int in_ch() const { return weight.shape().batch; }
  int out_ch() const { return weight.shape().channels; }
  int kernel() const { return weight.shape().length; }
  Tensor forward(const Tensor& x) const;
};

struct BatchNorm1dLayer {
  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  int channels() const { return static_cast<int>(running_mean.size()); }
  /// Train mode uses batch statistics and updates the running ones.
  Tensor forward(const Tensor& x, Mode mode);
  /// Eval mode only; never touches the running statistics.
  Tensor forward_eval(const Tensor& x) const;
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero bias.
Conv1dLayer make_conv1d(int in_ch, int out_ch, int kernel, int stride, int padding, Rng& rng);
/// fan_in counts the inputs reaching one output sample: in_ch * kernel / stride.
ConvTranspose1dLayer make_conv_transpose1d(int in_ch, int out_ch, int kernel, int stride, int padding, Rng& rng);
/// gamma = 1, beta = 0, running mean 0 and variance 1.
BatchNorm1dLayer make_batch_norm1d(int channels);

/// Deep copy of a tensor's values (no shared storage, no history).
Tensor clone_parameter(const Tensor& t);

}  // namespace spear::nn
