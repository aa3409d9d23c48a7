#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spear/nn/tensor.hpp"

namespace spear::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every parameter from its accumulated
/// gradient. Moment buffers are created on the first call; the parameter
/// list must keep the same order afterwards. Parameters without a gradient
/// are treated as having a zero gradient.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace spear::nn
