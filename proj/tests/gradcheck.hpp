#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spear/nn/kernels.hpp"
#include "spear/nn/ops.hpp"
#include "spear/nn/tensor.hpp"
#include "spear/rng.hpp"

namespace spear::testing {

/// Largest relative gap between analytic gradients and central differences
/// over every element of every input.
inline double max_grad_error(std::vector<nn::Tensor> inputs, const std::function<nn::Tensor()>& loss_fn,
                             double h = 1e-4) {
  for (auto& t : inputs) t.zero_grad();
  nn::backward(loss_fn());
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      double plus = 0.0, minus = 0.0;
      {
        nn::NoGradGuard guard;
        data[i] = saved + h;
        plus = loss_fn().item();
        data[i] = saved - h;
        minus = loss_fn().item();
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
  }
  return worst;
}

inline nn::Tensor random_tensor(Rng& rng, nn::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return nn::Tensor::from(shape, std::move(v), true);
}

/// Values bounded away from zero so ReLU kinks stay out of the stencil.
inline nn::Tensor kink_free_tensor(Rng& rng, nn::Shape shape) {
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.05, 1.0);
  return nn::Tensor::from(shape, std::move(v), true);
}

struct LayerGradCase {
  std::string layer;
  std::function<double(Rng&)> trial;  // returns the max relative error of one randomized trial
};

/// One randomized gradient-check trial per call for every layer type. Each
/// layer is followed by an RMSE against a random target so the loss is a
/// generic scalar function of the layer output.
inline std::vector<LayerGradCase> layer_grad_cases() {
  using nn::Shape;
  using nn::Tensor;
  auto pick = [](Rng& rng, int lo, int hi) { return static_cast<int>(rng.uniform_int(lo, hi)); };
  std::vector<LayerGradCase> cases;

  cases.push_back({"conv1d", [pick](Rng& rng) {
                     const int b = pick(rng, 1, 3), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
                     const int k = pick(rng, 1, 5), s = pick(rng, 1, 3), p = pick(rng, 0, k - 1);
                     const int len = pick(rng, std::max(k, 4), 12);
                     const Tensor x = random_tensor(rng, {b, cin, len});
                     const Tensor w = random_tensor(rng, {cout, cin, k});
                     const Tensor bias = random_tensor(rng, {cout, 1, 1});
                     const int lout = nn::conv_out_len(len, k, s, p);
                     const Tensor target = random_tensor(rng, {b, cout, lout});
                     return max_grad_error({x, w, bias}, [=] { return nn::rmse_loss(nn::conv1d(x, w, bias, s, p), target); });
                   }});

  cases.push_back({"conv_transpose1d", [pick](Rng& rng) {
                     const int b = pick(rng, 1, 3), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
                     const int k = pick(rng, 1, 6), s = pick(rng, 1, 3);
                     const int p = pick(rng, 0, (k - 1) / 2);
                     const int len = pick(rng, 3, 8);
                     const Tensor x = random_tensor(rng, {b, cin, len});
                     const Tensor w = random_tensor(rng, {cin, cout, k});
                     const Tensor bias = random_tensor(rng, {cout, 1, 1});
                     const int lout = nn::conv_transpose_out_len(len, k, s, p);
                     const Tensor target = random_tensor(rng, {b, cout, lout});
                     return max_grad_error({x, w, bias},
                                           [=] { return nn::rmse_loss(nn::conv_transpose1d(x, w, bias, s, p), target); });
                   }});

  cases.push_back({"batchnorm", [pick](Rng& rng) {
                     const int b = pick(rng, 2, 3), c = pick(rng, 1, 3), len = pick(rng, 3, 8);
                     const Tensor x = random_tensor(rng, {b, c, len});
                     const Tensor gamma = random_tensor(rng, {c, 1, 1}, 0.5, 1.5);
                     const Tensor beta = random_tensor(rng, {c, 1, 1});
                     const Tensor target = random_tensor(rng, {b, c, len});
                     auto mean = std::make_shared<std::vector<double>>(static_cast<std::size_t>(c), 0.0);
                     auto var = std::make_shared<std::vector<double>>(static_cast<std::size_t>(c), 1.0);
                     return max_grad_error({x, gamma, beta}, [=] {
                       return nn::rmse_loss(nn::batch_norm(x, gamma, beta, *mean, *var, true, 0.1, 1e-5), target);
                     });
                   }});

  cases.push_back({"sigmoid", [pick](Rng& rng) {
                     const Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 2, 10)};
                     const Tensor x = random_tensor(rng, s, -3.0, 3.0);
                     const Tensor target = random_tensor(rng, s, 0.0, 1.0);
                     return max_grad_error({x}, [=] { return nn::rmse_loss(nn::sigmoid(x), target); });
                   }});

  cases.push_back({"relu", [pick](Rng& rng) {
                     const Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 2, 10)};
                     const Tensor x = kink_free_tensor(rng, s);
                     const Tensor target = random_tensor(rng, s);
                     return max_grad_error({x}, [=] { return nn::rmse_loss(nn::relu(x), target); });
                   }});

  cases.push_back({"rmse_loss", [pick](Rng& rng) {
                     const Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 2, 10)};
                     const Tensor pred = random_tensor(rng, s);
                     const Tensor target = random_tensor(rng, s);
                     return max_grad_error({pred, target}, [=] { return nn::rmse_loss(pred, target); });
                   }});
  return cases;
}

}  // namespace spear::testing
