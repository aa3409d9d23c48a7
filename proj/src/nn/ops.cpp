#include "spear/nn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spear/nn/kernels.hpp"

namespace spear::nn {

namespace {

bool records(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> inputs,
                   std::function<void(detail::Node&)> backward_fn) {
  Tensor out = Tensor::from(shape, std::move(data));
  if (records(inputs)) {
    auto& node = *out.node();
    node.requires_grad = true;
    for (const Tensor* t : inputs) {
      if (t->defined()) node.inputs.push_back(t->node());
    }
    node.backward_fn = std::move(backward_fn);
  }
  return out;
}

std::string shape_str(const Shape& s) {
  return "(" + std::to_string(s.batch) + ", " + std::to_string(s.channels) + ", " + std::to_string(s.length) + ")";
}

void check_bias(const Tensor& b, int channels) {
  if (b.defined() && b.numel() != static_cast<std::size_t>(channels)) {
    throw std::invalid_argument("bias has " + std::to_string(b.numel()) + " entries, expected " + std::to_string(channels));
  }
}

std::span<const double> bias_span(const Tensor& b) {
  return b.defined() ? b.data() : std::span<const double>{};
}

void add(std::span<double> dst, std::span<const double> src) {
  const std::size_t n = dst.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  if (xs.channels != ws.channels) {
    throw std::invalid_argument("conv1d: input " + shape_str(xs) + " does not match weight " + shape_str(ws));
  }
  check_bias(b, ws.batch);
  const ConvDims d{xs.batch, xs.channels, ws.batch, xs.length, ws.length, stride, padding};
  d.validate();
  const Shape ys{xs.batch, ws.batch, d.out_len()};
  std::vector<double> y(ys.numel());
  kernels::conv1d_forward(d, x.data(), w.data(), bias_span(b), y);

  return make_result(ys, std::move(y), {&x, &w, &b}, [d, x, w, b](detail::Node& self) {
    const std::span<const double> dy = self.grad;
    if (x.requires_grad()) kernels::conv1d_backward_input_accumulate(d, dy, w.data(), x.node()->grad_buffer());
    if (w.requires_grad()) kernels::conv1d_backward_weight_accumulate(d, x.data(), dy, w.node()->grad_buffer());
    if (b.defined() && b.requires_grad()) {
      kernels::channel_sum_accumulate(d.batch, d.out_ch, d.out_len(), dy, b.node()->grad_buffer());
    }
  });
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  if (xs.channels != ws.batch) {
    throw std::invalid_argument("conv_transpose1d: input " + shape_str(xs) + " does not match weight " + shape_str(ws));
  }
  check_bias(b, ws.channels);
  const int lout = conv_transpose_out_len(xs.length, ws.length, stride, padding);
  if (lout < 1) throw std::invalid_argument("conv_transpose1d: empty output");
  // The adjoint convolution maps the output back onto the input.
  const ConvDims d{xs.batch, ws.channels, ws.batch, lout, ws.length, stride, padding};
  d.validate();
  if (d.out_len() != xs.length) throw std::invalid_argument("conv_transpose1d: inconsistent geometry");

  const Shape ys{xs.batch, ws.channels, lout};
  std::vector<double> y(ys.numel(), 0.0);
  kernels::conv1d_backward_input_accumulate(d, x.data(), w.data(), y);
  if (b.defined()) {
    for (int n = 0; n < ys.batch; ++n) {
      for (int c = 0; c < ys.channels; ++c) {
        double* row = y.data() + (static_cast<std::size_t>(n) * ys.channels + c) * lout;
        const double bc = b.data()[static_cast<std::size_t>(c)];
        for (int t = 0; t < lout; ++t) row[t] += bc;
      }
    }
  }

  return make_result(ys, std::move(y), {&x, &w, &b}, [d, x, w, b](detail::Node& self) {
    const std::span<const double> dy = self.grad;
    if (x.requires_grad()) {
      std::vector<double> tmp(x.numel());
      kernels::conv1d_forward(d, dy, w.data(), {}, tmp);
      add(x.node()->grad_buffer(), tmp);
    }
    if (w.requires_grad()) kernels::conv1d_backward_weight_accumulate(d, dy, x.data(), w.node()->grad_buffer());
    if (b.defined() && b.requires_grad()) {
      kernels::channel_sum_accumulate(d.batch, d.in_ch, d.in_len, dy, b.node()->grad_buffer());
    }
  });
}

Tensor relu(const Tensor& x) {
  const auto xd = x.data();
  const std::size_t n = xd.size();
  std::vector<double> y(n);
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) y[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  return make_result(x.shape(), std::move(y), {&x}, [x](detail::Node& self) {
    auto& dx = x.node()->grad_buffer();
    const auto xv = x.data();
    const std::size_t m = dx.size();
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < m; ++i) dx[i] += xv[i] > 0.0 ? self.grad[i] : 0.0;
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto xd = x.data();
  const std::size_t n = xd.size();
  std::vector<double> y(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double v = xd[i];
    if (v >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  return make_result(x.shape(), std::move(y), {&x}, [x](detail::Node& self) {
    auto& dx = x.node()->grad_buffer();
    const std::size_t m = dx.size();
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < m; ++i) dx[i] += self.grad[i] * self.data[i] * (1.0 - self.data[i]);
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, std::vector<double>& running_mean,
                  std::vector<double>& running_var, bool training, double momentum, double eps) {
  const Shape s = x.shape();
  const auto channels = static_cast<std::size_t>(s.channels);
  if (gamma.numel() != channels || beta.numel() != channels || running_mean.size() != channels ||
      running_var.size() != channels) {
    throw std::invalid_argument("batch_norm: parameter size does not match " + std::to_string(channels) + " channels");
  }
  const std::size_t count = static_cast<std::size_t>(s.batch) * static_cast<std::size_t>(s.length);

  std::vector<double> mean(channels);
  std::vector<double> var(channels);
  if (training) {
    if (count < 2) throw std::invalid_argument("batch_norm: training needs more than one value per channel");
    kernels::channel_moments(s.batch, s.channels, s.length, x.data(), mean, var);
    const double unbias = static_cast<double>(count) / static_cast<double>(count - 1);
    for (std::size_t c = 0; c < channels; ++c) {
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean[c];
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var[c] * unbias;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }
  std::vector<double> invstd(channels);
  for (std::size_t c = 0; c < channels; ++c) invstd[c] = 1.0 / std::sqrt(var[c] + eps);

  std::vector<double> xhat(s.numel());
  std::vector<double> y(s.numel());
  const auto xd = x.data();
  const auto g = gamma.data();
  const auto bt = beta.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.batch; ++n) {
    for (int c = 0; c < s.channels; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.channels + c) * s.length;
      const auto cc = static_cast<std::size_t>(c);
      for (int t = 0; t < s.length; ++t) {
        const double h = (xd[off + t] - mean[cc]) * invstd[cc];
        xhat[off + t] = h;
        y[off + t] = g[cc] * h + bt[cc];
      }
    }
  }

  return make_result(s, std::move(y), {&x, &gamma, &beta},
                     [s, x, gamma, beta, training, xhat = std::move(xhat), invstd](detail::Node& self) {
                       const auto C = static_cast<std::size_t>(s.channels);
                       std::vector<double> sum_dy(C, 0.0);
                       std::vector<double> sum_dy_xhat(C, 0.0);
                       const std::span<const double> dy = self.grad;
#pragma omp parallel for schedule(static)
                       for (int c = 0; c < s.channels; ++c) {
                         double a = 0.0;
                         double b = 0.0;
                         for (int n = 0; n < s.batch; ++n) {
                           const std::size_t off = (static_cast<std::size_t>(n) * s.channels + c) * s.length;
                           for (int t = 0; t < s.length; ++t) {
                             a += dy[off + t];
                             b += dy[off + t] * xhat[off + t];
                           }
                         }
                         sum_dy[static_cast<std::size_t>(c)] = a;
                         sum_dy_xhat[static_cast<std::size_t>(c)] = b;
                       }
                       if (gamma.requires_grad()) {
                         auto& dg = gamma.node()->grad_buffer();
                         for (std::size_t c = 0; c < C; ++c) dg[c] += sum_dy_xhat[c];
                       }
                       if (beta.requires_grad()) {
                         auto& db = beta.node()->grad_buffer();
                         for (std::size_t c = 0; c < C; ++c) db[c] += sum_dy[c];
                       }
                       if (!x.requires_grad()) return;
                       auto& dx = x.node()->grad_buffer();
                       const auto gv = gamma.data();
                       const double count = static_cast<double>(s.batch) * s.length;
#pragma omp parallel for collapse(2) schedule(static)
                       for (int n = 0; n < s.batch; ++n) {
                         for (int c = 0; c < s.channels; ++c) {
                           const auto cc = static_cast<std::size_t>(c);
                           const std::size_t off = (static_cast<std::size_t>(n) * s.channels + c) * s.length;
                           const double scale = gv[cc] * invstd[cc];
                           for (int t = 0; t < s.length; ++t) {
                             if (training) {
                               dx[off + t] += scale / count *
                                              (count * dy[off + t] - sum_dy[cc] - xhat[off + t] * sum_dy_xhat[cc]);
                             } else {
                               dx[off + t] += scale * dy[off + t];
                             }
                           }
                         }
                       }
                     });
}

Tensor rmse_loss(const Tensor& pred, const Tensor& target) {
  if (!(pred.shape() == target.shape())) {
    throw std::invalid_argument("rmse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  }
  const auto p = pred.data();
  const auto q = target.data();
  const std::size_t n = p.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (p[i] - q[i]) * (p[i] - q[i]);
  const double r = std::sqrt(acc / static_cast<double>(n));

  return make_result(Shape{1, 1, 1}, {r}, {&pred, &target}, [pred, target, r](detail::Node& self) {
    if (r == 0.0) return;
    const double g = self.grad[0];
    const auto pv = pred.data();
    const auto tv = target.data();
    const double scale = g / (static_cast<double>(pv.size()) * r);
    if (pred.requires_grad()) {
      auto& dp = pred.node()->grad_buffer();
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += scale * (pv[i] - tv[i]);
    }
    if (target.requires_grad()) {
      auto& dt = target.node()->grad_buffer();
      for (std::size_t i = 0; i < dt.size(); ++i) dt[i] -= scale * (pv[i] - tv[i]);
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (const double v : x.data()) acc += v;
  return make_result(Shape{1, 1, 1}, {acc}, {&x}, [x](detail::Node& self) {
    auto& dx = x.node()->grad_buffer();
    for (auto& v : dx) v += self.grad[0];
  });
}

}  // namespace spear::nn
