#include "spear/nn/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace spear::nn {

void ConvDims::validate() const {
  if (batch < 1 || in_ch < 1 || out_ch < 1 || in_len < 1 || kernel < 1 || stride < 1 || padding < 0) {
    throw std::invalid_argument("conv: invalid dimensions");
  }
  if (in_len + 2 * padding < kernel) {
    throw std::invalid_argument("conv: kernel " + std::to_string(kernel) + " longer than padded input " +
                                std::to_string(in_len + 2 * padding));
  }
}

namespace kernels {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

// Column buffer laid out as (in_ch * kernel, batch * out_len), so that a whole
// batch is one GEMM operand. Buffers are reused across calls on a thread.
std::vector<double>& scratch_col(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

std::vector<double>& scratch_rows(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

// Output positions t whose tap k reads inside the input: t in [lo, hi).
std::pair<int, int> valid_range(const ConvDims& d, int k, int lout) {
  const int off = k - d.padding;
  const int last = d.in_len - 1 - off;
  const int lo = std::min(off >= 0 ? 0 : (-off + d.stride - 1) / d.stride, lout);
  const int hi = last < 0 ? lo : std::clamp(last / d.stride + 1, lo, lout);
  return {lo, hi};
}

void im2col(const ConvDims& d, std::span<const double> x, double* col) {
  const int lout = d.out_len();
  const std::size_t width = static_cast<std::size_t>(d.batch) * lout;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < d.in_ch; ++ci) {
    for (int n = 0; n < d.batch; ++n) {
      const double* xs = x.data() + (static_cast<std::size_t>(n) * d.in_ch + ci) * d.in_len;
      for (int k = 0; k < d.kernel; ++k) {
        double* row = col + (static_cast<std::size_t>(ci) * d.kernel + k) * width + static_cast<std::size_t>(n) * lout;
        const auto [lo, hi] = valid_range(d, k, lout);
        const double* src = xs + (k - d.padding);
        std::fill(row, row + lo, 0.0);
        for (int t = lo; t < hi; ++t) row[t] = src[t * d.stride];
        std::fill(row + hi, row + lout, 0.0);
      }
    }
  }
}

// Each (n, ci) pair owns its slice of dx, so the scatter is race-free and
// its summation order is fixed.
void col2im_accumulate(const ConvDims& d, const double* col, std::span<double> dx) {
  const int lout = d.out_len();
  const std::size_t width = static_cast<std::size_t>(d.batch) * lout;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.batch; ++n) {
    for (int ci = 0; ci < d.in_ch; ++ci) {
      double* xs = dx.data() + (static_cast<std::size_t>(n) * d.in_ch + ci) * d.in_len;
      for (int k = 0; k < d.kernel; ++k) {
        const double* row = col + (static_cast<std::size_t>(ci) * d.kernel + k) * width + static_cast<std::size_t>(n) * lout;
        const auto [lo, hi] = valid_range(d, k, lout);
        double* dst = xs + (k - d.padding);
        for (int t = lo; t < hi; ++t) dst[t * d.stride] += row[t];
      }
    }
  }
}

// (batch, ch, len) <-> (ch, batch * len).
void to_channel_major(int batch, int ch, int len, const double* src, double* dst) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < ch; ++c) {
    for (int n = 0; n < batch; ++n) {
      std::copy_n(src + (static_cast<std::size_t>(n) * ch + c) * len, len,
                  dst + (static_cast<std::size_t>(c) * batch + n) * len);
    }
  }
}

void from_channel_major(int batch, int ch, int len, const double* src, double* dst) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < ch; ++c) {
      std::copy_n(src + (static_cast<std::size_t>(c) * batch + n) * len, len,
                  dst + (static_cast<std::size_t>(n) * ch + c) * len);
    }
  }
}

}  // namespace

void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  d.validate();
  const int lout = d.out_len();
  const int rows = d.in_ch * d.kernel;
  const int width = d.batch * lout;
  auto& col = scratch_col(static_cast<std::size_t>(rows) * width);
  auto& out = scratch_rows(static_cast<std::size_t>(d.out_ch) * width);
  im2col(d, x, col.data());
  for (int co = 0; co < d.out_ch; ++co) {
    std::fill_n(out.data() + static_cast<std::size_t>(co) * width, width, b.empty() ? 0.0 : b[co]);
  }
  MatrixView(out.data(), d.out_ch, width).noalias() +=
      ConstMatrixView(w.data(), d.out_ch, rows) * ConstMatrixView(col.data(), rows, width);
  from_channel_major(d.batch, d.out_ch, lout, out.data(), y.data());
}

void conv1d_backward_input_accumulate(const ConvDims& d, std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx) {
  d.validate();
  const int lout = d.out_len();
  const int rows = d.in_ch * d.kernel;
  const int width = d.batch * lout;
  auto& col = scratch_col(static_cast<std::size_t>(rows) * width);
  auto& g = scratch_rows(static_cast<std::size_t>(d.out_ch) * width);
  to_channel_major(d.batch, d.out_ch, lout, dy.data(), g.data());
  MatrixView(col.data(), rows, width).noalias() =
      ConstMatrixView(w.data(), d.out_ch, rows).transpose() * ConstMatrixView(g.data(), d.out_ch, width);
  col2im_accumulate(d, col.data(), dx);
}

void conv1d_backward_weight_accumulate(const ConvDims& d, std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw) {
  d.validate();
  const int lout = d.out_len();
  const int rows = d.in_ch * d.kernel;
  const int width = d.batch * lout;
  auto& col = scratch_col(static_cast<std::size_t>(rows) * width);
  auto& g = scratch_rows(static_cast<std::size_t>(d.out_ch) * width);
  im2col(d, x, col.data());
  to_channel_major(d.batch, d.out_ch, lout, dy.data(), g.data());
  // One GEMM reduces over batch and time; its order is fixed for given sizes.
  MatrixView(dw.data(), d.out_ch, rows).noalias() +=
      ConstMatrixView(g.data(), d.out_ch, width) * ConstMatrixView(col.data(), rows, width).transpose();
}

void channel_sum_accumulate(int batch, int channels, int len, std::span<const double> dy, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double s = 0.0;
    for (int n = 0; n < batch; ++n) {
      const double* row = dy.data() + (static_cast<std::size_t>(n) * channels + c) * len;
      for (int t = 0; t < len; ++t) s += row[t];
    }
    out[static_cast<std::size_t>(c)] += s;
  }
}

void channel_moments(int batch, int channels, int len, std::span<const double> x, std::span<double> mean,
                     std::span<double> var) {
  const double count = static_cast<double>(batch) * len;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double s = 0.0;
    for (int n = 0; n < batch; ++n) {
      const double* row = x.data() + (static_cast<std::size_t>(n) * channels + c) * len;
      for (int t = 0; t < len; ++t) s += row[t];
    }
    const double m = s / count;
    double v = 0.0;
    for (int n = 0; n < batch; ++n) {
      const double* row = x.data() + (static_cast<std::size_t>(n) * channels + c) * len;
      for (int t = 0; t < len; ++t) v += (row[t] - m) * (row[t] - m);
    }
    mean[static_cast<std::size_t>(c)] = m;
    var[static_cast<std::size_t>(c)] = v / count;
  }
}

}  // namespace kernels

}  // namespace spear::nn
