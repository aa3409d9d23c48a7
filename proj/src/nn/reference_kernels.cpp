#include <cstddef>

#include "spear/nn/kernels.hpp"

namespace spear::nn::reference {

namespace {
inline std::size_t at3(int a, int b, int c, int nb, int nc) {
  return (static_cast<std::size_t>(a) * nb + b) * nc + c;
}
}  // namespace

void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  d.validate();
  const int lout = d.out_len();
  for (int n = 0; n < d.batch; ++n) {
    for (int co = 0; co < d.out_ch; ++co) {
      for (int t = 0; t < lout; ++t) {
        double s = b.empty() ? 0.0 : b[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < d.in_ch; ++ci) {
          for (int k = 0; k < d.kernel; ++k) {
            const int idx = t * d.stride + k - d.padding;
            if (idx < 0 || idx >= d.in_len) continue;
            s += w[at3(co, ci, k, d.in_ch, d.kernel)] * x[at3(n, ci, idx, d.in_ch, d.in_len)];
          }
        }
        y[at3(n, co, t, d.out_ch, lout)] = s;
      }
    }
  }
}

void conv1d_backward_input_accumulate(const ConvDims& d, std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx) {
  d.validate();
  const int lout = d.out_len();
  for (int n = 0; n < d.batch; ++n) {
    for (int co = 0; co < d.out_ch; ++co) {
      for (int t = 0; t < lout; ++t) {
        const double g = dy[at3(n, co, t, d.out_ch, lout)];
        for (int ci = 0; ci < d.in_ch; ++ci) {
          for (int k = 0; k < d.kernel; ++k) {
            const int idx = t * d.stride + k - d.padding;
            if (idx < 0 || idx >= d.in_len) continue;
            dx[at3(n, ci, idx, d.in_ch, d.in_len)] += w[at3(co, ci, k, d.in_ch, d.kernel)] * g;
          }
        }
      }
    }
  }
}

void conv1d_backward_weight_accumulate(const ConvDims& d, std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw) {
  d.validate();
  const int lout = d.out_len();
  for (int n = 0; n < d.batch; ++n) {
    for (int co = 0; co < d.out_ch; ++co) {
      for (int t = 0; t < lout; ++t) {
        const double g = dy[at3(n, co, t, d.out_ch, lout)];
        for (int ci = 0; ci < d.in_ch; ++ci) {
          for (int k = 0; k < d.kernel; ++k) {
            const int idx = t * d.stride + k - d.padding;
            if (idx < 0 || idx >= d.in_len) continue;
            dw[at3(co, ci, k, d.in_ch, d.kernel)] += g * x[at3(n, ci, idx, d.in_ch, d.in_len)];
          }
        }
      }
    }
  }
}

void channel_sum_accumulate(int batch, int channels, int len, std::span<const double> dy, std::span<double> out) {
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      for (int t = 0; t < len; ++t) out[static_cast<std::size_t>(c)] += dy[at3(n, c, t, channels, len)];
    }
  }
}

void channel_moments(int batch, int channels, int len, std::span<const double> x, std::span<double> mean,
                     std::span<double> var) {
  const double count = static_cast<double>(batch) * len;
  for (int c = 0; c < channels; ++c) {
    double s = 0.0;
    for (int n = 0; n < batch; ++n) {
      for (int t = 0; t < len; ++t) s += x[at3(n, c, t, channels, len)];
    }
    const double m = s / count;
    double v = 0.0;
    for (int n = 0; n < batch; ++n) {
      for (int t = 0; t < len; ++t) {
        const double dlt = x[at3(n, c, t, channels, len)] - m;
        v += dlt * dlt;
      }
    }
    mean[static_cast<std::size_t>(c)] = m;
    var[static_cast<std::size_t>(c)] = v / count;
  }
}

}  // namespace spear::nn::reference
