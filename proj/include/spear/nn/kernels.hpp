#pragma once

#include <span>

namespace spear::nn {

/// Geometry of a 1D convolution y = conv(x, w) + b with
/// x: (batch, in_ch, in_len), w: (out_ch, in_ch, kernel), y: (batch, out_ch, out_len).
/// A transposed convolution with weights (in_ch_t, out_ch_t, kernel) is the
/// adjoint of the conv with in_ch = out_ch_t and out_ch = in_ch_t.
struct ConvDims {
  int batch = 1;
  int in_ch = 1;
  int out_ch = 1;
  int in_len = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  int out_len() const { return (in_len + 2 * padding - kernel) / stride + 1; }
  void validate() const;
};

inline int conv_out_len(int in_len, int kernel, int stride, int padding) {
  return (in_len + 2 * padding - kernel) / stride + 1;
}
inline int conv_transpose_out_len(int in_len, int kernel, int stride, int padding) {
  return (in_len - 1) * stride - 2 * padding + kernel;
}

// Two implementations share these signatures: spear::nn::kernels is the
// production path (im2col + Eigen GEMM, OpenMP over batch and channels) and
// spear::nn::reference is a direct serial loop nest kept as a test oracle.
// Outputs are overwritten unless the name says "accumulate".

namespace kernels {

/// y = conv(x, w) + b; b may be empty.
void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
/// dx += adjoint of the conv applied to dy (this is also the transposed-conv forward).
void conv1d_backward_input_accumulate(const ConvDims& d, std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx);
/// dw += correlation of dy with the input patches, summed over batch.
void conv1d_backward_weight_accumulate(const ConvDims& d, std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw);
/// out[c] += sum over batch and length of channel c.
void channel_sum_accumulate(int batch, int channels, int len, std::span<const double> dy, std::span<double> out);
/// Per-channel mean and biased variance over (batch, length).
void channel_moments(int batch, int channels, int len, std::span<const double> x, std::span<double> mean,
                     std::span<double> var);

}  // namespace kernels

namespace reference {

void conv1d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv1d_backward_input_accumulate(const ConvDims& d, std::span<const double> dy, std::span<const double> w,
                                      std::span<double> dx);
void conv1d_backward_weight_accumulate(const ConvDims& d, std::span<const double> x, std::span<const double> dy,
                                       std::span<double> dw);
void channel_sum_accumulate(int batch, int channels, int len, std::span<const double> dy, std::span<double> out);
void channel_moments(int batch, int channels, int len, std::span<const double> x, std::span<double> mean,
                     std::span<double> var);

}  // namespace reference

}  // namespace spear::nn
