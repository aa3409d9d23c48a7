// Production kernels (im2col + GEMM, OpenMP) against the serial reference loops.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spear/nn/kernels.hpp"

namespace nn = spear::nn;

namespace {

// Encoder layers of the light architecture on a batch of 32 windows of 1920 samples.
nn::ConvDims layer_dims(int layer) {
  static constexpr int kIn[] = {1, 16, 32, 64};
  static constexpr int kOut[] = {16, 32, 64, 128};
  static constexpr int kStride[] = {4, 4, 4, 2};
  int len = 1920;
  for (int i = 0; i < layer; ++i) len = nn::conv_out_len(len, 8, kStride[i], (8 - kStride[i]) / 2);
  return {32, kIn[layer], kOut[layer], len, 8, kStride[layer], (8 - kStride[layer]) / 2};
}

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

struct Buffers {
  nn::ConvDims d;
  std::vector<double> x, w, b, y;
  explicit Buffers(int layer)
      : d(layer_dims(layer)),
        x(random_vec(static_cast<std::size_t>(d.batch) * d.in_ch * d.in_len, 1)),
        w(random_vec(static_cast<std::size_t>(d.out_ch) * d.in_ch * d.kernel, 2)),
        b(random_vec(static_cast<std::size_t>(d.out_ch), 3)),
        y(random_vec(static_cast<std::size_t>(d.batch) * d.out_ch * d.out_len(), 4)) {}
};

template <auto Kernel>
void forward(benchmark::State& state) {
  Buffers buf(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Kernel(buf.d, buf.x, buf.w, buf.b, buf.y);
    benchmark::DoNotOptimize(buf.y.data());
  }
}

template <auto Kernel>
void backward_input(benchmark::State& state) {
  Buffers buf(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Kernel(buf.d, buf.y, buf.w, buf.x);
    benchmark::DoNotOptimize(buf.x.data());
  }
}

template <auto Kernel>
void backward_weight(benchmark::State& state) {
  Buffers buf(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Kernel(buf.d, buf.x, buf.y, buf.w);
    benchmark::DoNotOptimize(buf.w.data());
  }
}

}  // namespace

BENCHMARK(forward<nn::kernels::conv1d_forward>)->Name("conv1d_forward/fast")->DenseRange(0, 3);
BENCHMARK(forward<nn::reference::conv1d_forward>)->Name("conv1d_forward/reference")->DenseRange(0, 3);
BENCHMARK(backward_input<nn::kernels::conv1d_backward_input_accumulate>)
    ->Name("conv1d_backward_input/fast")
    ->DenseRange(0, 3);
BENCHMARK(backward_input<nn::reference::conv1d_backward_input_accumulate>)
    ->Name("conv1d_backward_input/reference")
    ->DenseRange(0, 3);
BENCHMARK(backward_weight<nn::kernels::conv1d_backward_weight_accumulate>)
    ->Name("conv1d_backward_weight/fast")
    ->DenseRange(0, 3);
BENCHMARK(backward_weight<nn::reference::conv1d_backward_weight_accumulate>)
    ->Name("conv1d_backward_weight/reference")
    ->DenseRange(0, 3);

BENCHMARK_MAIN();
