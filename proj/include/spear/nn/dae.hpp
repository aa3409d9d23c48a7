#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spear/nn/layers.hpp"

namespace spear::nn {

/// Encoder: one conv -> ReLU -> BatchNorm block per entry of `channels`,
/// block i downsampling by strides[i] with padding (kernel - stride) / 2.
/// Decoder: the mirror image with transposed convolutions ending at
/// channels[0], then a stride-1 conv head to one channel with a sigmoid.
struct DaeArchitecture {
  std::vector<int> channels{32, 64, 128, 256};
  std::vector<int> strides{2, 2, 2, 2};
  int kernel = 8;
  int head_kernel = 7;
  int input_length = 1920;

  /// Same four blocks with half the channels.
  static DaeArchitecture compact() {
    DaeArchitecture a;
    a.channels = {16, 32, 64, 128};
    return a;
  }

  /// Four blocks with strides 4, 4, 4, 2 (1920 -> 480 -> 120 -> 30 -> 15):
  /// the receptive field spans most of a 30 s segment at about a fifth of
  /// the default cost.
  static DaeArchitecture wide() {
    DaeArchitecture a;
    a.strides = {4, 4, 4, 2};
    return a;
  }

  /// wide() strides with compact() channels.
  static DaeArchitecture light() {
    DaeArchitecture a = wide();
    a.channels = compact().channels;
    return a;
  }

  int padding(std::size_t block) const { return (kernel - strides[block]) / 2; }
  void validate() const;
  friend bool operator==(const DaeArchitecture&, const DaeArchitecture&) = default;
};

class DaeModel {
 public:
  DaeModel(DaeArchitecture arch, std::uint64_t init_seed);

  // Copies are deep: the copy owns separate parameter storage.
  DaeModel(const DaeModel& other);
  DaeModel& operator=(const DaeModel& other);
  DaeModel(DaeModel&&) noexcept = default;
  DaeModel& operator=(DaeModel&&) noexcept = default;

  /// x: (N, 1, input_length) -> (N, 1, input_length) in [0, 1].
  Tensor forward(const Tensor& x, Mode mode);
  /// Eval-mode forward that leaves the model untouched; safe to call from
  /// several threads on a shared model.
  Tensor forward_eval(const Tensor& x) const;

  /// Eval-mode reconstruction of many inputs, batched, without autograd.
  std::vector<std::vector<double>> reconstruct(std::span<const std::vector<double>> inputs,
                                               int batch_size = 32) const;

  /// Trainable tensors in a fixed order (handles share storage with the model).
  std::vector<Tensor> parameters() const;

  struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
  };
  /// Every tensor and running statistic, named, in a fixed order. Used by the
  /// checkpoint writer and reader.
  std::vector<NamedBuffer> state();

  const DaeArchitecture& architecture() const { return arch_; }
  std::size_t parameter_count() const;

 private:
  DaeArchitecture arch_;
  std::vector<Conv1dLayer> enc_;
  std::vector<BatchNorm1dLayer> enc_bn_;
  std::vector<ConvTranspose1dLayer> dec_;
  std::vector<BatchNorm1dLayer> dec_bn_;
  Conv1dLayer head_;
};

/// JSON container: {"format": "spear-dae", "version": 1, "architecture": {...},
/// "metadata": {...}, "tensors": {name: {"size": n, "data": base64 of
/// little-endian float64}}}. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, DaeModel& model, const std::string& metadata_json = "{}");
DaeModel load_checkpoint(const std::filesystem::path& path);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace spear::nn
