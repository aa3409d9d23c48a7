#include "spear/nn/dae.hpp"

#include <algorithm>
#include <stdexcept>

#include "spear/nn/kernels.hpp"
#include "spear/nn/ops.hpp"

namespace spear::nn {

void DaeArchitecture::validate() const {
  if (channels.empty()) throw std::invalid_argument("dae: need at least one encoder block");
  if (std::any_of(channels.begin(), channels.end(), [](int c) { return c < 1; })) {
    throw std::invalid_argument("dae: channel counts must be positive");
  }
  if (strides.size() != channels.size()) throw std::invalid_argument("dae: need one stride per block");
  if (kernel < 1 || head_kernel < 1 || head_kernel % 2 == 0) {
    throw std::invalid_argument("dae: invalid kernel geometry (head kernel must be odd)");
  }
  for (const int s : strides) {
    if (s < 1 || s > kernel || (kernel - s) % 2 != 0) {
      throw std::invalid_argument("dae: each stride must be in [1, kernel] with kernel - stride even");
    }
  }
  int len = input_length;
  std::vector<int> lengths{len};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    len = conv_out_len(len, kernel, strides[i], padding(i));
    if (len < 1) throw std::invalid_argument("dae: input too short for the encoder depth");
    lengths.push_back(len);
  }
  for (std::size_t i = channels.size(); i > 0; --i) {
    len = conv_transpose_out_len(len, kernel, strides[i - 1], padding(i - 1));
    if (len != lengths[i - 1]) throw std::invalid_argument("dae: decoder does not restore the encoder lengths");
  }
}

DaeModel::DaeModel(DaeArchitecture arch, std::uint64_t init_seed) : arch_(std::move(arch)) {
  arch_.validate();
  Rng rng(init_seed);
  const auto& ch = arch_.channels;
  int in = 1;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    enc_.push_back(make_conv1d(in, ch[i], arch_.kernel, arch_.strides[i], arch_.padding(i), rng));
    enc_bn_.push_back(make_batch_norm1d(ch[i]));
    in = ch[i];
  }
  // Decoder mirrors the encoder: deepest width back down to ch[0], then ch[0] again.
  for (std::size_t i = ch.size(); i > 0; --i) {
    const int out = i >= 2 ? ch[i - 2] : ch[0];
    dec_.push_back(make_conv_transpose1d(in, out, arch_.kernel, arch_.strides[i - 1], arch_.padding(i - 1), rng));
    dec_bn_.push_back(make_batch_norm1d(out));
    in = out;
  }
  head_ = make_conv1d(in, 1, arch_.head_kernel, 1, arch_.head_kernel / 2, rng);
}

DaeModel::DaeModel(const DaeModel& other)
    : arch_(other.arch_), enc_(other.enc_), enc_bn_(other.enc_bn_), dec_(other.dec_), dec_bn_(other.dec_bn_),
      head_(other.head_) {
  for (auto& l : enc_) {
    l.weight = clone_parameter(l.weight);
    l.bias = clone_parameter(l.bias);
  }
  for (auto& l : dec_) {
    l.weight = clone_parameter(l.weight);
    l.bias = clone_parameter(l.bias);
  }
  for (auto* bns : {&enc_bn_, &dec_bn_}) {
    for (auto& bn : *bns) {
      bn.gamma = clone_parameter(bn.gamma);
      bn.beta = clone_parameter(bn.beta);
    }
  }
  head_.weight = clone_parameter(head_.weight);
  head_.bias = clone_parameter(head_.bias);
}

DaeModel& DaeModel::operator=(const DaeModel& other) {
  if (this != &other) {
    DaeModel tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Tensor DaeModel::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (std::size_t i = 0; i < enc_.size(); ++i) h = enc_bn_[i].forward(relu(enc_[i].forward(h)), mode);
  for (std::size_t i = 0; i < dec_.size(); ++i) h = dec_bn_[i].forward(relu(dec_[i].forward(h)), mode);
  return sigmoid(head_.forward(h));
}

Tensor DaeModel::forward_eval(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < enc_.size(); ++i) h = enc_bn_[i].forward_eval(relu(enc_[i].forward(h)));
  for (std::size_t i = 0; i < dec_.size(); ++i) h = dec_bn_[i].forward_eval(relu(dec_[i].forward(h)));
  return sigmoid(head_.forward(h));
}

std::vector<std::vector<double>> DaeModel::reconstruct(std::span<const std::vector<double>> inputs,
                                                       int batch_size) const {
  const auto len = static_cast<std::size_t>(arch_.input_length);
  NoGradGuard no_grad;
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(inputs.size() - start, static_cast<std::size_t>(batch_size));
    std::vector<double> buf;
    buf.reserve(count * len);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& in = inputs[start + i];
      if (in.size() != len) {
        throw std::invalid_argument("dae: input has " + std::to_string(in.size()) + " samples, model expects " +
                                    std::to_string(len));
      }
      buf.insert(buf.end(), in.begin(), in.end());
    }
    const Tensor y = forward_eval(Tensor::from(Shape{static_cast<int>(count), 1, arch_.input_length}, std::move(buf)));
    const auto yd = y.data();
    for (std::size_t i = 0; i < count; ++i) {
      out.emplace_back(yd.begin() + static_cast<std::ptrdiff_t>(i * len),
                       yd.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
    }
  }
  return out;
}

std::vector<Tensor> DaeModel::parameters() const {
  std::vector<Tensor> p;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    p.insert(p.end(), {enc_[i].weight, enc_[i].bias, enc_bn_[i].gamma, enc_bn_[i].beta});
  }
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    p.insert(p.end(), {dec_[i].weight, dec_[i].bias, dec_bn_[i].gamma, dec_bn_[i].beta});
  }
  p.insert(p.end(), {head_.weight, head_.bias});
  return p;
}

std::vector<DaeModel::NamedBuffer> DaeModel::state() {
  std::vector<NamedBuffer> s;
  auto tensor = [](Tensor& t) { return &t.node()->data; };
  auto add_block = [&](const std::string& prefix, Tensor& w, Tensor& b, BatchNorm1dLayer& bn) {
    s.push_back({prefix + ".weight", tensor(w)});
    s.push_back({prefix + ".bias", tensor(b)});
    s.push_back({prefix + ".bn.gamma", tensor(bn.gamma)});
    s.push_back({prefix + ".bn.beta", tensor(bn.beta)});
    s.push_back({prefix + ".bn.running_mean", &bn.running_mean});
    s.push_back({prefix + ".bn.running_var", &bn.running_var});
  };
  for (std::size_t i = 0; i < enc_.size(); ++i) add_block("enc" + std::to_string(i), enc_[i].weight, enc_[i].bias, enc_bn_[i]);
  for (std::size_t i = 0; i < dec_.size(); ++i) add_block("dec" + std::to_string(i), dec_[i].weight, dec_[i].bias, dec_bn_[i]);
  s.push_back({"head.weight", tensor(head_.weight)});
  s.push_back({"head.bias", tensor(head_.bias)});
  return s;
}

std::size_t DaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

}  // namespace spear::nn
