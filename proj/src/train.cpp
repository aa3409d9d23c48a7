#include "spear/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spear/nn/adam.hpp"
#include "spear/nn/ops.hpp"
#include "spear/rng.hpp"

namespace spear::train {

void MaskSpec::validate() const {
  if (!(patch_min_s > 0.0) || patch_max_s < patch_min_s) throw std::invalid_argument("mask spec: invalid patch length range");
  if (min_patches < 1 || max_patches < min_patches) throw std::invalid_argument("mask spec: invalid patch count range");
  if (masks_per_signal < 1) throw std::invalid_argument("mask spec: masks_per_signal must be >= 1");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("train config: validation_fraction must be in [0, 1)");
  }
  architecture.validate();
}

std::vector<BinaryMask> gen_masks(std::size_t segment_len, const MaskSpec& spec, double fs) {
  spec.validate();
  const auto lo = static_cast<std::int64_t>(std::llround(spec.patch_min_s * fs));
  const auto hi = static_cast<std::int64_t>(std::llround(spec.patch_max_s * fs));
  if (lo < 1 || static_cast<std::size_t>(hi) > segment_len) {
    throw std::invalid_argument("gen_masks: patch lengths do not fit the segment");
  }
  const auto n = static_cast<std::int64_t>(segment_len);

  Rng rng(spec.seed);
  std::vector<BinaryMask> masks;
  masks.reserve(static_cast<std::size_t>(spec.masks_per_signal));
  for (int m = 0; m < spec.masks_per_signal; ++m) {
    const auto count = rng.uniform_int(spec.min_patches, spec.max_patches);
    std::vector<std::pair<std::int64_t, std::int64_t>> patches;
    for (int attempt = 0; attempt < kDisjointAttempts; ++attempt) {
      patches.clear();
      for (std::int64_t p = 0; p < count; ++p) {
        const auto len = rng.uniform_int(lo, hi);
        const auto start = rng.uniform_int(0, n - len);
        patches.emplace_back(start, start + len);
      }
      bool disjoint = true;
      for (std::size_t a = 0; a < patches.size() && disjoint; ++a) {
        for (std::size_t b = a + 1; b < patches.size() && disjoint; ++b) {
          disjoint = patches[a].second <= patches[b].first || patches[b].second <= patches[a].first;
        }
      }
      if (disjoint) break;
    }
    BinaryMask mask;
    mask.fs = fs;
    mask.flags.assign(segment_len, 1);
    for (const auto& [begin, end] : patches) {
      std::fill(mask.flags.begin() + begin, mask.flags.begin() + end, std::uint8_t{0});
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

Signal apply_keep_mask(const Signal& x, const BinaryMask& keep_mask) {
  if (x.size() != keep_mask.size()) throw std::invalid_argument("apply_keep_mask: length mismatch");
  Signal out = x;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (keep_mask.flags[i] == 0) out.samples[i] = 0.0;
  }
  return out;
}

std::vector<TrainingPair> build_dataset(std::span<const Segment> clean_segments, const MaskSpec& spec,
                                        const detect::Detector& detector) {
  spec.validate();
  std::vector<TrainingPair> pairs;
  pairs.reserve(clean_segments.size() * static_cast<std::size_t>(spec.masks_per_signal));
  for (std::size_t k = 0; k < clean_segments.size(); ++k) {
    const Segment& seg = clean_segments[k];
    if (!detect::is_clean(seg, detector)) {
      throw std::invalid_argument("build_dataset: segment " + std::to_string(k) + " of '" + seg.source_id +
                                  "' is not clean under the " + detector.name() + " detector");
    }
    MaskSpec seg_spec = spec;
    seg_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(k));
    for (const auto& mask : gen_masks(seg.signal.size(), seg_spec, seg.signal.fs)) {
      pairs.push_back({apply_keep_mask(seg.signal, mask), seg.signal, k});
    }
  }
  return pairs;
}

std::vector<TrainingPair> build_simnoise_dataset(std::span<const Segment> clean_segments,
                                                 const synth::NoiseSpec& noise, std::uint64_t seed) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(clean_segments.size());
  for (std::size_t k = 0; k < clean_segments.size(); ++k) {
    const Signal target = normalize_minmax(clean_segments[k].signal);
    synth::NoiseSpec spec = noise;
    spec.burst_count = 1;
    spec.seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    auto [noisy, gt] = synth::corrupt(target, synth::GroundTruth{}, spec);
    pairs.push_back({std::move(noisy), target, k});
  }
  return pairs;
}

namespace {

nn::Tensor stack(std::span<const TrainingPair> pairs, std::span<const std::size_t> idx, bool inputs, int length) {
  std::vector<double> buf;
  buf.reserve(idx.size() * static_cast<std::size_t>(length));
  for (const auto i : idx) {
    const auto& s = inputs ? pairs[i].input.samples : pairs[i].target.samples;
    if (s.size() != static_cast<std::size_t>(length)) {
      throw std::invalid_argument("train: pair " + std::to_string(i) + " has " + std::to_string(s.size()) +
                                  " samples, model expects " + std::to_string(length));
    }
    buf.insert(buf.end(), s.begin(), s.end());
  }
  return nn::Tensor::from(nn::Shape{static_cast<int>(idx.size()), 1, length}, std::move(buf));
}

double rmse_over(const nn::DaeModel& model, std::span<const TrainingPair> pairs, std::span<const std::size_t> idx,
                 int batch_size) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  const int len = model.architecture().input_length;
  nn::NoGradGuard no_grad;
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = idx.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(batch_size), idx.size() - start));
    const nn::Tensor y = model.forward_eval(stack(pairs, chunk, true, len));
    const nn::Tensor t = stack(pairs, chunk, false, len);
    const auto yd = y.data();
    const auto td = t.data();
    for (std::size_t k = 0; k < yd.size(); ++k) sq += (yd[k] - td[k]) * (yd[k] - td[k]);
    count += yd.size();
  }
  return std::sqrt(sq / static_cast<double>(count));
}

}  // namespace

double evaluate_rmse(const nn::DaeModel& model, std::span<const TrainingPair> pairs, int batch_size) {
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return rmse_over(model, pairs, idx, batch_size);
}

TrainResult train_dae(std::span<const TrainingPair> dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("empty corpus");

  // Validation split by whole source segments, so no target is seen on both sides.
  std::size_t groups = 0;
  for (const auto& p : dataset) groups = std::max(groups, p.group + 1);
  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(config.shuffle_seed, "validation-split"));
  split_rng.shuffle(std::span<std::size_t>(order));
  auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(groups)));
  if (n_val >= groups) n_val = groups - 1;
  std::vector<std::uint8_t> is_val(groups, 0);
  for (std::size_t k = 0; k < n_val; ++k) is_val[order[k]] = 1;

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) (is_val[dataset[i].group] ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) throw std::invalid_argument("empty corpus");

  nn::DaeModel model(config.architecture, config.init_seed);
  auto params = model.parameters();
  nn::AdamState adam;
  adam.lr = config.lr;
  const int len = config.architecture.input_length;

  TrainResult result{model, model, 0, {}};
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(std::span<std::size_t>(train_idx));

    double sq_sum = 0.0;
    std::size_t elems = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const auto chunk = std::span<const std::size_t>(train_idx).subspan(
          start, std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), train_idx.size() - start));
      const nn::Tensor x = stack(dataset, chunk, true, len);
      const nn::Tensor target = stack(dataset, chunk, false, len);
      for (auto& p : params) p.zero_grad();
      const nn::Tensor loss = nn::rmse_loss(model.forward(x, nn::Mode::Train), target);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss (shuffle_seed " << config.shuffle_seed << ", init_seed "
            << config.init_seed << ", epoch " << epoch << ", batch " << batch_index << ")";
        throw std::runtime_error(msg.str());
      }
      nn::backward(loss);
      nn::adam_step(params, adam);
      sq_sum += value * value * static_cast<double>(x.numel());
      elems += x.numel();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_rmse = std::sqrt(sq_sum / static_cast<double>(elems));
    entry.val_rmse = rmse_over(model, dataset, val_idx, config.batch_size);
    entry.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    result.log.push_back(entry);

    const double score = val_idx.empty() ? entry.train_rmse : entry.val_rmse;
    if (score < best) {
      best = score;
      result.best_model = model;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(entry);
  }
  result.final_model = std::move(model);
  return result;
}

std::vector<double> linear_fill(std::span<const double> x, std::size_t begin, std::size_t end) {
  if (begin >= end || end > x.size()) throw std::invalid_argument("linear_fill: invalid patch");
  if (begin == 0 && end == x.size()) return std::vector<double>(end - begin, 0.0);
  const double left = begin > 0 ? x[begin - 1] : x[end];
  const double right = end < x.size() ? x[end] : x[begin - 1];
  const double span = static_cast<double>(end - begin + 1);
  std::vector<double> out(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const double a = static_cast<double>(i - begin + 1) / span;
    out[i - begin] = left + a * (right - left);
  }
  return out;
}

PatchFillScores evaluate_patch_fill(const nn::DaeModel& model, std::span<const Segment> segments,
                                    std::size_t patch_len, std::uint64_t seed) {
  if (segments.empty()) throw std::invalid_argument("evaluate_patch_fill: no segments");
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> starts;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& x = segments[k].signal.samples;
    if (patch_len == 0 || patch_len > x.size()) throw std::invalid_argument("evaluate_patch_fill: invalid patch length");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(x.size() - patch_len)));
    starts.push_back(start);
    std::vector<double> in = x;
    std::fill(in.begin() + static_cast<std::ptrdiff_t>(start), in.begin() + static_cast<std::ptrdiff_t>(start + patch_len), 0.0);
    inputs.push_back(std::move(in));
  }
  const auto outputs = model.reconstruct(inputs);

  double model_sq = 0.0, zero_sq = 0.0, linear_sq = 0.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& x = segments[k].signal.samples;
    const std::size_t begin = starts[k];
    const std::size_t end = begin + patch_len;
    const auto line = linear_fill(x, begin, end);
    for (std::size_t i = begin; i < end; ++i) {
      model_sq += (outputs[k][i] - x[i]) * (outputs[k][i] - x[i]);
      zero_sq += x[i] * x[i];
      linear_sq += (line[i - begin] - x[i]) * (line[i - begin] - x[i]);
    }
  }
  const double n = static_cast<double>(segments.size() * patch_len);
  return {std::sqrt(model_sq / n), std::sqrt(zero_sq / n), std::sqrt(linear_sq / n), segments.size()};
}

}  // namespace spear::train
