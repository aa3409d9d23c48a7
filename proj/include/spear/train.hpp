#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spear/detect.hpp"
#include "spear/nn/dae.hpp"
#include "spear/signal.hpp"
#include "spear/synth.hpp"

namespace spear::train {

/// Random patch-erasure masks for self-supervised training. In these masks a
/// 1 keeps the sample and a 0 erases it; the training input is x * mask.
struct MaskSpec {
  double patch_min_s = 1.0;
  double patch_max_s = 15.0;
  int min_patches = 1;
  int max_patches = 2;
  int masks_per_signal = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr int kDisjointAttempts = 100;

/// masks_per_signal masks of segment_len samples. Each mask has a uniformly
/// chosen number of zero patches in [min_patches, max_patches], with integer
/// lengths uniform over [round(patch_min_s * fs), round(patch_max_s * fs)]
/// and uniform start positions. Multi-patch masks are redrawn up to 100 times
/// to make the patches disjoint, after which overlap is accepted.
std::vector<BinaryMask> gen_masks(std::size_t segment_len, const MaskSpec& spec, double fs = kDefaultFs);

/// x * keep_mask, with erased samples set to exactly 0 and kept samples copied.
Signal apply_keep_mask(const Signal& x, const BinaryMask& keep_mask);

struct TrainingPair {
  Signal input;
  Signal target;
  std::size_t group = 0;  // ordinal of the source segment, used for the validation split
};

/// masks_per_signal pairs (x * M, x) per segment. Segment k draws its masks
/// from derive_seed(spec.seed, k). Throws if the detector flags any sample of
/// a segment.
std::vector<TrainingPair> build_dataset(std::span<const Segment> clean_segments, const MaskSpec& spec,
                                        const detect::Detector& detector);

/// One (corrupt(x), x) pair per segment using the synthetic noise model, the
/// training set of the simulated-noise baseline. Segment k uses noise seed
/// derive_seed(seed, k) and a single burst.
std::vector<TrainingPair> build_simnoise_dataset(std::span<const Segment> clean_segments,
                                                 const synth::NoiseSpec& noise, std::uint64_t seed);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  double validation_fraction = 0.1;
  nn::DaeArchitecture architecture{};

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;  // NaN when there is no validation split
  double wall_ms = 0.0;
};

struct TrainResult {
  nn::DaeModel final_model;
  nn::DaeModel best_model;
  int best_epoch = 0;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch Adam on the RMSE between model(input) and target over the full
/// segment. Validation takes round(validation_fraction * groups) whole source
/// segments, chosen by shuffle_seed, and is scored in Eval mode. best_model is
/// the snapshot with the lowest validation RMSE (training RMSE when there is
/// no validation split). Batch order depends only on shuffle_seed. A
/// non-finite loss throws with the seed, epoch and batch index.
TrainResult train_dae(std::span<const TrainingPair> dataset, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

/// RMSE of the model over the pairs, Eval mode.
double evaluate_rmse(const nn::DaeModel& model, std::span<const TrainingPair> pairs, int batch_size = 32);

/// Erased-region RMSE of three ways to fill one patch per segment: the model,
/// zeros, and a straight line between the samples bordering the patch.
struct PatchFillScores {
  double model_rmse = 0.0;
  double zero_rmse = 0.0;
  double linear_rmse = 0.0;
  std::size_t segments = 0;
};

/// Each segment gets one patch of patch_len samples at a start drawn from
/// derive_seed(seed, k). Errors are pooled over every erased sample.
PatchFillScores evaluate_patch_fill(const nn::DaeModel& model, std::span<const Segment> segments,
                                    std::size_t patch_len, std::uint64_t seed);

/// Straight line across [begin, end) between x[begin - 1] and x[end]; a
/// patch touching an edge is filled with the one available neighbour.
std::vector<double> linear_fill(std::span<const double> x, std::size_t begin, std::size_t end);

}  // namespace spear::train
