#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spear/signal.hpp"

namespace spear::synth {

/// Two-Gaussian beat model: a systolic lobe at the beat time and a smaller
/// dicrotic lobe delayed by a fraction of the local beat period. Widths are
/// Gaussian standard deviations in seconds.
struct BeatTemplateParams {
  double systolic_amp = 1.0;
  double systolic_width_s = 0.08;
  double dicrotic_amp = 0.35;
  double dicrotic_width_s = 0.12;
  double dicrotic_delay_frac = 0.2;

  void validate() const;
};

/// Sinusoidal modulation of the heart rate: hr(t) = base + depth * sin(2 pi f t + phase).
struct HrvModulation {
  double depth_bpm = 0.0;
  double freq_hz = 0.1;
};

struct NoiseSpec {
  double bw_amp = 0.6;        // baseline wander amplitude, relative to the unit signal range
  double bw_freq_hz = 0.2;    // in [0.05, 0.5]
  double fm_jitter_frac = 0.15;
  double burst_amp = 1.5;     // peak |noise| inside a burst
  int burst_count = 1;
  double burst_len_lo_s = 3.0;
  double burst_len_hi_s = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Corrupted regions never exceed this fraction of the signal, nor of any
/// aligned 30 s block of it.
inline constexpr double kMaxCorruptedFraction = 0.75;

struct GroundTruth {
  std::vector<double> peak_times_s;
  BinaryMask noise_mask;
  std::vector<double> hr_trajectory_bpm;  // one value per sample
};

/// Clean synthetic PPG normalized to [0, 1] plus exact beat times. Beats
/// follow the phase integral of the modulated HR trajectory; the seed picks
/// the beat phase offset, the modulation phase and small per-beat amplitude
/// variation.
std::pair<Signal, GroundTruth> gen_clean(double duration_s, double hr_base_bpm, HrvModulation hrv,
                                         const BeatTemplateParams& tmpl, std::uint64_t seed,
                                         double fs = kDefaultFs);

/// Adds global baseline wander and burst_count non-overlapping bursts of
/// band-limited noise with local beat-timing (FM) jitter, then renormalizes.
/// The returned ground truth keeps the clean beat times and marks exactly
/// the burst samples in noise_mask.
std::pair<Signal, GroundTruth> corrupt(const Signal& clean, const GroundTruth& gt, const NoiseSpec& spec);

/// Burst intervals [begin, end) in samples, as placed by corrupt() for the
/// same inputs. Exposed so callers and tests can inspect placement.
std::vector<std::pair<std::size_t, std::size_t>> place_bursts(std::size_t n_samples, double fs,
                                                              const NoiseSpec& spec);

}  // namespace spear::synth
