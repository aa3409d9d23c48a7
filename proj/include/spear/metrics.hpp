#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spear/signal.hpp"

namespace spear::metrics {

struct BeatSeries {
  std::vector<double> peak_times_s;
  std::vector<double> rr_intervals_ms;

  /// Throws unless the times are strictly increasing.
  static BeatSeries from_peaks(std::vector<double> peak_times_s);
};

/// Two-moving-average beat detector. The input is mean-centred, clipped at
/// zero and squared; a block where the short average exceeds the long
/// average plus beta * mean(squared) and is at least one short window wide
/// holds one beat, located at the block's signal maximum (refined by a
/// parabola through its neighbours).
struct PeakDetectorConfig {
  double peak_window_s = 0.111;
  double beat_window_s = 0.667;
  double beta = 0.02;
};

/// Peak times are relative to the start of the signal (t0 is ignored).
/// Throws if the signal is shorter than 2 s.
BeatSeries detect_peaks(const Signal& signal, const PeakDetectorConfig& cfg = {});

struct HrWindowConfig {
  double window_s = 8.0;
  double step_s = 2.0;

  void validate() const;
};

struct HrvWindowConfig {
  double window_s = 300.0;
  double overlap_frac = 0.95;

  double step_s() const { return window_s * (1.0 - overlap_frac); }
  void validate() const;
};

inline constexpr double kMinPlausibleBpm = 20.0;
inline constexpr double kMaxPlausibleBpm = 300.0;

struct HrWindow {
  double t_start = 0.0;
  std::optional<double> bpm;  // empty = Missing
};

/// Windows start at 0, step_s, ... while start + window_s <= duration_s. A
/// window gets 60000 / mean(RR) over consecutive peak pairs inside it. It is
/// Missing when it holds fewer than 2 peaks, is not covered by a single
/// valid interval, or the rate falls outside [20, 300] bpm. An empty
/// `valid` means the whole [0, duration_s) is valid.
std::vector<HrWindow> estimate_hr_windows(const BeatSeries& beats, double duration_s, const HrWindowConfig& cfg = {},
                                          std::span<const TimeInterval> valid = {});

struct MaeResult {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;
};

/// Mean absolute error over index pairs where both sides are present. Throws
/// on a length mismatch or when no pair is comparable.
MaeResult mae(std::span<const std::optional<double>> est, std::span<const std::optional<double>> truth);
MaeResult mae(std::span<const double> est, std::span<const double> truth);

/// Keeps intervals inside [Q1 - 1.5 IQR, Q3 + 1.5 IQR], quartiles by linear
/// interpolation between order statistics. Order and multiplicity are kept.
/// Throws "insufficient intervals" below 4 intervals.
std::vector<double> iqr_filter(std::span<const double> rr_ms);

/// Population standard deviation. Throws below 2 intervals.
double sdnn(std::span<const double> rr_ms);
/// sqrt(mean(successive difference^2)). Throws below 2 intervals.
double rmssd(std::span<const double> rr_ms);

struct HrvWindow {
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t intervals = 0;  // after the IQR filter
  std::optional<double> sdnn_ms;
  std::optional<double> rmssd_ms;
};

/// HRV over sliding windows. A recording shorter than one window is scored
/// as a single window spanning the whole recording. Only RR intervals whose
/// two peaks lie in the window and in the same valid interval are used; they
/// pass through iqr_filter, and the window is Missing with fewer than 4 raw
/// or 2 filtered intervals.
std::vector<HrvWindow> estimate_hrv_windows(const BeatSeries& beats, double duration_s,
                                            const HrvWindowConfig& cfg = {},
                                            std::span<const TimeInterval> valid = {});

}  // namespace spear::metrics
