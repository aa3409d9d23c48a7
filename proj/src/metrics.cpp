#include "spear/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spear::metrics {

namespace {

constexpr double kTimeEps = 1e-9;

std::vector<double> centred_moving_average(std::span<const double> x, std::size_t w) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t before = (w - 1) / 2;
  const std::size_t after = w / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= before ? i - before : 0;
    const std::size_t hi = std::min(n, i + after + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

const TimeInterval* interval_of(std::span<const TimeInterval> valid, double t) {
  for (const auto& iv : valid) {
    if (t >= iv.start - kTimeEps && t < iv.end + kTimeEps) return &iv;
  }
  return nullptr;
}

std::vector<TimeInterval> or_whole(std::span<const TimeInterval> valid, double duration_s) {
  if (!valid.empty()) return {valid.begin(), valid.end()};
  return {TimeInterval{0.0, duration_s}};
}

}  // namespace

BeatSeries BeatSeries::from_peaks(std::vector<double> peak_times_s) {
  BeatSeries b;
  for (std::size_t i = 1; i < peak_times_s.size(); ++i) {
    if (!(peak_times_s[i] > peak_times_s[i - 1])) throw std::invalid_argument("peak times must be strictly increasing");
    b.rr_intervals_ms.push_back((peak_times_s[i] - peak_times_s[i - 1]) * 1000.0);
  }
  b.peak_times_s = std::move(peak_times_s);
  return b;
}

BeatSeries detect_peaks(const Signal& signal, const PeakDetectorConfig& cfg) {
  if (signal.duration() < 2.0) throw std::invalid_argument("detect_peaks: signal shorter than 2 s");
  const auto& x = signal.samples;
  const std::size_t n = x.size();
  const auto w_peak = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.peak_window_s * signal.fs)));
  const auto w_beat = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.beat_window_s * signal.fs)));

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::max(x[i] - mean, 0.0);
    energy[i] = c * c;
  }
  const double offset = cfg.beta * std::accumulate(energy.begin(), energy.end(), 0.0) / static_cast<double>(n);
  const auto ma_peak = centred_moving_average(energy, w_peak);
  const auto ma_beat = centred_moving_average(energy, w_beat);

  std::vector<double> peaks;
  std::size_t i = 0;
  while (i < n) {
    if (!(ma_peak[i] > ma_beat[i] + offset)) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < n && ma_peak[i] > ma_beat[i] + offset) ++i;
    if (i - begin < w_peak) continue;
    std::size_t best = begin;
    for (std::size_t k = begin; k < i; ++k) {
      if (x[k] > x[best]) best = k;
    }
    double pos = static_cast<double>(best);
    if (best > 0 && best + 1 < n) {
      const double a = x[best - 1], b = x[best], c = x[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) pos += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }
    const double t = pos / signal.fs;
    if (peaks.empty() || t > peaks.back()) peaks.push_back(t);
  }
  return BeatSeries::from_peaks(std::move(peaks));
}

void HrWindowConfig::validate() const {
  if (!(window_s > 0.0) || !(step_s > 0.0)) throw std::invalid_argument("hr window: window and step must be positive");
}

void HrvWindowConfig::validate() const {
  if (!(window_s > 0.0) || overlap_frac < 0.0 || overlap_frac >= 1.0) {
    throw std::invalid_argument("hrv window: need window > 0 and overlap in [0, 1)");
  }
}

std::vector<HrWindow> estimate_hr_windows(const BeatSeries& beats, double duration_s, const HrWindowConfig& cfg,
                                          std::span<const TimeInterval> valid) {
  cfg.validate();
  const auto intervals = or_whole(valid, duration_s);
  const auto& p = beats.peak_times_s;
  std::vector<HrWindow> out;
  for (std::size_t w = 0;; ++w) {
    const double start = static_cast<double>(w) * cfg.step_s;
    const double end = start + cfg.window_s;
    if (end > duration_s + kTimeEps) break;
    HrWindow win{start, std::nullopt};
    const bool covered = std::any_of(intervals.begin(), intervals.end(), [&](const TimeInterval& iv) {
      return iv.start <= start + kTimeEps && end <= iv.end + kTimeEps;
    });
    if (covered) {
      const auto first = std::lower_bound(p.begin(), p.end(), start);
      const auto last = std::lower_bound(p.begin(), p.end(), end);
      const auto count = last - first;
      if (count >= 2) {
        const double mean_rr_ms = (*(last - 1) - *first) * 1000.0 / static_cast<double>(count - 1);
        const double bpm = 60000.0 / mean_rr_ms;
        if (bpm >= kMinPlausibleBpm && bpm <= kMaxPlausibleBpm) win.bpm = bpm;
      }
    }
    out.push_back(win);
  }
  return out;
}

MaeResult mae(std::span<const std::optional<double>> est, std::span<const std::optional<double>> truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("mae: length mismatch");
  MaeResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!est[i] || !truth[i]) {
      ++r.dropped;
      continue;
    }
    sum += std::abs(*est[i] - *truth[i]);
    ++r.used;
  }
  if (r.used == 0) throw std::invalid_argument("mae: no comparable windows");
  r.value = sum / static_cast<double>(r.used);
  return r;
}

MaeResult mae(std::span<const double> est, std::span<const double> truth) {
  std::vector<std::optional<double>> e(est.begin(), est.end());
  std::vector<std::optional<double>> t(truth.begin(), truth.end());
  return mae(e, t);
}

std::vector<double> iqr_filter(std::span<const double> rr_ms) {
  if (rr_ms.size() < 4) throw std::invalid_argument("insufficient intervals");
  std::vector<double> sorted(rr_ms.begin(), rr_ms.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  std::vector<double> kept;
  std::copy_if(rr_ms.begin(), rr_ms.end(), std::back_inserter(kept), [&](double v) { return v >= lo && v <= hi; });
  return kept;
}

double sdnn(std::span<const double> rr_ms) {
  if (rr_ms.size() < 2) throw std::invalid_argument("insufficient intervals");
  const double n = static_cast<double>(rr_ms.size());
  const double mean = std::accumulate(rr_ms.begin(), rr_ms.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : rr_ms) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

double rmssd(std::span<const double> rr_ms) {
  if (rr_ms.size() < 2) throw std::invalid_argument("insufficient intervals");
  double ss = 0.0;
  for (std::size_t i = 1; i < rr_ms.size(); ++i) {
    const double d = rr_ms[i] - rr_ms[i - 1];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(rr_ms.size() - 1));
}

std::vector<HrvWindow> estimate_hrv_windows(const BeatSeries& beats, double duration_s, const HrvWindowConfig& cfg,
                                            std::span<const TimeInterval> valid) {
  cfg.validate();
  const auto intervals = or_whole(valid, duration_s);
  std::vector<std::pair<double, double>> spans;
  if (duration_s < cfg.window_s) {
    spans.emplace_back(0.0, duration_s);
  } else {
    const double step = cfg.step_s();
    for (std::size_t w = 0;; ++w) {
      const double start = static_cast<double>(w) * step;
      if (start + cfg.window_s > duration_s + kTimeEps) break;
      spans.emplace_back(start, start + cfg.window_s);
    }
  }

  const auto& p = beats.peak_times_s;
  std::vector<HrvWindow> out;
  for (const auto& [start, end] : spans) {
    HrvWindow win{start, end, 0, std::nullopt, std::nullopt};
    std::vector<double> rr;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i - 1] < start || p[i] >= end) continue;
      const TimeInterval* a = interval_of(intervals, p[i - 1]);
      if (a == nullptr || a != interval_of(intervals, p[i])) continue;
      rr.push_back((p[i] - p[i - 1]) * 1000.0);
    }
    if (rr.size() >= 4) {
      const auto kept = iqr_filter(rr);
      win.intervals = kept.size();
      if (kept.size() >= 2) {
        win.sdnn_ms = sdnn(kept);
        win.rmssd_ms = rmssd(kept);
      }
    }
    out.push_back(win);
  }
  return out;
}

}  // namespace spear::metrics
