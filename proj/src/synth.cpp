#include "spear/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spear/rng.hpp"

namespace spear::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinBpm = 30.0;
constexpr double kMaxBpm = 220.0;
constexpr int kMaxPlacementAttempts = 1000;
constexpr int kNoiseTones = 6;

// Cumulative beat phase (in beats) of the modulated HR trajectory.
struct BeatPhase {
  double base_bpm;
  double depth_bpm;
  double freq_hz;
  double mod_phase;

  double hr(double t) const {
    if (depth_bpm == 0.0 || freq_hz == 0.0) return base_bpm;
    return base_bpm + depth_bpm * std::sin(kTwoPi * freq_hz * t + mod_phase);
  }

  double phase(double t) const {
    double p = base_bpm * t / 60.0;
    if (depth_bpm != 0.0 && freq_hz != 0.0) {
      p += depth_bpm / (60.0 * kTwoPi * freq_hz) * (std::cos(mod_phase) - std::cos(kTwoPi * freq_hz * t + mod_phase));
    }
    return p;
  }

  // Solves phase(t) = target for t in [lo, hi], where phase is increasing.
  double solve(double target, double lo, double hi) const {
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = phase(t) - target;
      if (std::abs(f) < 1e-13) break;
      if (f > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      const double newton = t - f / (hr(t) / 60.0);
      t = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
      if (hi - lo < 1e-14) break;
    }
    return t;
  }
};

void add_gaussian(std::vector<double>& x, double fs, double center_s, double amp, double sigma_s) {
  const double reach = 6.0 * sigma_s;
  const auto first = static_cast<std::ptrdiff_t>(std::floor((center_s - reach) * fs));
  const auto last = static_cast<std::ptrdiff_t>(std::ceil((center_s + reach) * fs));
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const double inv = 1.0 / (2.0 * sigma_s * sigma_s);
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(first, 0); i <= std::min(last, n - 1); ++i) {
    const double d = static_cast<double>(i) / fs - center_s;
    x[static_cast<std::size_t>(i)] += amp * std::exp(-d * d * inv);
  }
}

using Interval = std::pair<std::size_t, std::size_t>;

std::vector<Interval> place_bursts_with(Rng& rng, std::size_t n, double fs, const NoiseSpec& spec) {
  std::vector<Interval> bursts;
  if (spec.burst_count <= 0) return bursts;

  std::vector<std::size_t> lengths;
  std::size_t total = 0;
  for (int b = 0; b < spec.burst_count; ++b) {
    const double len_s = rng.uniform(spec.burst_len_lo_s, spec.burst_len_hi_s);
    const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len_s * fs)));
    lengths.push_back(len);
    total += len;
  }
  if (static_cast<double>(total) > kMaxCorruptedFraction * static_cast<double>(n) || lengths.empty()) {
    throw std::invalid_argument("corruption budget exceeded");
  }

  const auto block = static_cast<std::size_t>(std::llround(kSegmentSeconds * fs));
  const bool per_block = n >= block;
  const double block_cap = kMaxCorruptedFraction * static_cast<double>(block);
  std::vector<std::size_t> block_used(per_block ? n / block + 1 : 0, 0);

  auto overlap_per_block = [&](std::size_t begin, std::size_t end, std::size_t b) {
    const std::size_t lo = std::max(begin, b * block);
    const std::size_t hi = std::min(end, (b + 1) * block);
    return hi > lo ? hi - lo : std::size_t{0};
  };

  for (const std::size_t len : lengths) {
    if (len > n) throw std::invalid_argument("corruption budget exceeded");
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const auto begin = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - len)));
      const std::size_t end = begin + len;
      const bool overlaps = std::any_of(bursts.begin(), bursts.end(),
                                        [&](const Interval& iv) { return begin < iv.second && iv.first < end; });
      if (overlaps) continue;
      bool fits = true;
      if (per_block) {
        for (std::size_t b = begin / block; b <= (end - 1) / block && fits; ++b) {
          fits = static_cast<double>(block_used[b] + overlap_per_block(begin, end, b)) <= block_cap;
        }
      }
      if (!fits) continue;
      if (per_block) {
        for (std::size_t b = begin / block; b <= (end - 1) / block; ++b) block_used[b] += overlap_per_block(begin, end, b);
      }
      bursts.emplace_back(begin, end);
      placed = true;
    }
    if (!placed) throw std::invalid_argument("corruption budget exceeded");
  }
  std::sort(bursts.begin(), bursts.end());
  return bursts;
}

double interp(const std::vector<double>& x, double idx) {
  if (idx <= 0.0) return x.front();
  const double last = static_cast<double>(x.size() - 1);
  if (idx >= last) return x.back();
  const auto i = static_cast<std::size_t>(idx);
  const double frac = idx - static_cast<double>(i);
  return x[i] + frac * (x[i + 1] - x[i]);
}

}  // namespace

void BeatTemplateParams::validate() const {
  if (!(systolic_amp > 0.0 && dicrotic_amp > 0.0)) throw std::invalid_argument("beat template: amplitudes must be positive");
  if (!(systolic_width_s > 0.0 && dicrotic_width_s > 0.0)) throw std::invalid_argument("beat template: widths must be positive");
  if (!(dicrotic_amp < systolic_amp)) throw std::invalid_argument("beat template: dicrotic lobe must be smaller than systolic");
  if (!(dicrotic_delay_frac > 0.0 && dicrotic_delay_frac < 1.0)) {
    throw std::invalid_argument("beat template: dicrotic delay must lie in (0, 1)");
  }
}

void NoiseSpec::validate() const {
  if (bw_amp < 0.0 || burst_amp < 0.0 || fm_jitter_frac < 0.0) throw std::invalid_argument("noise spec: negative amplitude");
  if (bw_amp > 0.0 && !(bw_freq_hz >= 0.05 && bw_freq_hz <= 0.5)) {
    throw std::invalid_argument("noise spec: baseline wander frequency must lie in [0.05, 0.5] Hz");
  }
  if (fm_jitter_frac >= 1.0) throw std::invalid_argument("noise spec: FM jitter fraction must be below 1");
  if (burst_count < 0) throw std::invalid_argument("noise spec: negative burst count");
  if (burst_count > 0 && !(burst_len_lo_s > 0.0 && burst_len_lo_s <= burst_len_hi_s)) {
    throw std::invalid_argument("noise spec: invalid burst length range");
  }
}

std::pair<Signal, GroundTruth> gen_clean(double duration_s, double hr_base_bpm, HrvModulation hrv,
                                         const BeatTemplateParams& tmpl, std::uint64_t seed, double fs) {
  tmpl.validate();
  if (!(duration_s >= 30.0)) throw std::invalid_argument("gen_clean: duration must be at least 30 s");
  if (!(fs > 0.0)) throw std::invalid_argument("gen_clean: sampling rate must be positive");
  const double depth = std::abs(hrv.depth_bpm);
  if (hr_base_bpm - depth < kMinBpm || hr_base_bpm + depth > kMaxBpm) {
    throw std::invalid_argument("gen_clean: heart rate trajectory leaves [30, 220] bpm");
  }

  Rng rng(seed);
  const double beat_offset = rng.uniform();
  const BeatPhase traj{hr_base_bpm, depth, hrv.freq_hz, rng.uniform(0.0, kTwoPi)};

  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const double margin = 2.0;  // longest possible period at 30 bpm

  // Beat k sits where phase(t) + offset = k.
  std::vector<double> beat_times;
  {
    double t = -margin;
    auto k = static_cast<long long>(std::floor(traj.phase(t) + beat_offset)) + 1;
    while (true) {
      const double tk = traj.solve(static_cast<double>(k) - beat_offset, t, t + margin + 1e-9);
      if (tk > duration_s + margin) break;
      beat_times.push_back(tk);
      t = tk;
      ++k;
    }
  }

  std::vector<double> x(n, 0.0);
  for (const double tk : beat_times) {
    const double scale = 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0);
    const double period = 60.0 / traj.hr(tk);
    add_gaussian(x, fs, tk, scale * tmpl.systolic_amp, tmpl.systolic_width_s);
    add_gaussian(x, fs, tk + tmpl.dicrotic_delay_frac * period, scale * tmpl.dicrotic_amp, tmpl.dicrotic_width_s);
  }

  Signal sig{std::move(x), fs, 0.0};
  normalize_minmax_inplace(sig.samples);

  GroundTruth gt;
  for (const double tk : beat_times) {
    if (tk >= 0.0 && tk < duration_s) gt.peak_times_s.push_back(tk);
  }
  gt.noise_mask.fs = fs;
  gt.noise_mask.flags.assign(n, 0);
  gt.hr_trajectory_bpm.resize(n);
  for (std::size_t i = 0; i < n; ++i) gt.hr_trajectory_bpm[i] = traj.hr(static_cast<double>(i) / fs);
  return {std::move(sig), std::move(gt)};
}

std::vector<std::pair<std::size_t, std::size_t>> place_bursts(std::size_t n_samples, double fs, const NoiseSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  return place_bursts_with(rng, n_samples, fs, spec);
}

std::pair<Signal, GroundTruth> corrupt(const Signal& clean, const GroundTruth& gt, const NoiseSpec& spec) {
  spec.validate();
  if (clean.samples.empty()) throw std::invalid_argument("empty signal");
  const auto [lo, hi] = std::minmax_element(clean.samples.begin(), clean.samples.end());
  if (*lo < 0.0 || *hi > 1.0) throw std::invalid_argument("corrupt: clean signal must be normalized to [0, 1]");

  const std::size_t n = clean.size();
  const double fs = clean.fs;
  Rng rng(spec.seed);
  const auto bursts = place_bursts_with(rng, n, fs, spec);

  Signal noisy = clean;
  auto& y = noisy.samples;

  if (spec.bw_amp > 0.0) {
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += spec.bw_amp * std::sin(kTwoPi * spec.bw_freq_hz * static_cast<double>(i) / fs + phase);
    }
  }

  GroundTruth out_gt = gt;
  out_gt.noise_mask.fs = fs;
  out_gt.noise_mask.flags.assign(n, 0);

  for (const auto& [begin, end] : bursts) {
    const double len_s = static_cast<double>(end - begin) / fs;

    // Smooth time warp t -> t + d(t) with |d'(t)| <= jitter and d = 0 at both
    // burst edges, so the local beat period changes by at most the jitter.
    const double half_cycles = static_cast<double>(rng.uniform_int(1, 3));
    const double sign = rng.coin() ? 1.0 : -1.0;
    const double warp_amp = sign * spec.fm_jitter_frac * len_s / (std::numbers::pi * half_cycles);

    struct Tone {
      double freq, phase, amp;
    };
    std::vector<Tone> tones;
    for (int k = 0; k < kNoiseTones; ++k) {
      tones.push_back({rng.uniform(0.5, 6.0), rng.uniform(0.0, kTwoPi), rng.uniform(0.5, 1.0)});
    }
    std::vector<double> noise(end - begin, 0.0);
    double peak = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i) / fs;
      double v = 0.0;
      for (const auto& tone : tones) v += tone.amp * std::sin(kTwoPi * tone.freq * t + tone.phase);
      noise[i - begin] = v;
      peak = std::max(peak, std::abs(v));
    }
    const double noise_scale = peak > 0.0 ? spec.burst_amp / peak : 0.0;

    for (std::size_t i = begin; i < end; ++i) {
      const double local = static_cast<double>(i - begin) / fs;
      const double shift = warp_amp * std::sin(std::numbers::pi * half_cycles * local / len_s);
      const double warped = interp(clean.samples, static_cast<double>(i) + shift * fs);
      y[i] += (warped - clean.samples[i]) + noise_scale * noise[i - begin];
      out_gt.noise_mask.flags[i] = 1;
    }
  }

  normalize_minmax_inplace(y);
  return {std::move(noisy), std::move(out_gt)};
}

}  // namespace spear::synth
