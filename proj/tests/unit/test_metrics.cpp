#include <algorithm>
#include <cmath>
#include <optional>

#include "doctest.h"
#include "spear/filter.hpp"
#include "spear/metrics.hpp"
#include "spear/rng.hpp"
#include "spear/synth.hpp"
#include "hrv_oracle.hpp"

using namespace spear;
using namespace spear::metrics;
using namespace spear::testing;

namespace {

BeatSeries regular_beats(double first, double rr_s, double duration_s) {
  std::vector<double> t;
  for (double x = first; x < duration_s; x += rr_s) t.push_back(x);
  return BeatSeries::from_peaks(t);
}

bool is_subsequence(const std::vector<double>& sub, const std::vector<double>& seq) {
  std::size_t j = 0;
  for (double v : seq) {
    if (j < sub.size() && sub[j] == v) ++j;
  }
  return j == sub.size();
}

std::size_t matched_peaks(const std::vector<double>& truth, const std::vector<double>& found, double tol_s) {
  std::size_t hits = 0;
  for (double t : truth) {
    const auto it = std::lower_bound(found.begin(), found.end(), t - tol_s);
    if (it != found.end() && *it <= t + tol_s) ++hits;
  }
  return hits;
}

}  // namespace

TEST_CASE("peaks on clean synthetics at 60 bpm") {
  const auto [clean, gt] = synth::gen_clean(60.0, 60.0, {0.0, 0.1}, {}, 11);
  const auto beats = detect_peaks(filter::bandpass(clean));
  CHECK(beats.peak_times_s.size() >= 59);
  CHECK(beats.peak_times_s.size() <= 61);
  CHECK(matched_peaks(gt.peak_times_s, beats.peak_times_s, 3.0 / 64.0) == gt.peak_times_s.size());
  CHECK(beats.rr_intervals_ms.size() == beats.peak_times_s.size() - 1);
}

TEST_CASE("peaks on clean synthetics at 180 bpm") {
  const auto [clean, gt] = synth::gen_clean(60.0, 180.0, {0.0, 0.1}, {}, 12);
  const auto beats = detect_peaks(filter::bandpass(clean));
  CHECK(beats.peak_times_s.size() >= 178);
  CHECK(beats.peak_times_s.size() <= 182);
}

TEST_CASE("peak detection edge cases") {
  Signal flat;
  flat.samples.assign(640, 0.5);
  CHECK(detect_peaks(flat).peak_times_s.empty());
  Signal too_short;
  too_short.samples.assign(127, 0.0);
  CHECK_THROWS_AS(detect_peaks(too_short), std::invalid_argument);
}

TEST_CASE("peak detection is translation-equivariant") {
  // A pulse train with a period of exactly 64 samples, so every shifted
  // window of whole periods has the same statistics.
  const std::size_t period = 64;
  const std::size_t n = 20 * period;
  Signal base;
  base.samples.resize(n + period);
  for (std::size_t i = 0; i < base.samples.size(); ++i) {
    const double phase = static_cast<double>(i % period) - 20.0;
    base.samples[i] = std::exp(-phase * phase / 50.0) + 0.3 * std::exp(-(phase - 25.0) * (phase - 25.0) / 90.0);
  }
  Signal ref;
  ref.samples.assign(base.samples.begin(), base.samples.begin() + n);
  const auto ref_peaks = detect_peaks(ref).peak_times_s;
  for (std::size_t k = 1; k < period; k += 7) {
    Signal shifted;
    shifted.samples.assign(base.samples.begin() + static_cast<std::ptrdiff_t>(k),
                           base.samples.begin() + static_cast<std::ptrdiff_t>(k + n));
    const auto peaks = detect_peaks(shifted).peak_times_s;
    const double dt = static_cast<double>(k) / 64.0;
    for (double t : ref_peaks) {
      if (t - dt < 2.0 || t - dt > 18.0) continue;
      const auto it = std::min_element(peaks.begin(), peaks.end(),
                                       [&](double a, double b) { return std::abs(a - (t - dt)) < std::abs(b - (t - dt)); });
      REQUIRE(it != peaks.end());
      CHECK(*it == doctest::Approx(t - dt).epsilon(1e-9));
    }
  }
}

TEST_CASE("HR windows") {
  const auto w = estimate_hr_windows(regular_beats(0.0, 1.0, 30.0), 30.0);
  REQUIRE(w.size() == 12);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w[i].t_start == doctest::Approx(2.0 * static_cast<double>(i)));
    REQUIRE(w[i].bpm);
    CHECK(*w[i].bpm == doctest::Approx(60.0));
  }
  for (const auto& x : estimate_hr_windows(regular_beats(0.25, 0.5, 30.0), 30.0)) {
    REQUIRE(x.bpm);
    CHECK(*x.bpm == doctest::Approx(120.0));
  }
}

TEST_CASE("HR windows go Missing") {
  const auto one_peak = estimate_hr_windows(BeatSeries::from_peaks({3.0}), 10.0);
  REQUIRE(one_peak.size() == 2);
  CHECK_FALSE(one_peak[0].bpm);

  const std::vector<TimeInterval> valid{{0.0, 15.0}, {15.0, 30.0}};
  const auto split = estimate_hr_windows(regular_beats(0.0, 1.0, 30.0), 30.0, {}, valid);
  std::size_t missing = 0;
  for (const auto& x : split) {
    const bool straddles = x.t_start < 15.0 && x.t_start + 8.0 > 15.0;
    CHECK(x.bpm.has_value() == !straddles);
    missing += x.bpm ? 0 : 1;
  }
  CHECK(missing == 4);

  HrWindowConfig wide{25.0, 5.0};
  CHECK_FALSE(estimate_hr_windows(BeatSeries::from_peaks({0.0, 10.0, 20.0}), 25.0, wide)[0].bpm);
  for (const auto& x : estimate_hr_windows(regular_beats(0.0, 0.1, 30.0), 30.0)) CHECK_FALSE(x.bpm);
  CHECK_THROWS_AS(estimate_hr_windows(BeatSeries{}, 30.0, {8.0, 0.0}), std::invalid_argument);
}

TEST_CASE("HR windows stay in the plausible range") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t;
    double x = rng.uniform(0.0, 1.0);
    while (x < 60.0) {
      t.push_back(x);
      x += rng.uniform(0.05, 4.0);
    }
    for (const auto& w : estimate_hr_windows(BeatSeries::from_peaks(t), 60.0)) {
      if (w.bpm) {
        CHECK(*w.bpm >= kMinPlausibleBpm);
        CHECK(*w.bpm <= kMaxPlausibleBpm);
      }
    }
  }
}

TEST_CASE("beat series") {
  const auto b = BeatSeries::from_peaks({1.0, 1.8, 2.5});
  REQUIRE(b.rr_intervals_ms.size() == 2);
  CHECK(b.rr_intervals_ms[0] == doctest::Approx(800.0));
  CHECK_THROWS_AS(BeatSeries::from_peaks({1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("mae") {
  const std::vector<double> same{60.0, 70.0};
  CHECK(mae(same, same).value == 0.0);
  CHECK(mae(std::vector<double>{62.0, 58.0}, std::vector<double>{60.0, 60.0}).value == doctest::Approx(2.0));

  const std::vector<std::optional<double>> est{61.0, std::nullopt, 70.0, 50.0};
  const std::vector<std::optional<double>> truth{60.0, 60.0, std::nullopt, 53.0};
  const auto r = mae(est, truth);
  CHECK(r.value == doctest::Approx(2.0));
  CHECK(r.used == 2);
  CHECK(r.dropped == 2);

  CHECK_THROWS_AS(mae(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  const std::vector<std::optional<double>> none{std::nullopt};
  CHECK_THROWS_AS(mae(none, none), std::invalid_argument);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::optional<double>> a(100), b(100);
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      if (rng.uniform() > 0.1) a[i] = rng.uniform(40.0, 180.0);
      if (rng.uniform() > 0.1) b[i] = rng.uniform(40.0, 180.0);
      if (a[i] && b[i]) {
        sum += std::abs(*a[i] - *b[i]);
        ++count;
      }
    }
    CHECK(mae(a, b).value == doctest::Approx(sum / count).epsilon(1e-12));
  }
}

TEST_CASE("iqr_filter") {
  const std::vector<double> four{800, 810, 790, 805};
  CHECK(iqr_filter(four) == four);
  CHECK(iqr_filter(std::vector<double>{800, 810, 790, 805, 2000}) == four);
  const std::vector<double> equal(6, 812.5);
  CHECK(iqr_filter(equal) == equal);
  CHECK_THROWS_WITH(iqr_filter(std::vector<double>{1, 2, 3}), "insufficient intervals");
}

TEST_CASE("sdnn and rmssd examples") {
  const std::vector<double> rr{800, 810, 790, 805};
  CHECK(sdnn(rr) == doctest::Approx(7.395).epsilon(1e-4));
  CHECK(rmssd(rr) == doctest::Approx(15.546).epsilon(1e-4));
  CHECK(rmssd(std::vector<double>{800, 820}) == doctest::Approx(20.0));
  const std::vector<double> flat(5, 900.0);
  CHECK(sdnn(flat) == 0.0);
  CHECK(rmssd(flat) == 0.0);
  std::vector<double> doubled = rr;
  for (auto& v : doubled) v *= 2.0;
  CHECK(sdnn(doubled) == doctest::Approx(2.0 * sdnn(rr)));
  CHECK_THROWS_AS(sdnn(std::vector<double>{800}), std::invalid_argument);
  CHECK_THROWS_AS(rmssd(std::vector<double>{800}), std::invalid_argument);
}

TEST_CASE("HRV formulas match brute-force oracles") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto rr = random_rr(rng);
    const auto kept = iqr_filter(rr);
    CHECK(kept == iqr_oracle(rr));
    CHECK(is_subsequence(kept, rr));
    CHECK(relative_close(sdnn(rr), sdnn_oracle(rr), 1e-9));
    CHECK(relative_close(rmssd(rr), rmssd_oracle(rr), 1e-9));
  }
}

TEST_CASE("HRV windows") {
  // 290 s: shorter than one window, scored whole.
  const auto one = estimate_hrv_windows(regular_beats(0.0, 1.0, 290.0), 290.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].t_end == doctest::Approx(290.0));
  REQUIRE(one[0].sdnn_ms);
  CHECK(*one[0].sdnn_ms == doctest::Approx(0.0));

  // 330 s with 5-min windows every 15 s: starts 0, 15, 30.
  const auto three = estimate_hrv_windows(regular_beats(0.0, 0.8, 330.0), 330.0);
  REQUIRE(three.size() == 3);
  CHECK(three[2].t_start == doctest::Approx(30.0));
  CHECK(three[0].intervals == 374);

  // A gap splits the RR series: no interval spans it.
  std::vector<double> t;
  for (double x = 0.0; x < 100.0; x += 1.0) t.push_back(x);
  for (double x = 130.0; x < 200.0; x += 1.0) t.push_back(x);
  const std::vector<TimeInterval> valid{{0.0, 100.0}, {130.0, 200.0}};
  const auto gap = estimate_hrv_windows(BeatSeries::from_peaks(t), 200.0, {}, valid);
  REQUIRE(gap[0].sdnn_ms);
  CHECK(*gap[0].sdnn_ms == doctest::Approx(0.0));

  const auto sparse = estimate_hrv_windows(BeatSeries::from_peaks({1.0, 2.0, 3.0}), 60.0);
  CHECK_FALSE(sparse[0].sdnn_ms);
  CHECK_THROWS_AS(estimate_hrv_windows(BeatSeries{}, 60.0, {300.0, 1.0}), std::invalid_argument);
}
