// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "hrv_oracle.hpp"
#include "spear/e2e.hpp"
#include "spear/filter.hpp"
#include "spear/metrics.hpp"
#include "spear/signal.hpp"
#include "spear/synth.hpp"
#include "test_util.hpp"

#ifndef SPEAR_CLI_PATH
#error "SPEAR_CLI_PATH must name the spear executable"
#endif

using namespace spear;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double elapsed_s) {
  std::printf("%s %d %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), elapsed_s);
  std::fflush(stdout);
  if (!o.passed) ++failures;
}

// limit_s > 0 adds a runtime bound to the criterion.
void run(int id, const std::string& name, const std::function<Outcome()>& body, double limit_s = 0.0) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double elapsed = seconds_since(start);
  if (limit_s > 0.0) {
    o.detail += fmt("; runtime limit %.0f s", limit_s);
    o.passed = o.passed && elapsed < limit_s;
  }
  report(id, name, o, elapsed);
}

// 1. Analytic gradients against central differences (h = 1e-4), 20 trials per layer.
Outcome gradients() {
  constexpr int kTrials = 20;
  constexpr double kTol = 1e-5;
  Rng rng(derive_seed(std::uint64_t{1}, "gradients"));
  std::string worst_layer;
  double worst = 0.0;
  int layers = 0;
  for (const auto& c : testing::layer_grad_cases()) {
    ++layers;
    for (int t = 0; t < kTrials; ++t) {
      const double err = c.trial(rng);
      if (!(err <= worst)) {
        worst = err;
        worst_layer = c.layer;
      }
    }
  }
  return {worst < kTol && layers == 6,
          fmt("max relative error %.2e (%s) over %d layers x %d trials, limit %.0e", worst, worst_layer.c_str(), layers,
              kTrials, kTol)};
}

// 2. erase/merge round trip and clean-region bit preservation.
Outcome merge_invariants() {
  constexpr int kPairs = 1000;
  Rng rng(derive_seed(std::uint64_t{2}, "merge"));
  int round_trip_bad = 0, preserve_bad = 0;
  for (int k = 0; k < kPairs; ++k) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 4000));
    const auto x = testing::random_signal(rng, n);
    const auto y = testing::random_signal(rng, n);
    const auto m = testing::random_mask(rng, n, rng.uniform());
    const auto erased = erase(x, m);
    const auto round_trip = merge(erased, x, m);
    const auto merged = merge(erased, y, m);
    for (std::size_t i = 0; i < n; ++i) {
      if (!testing::bit_equal(round_trip.samples[i], x.samples[i])) ++round_trip_bad;
      if (m.flags[i] == 0 && !testing::bit_equal(merged.samples[i], x.samples[i])) ++preserve_bad;
      if (m.flags[i] == 1 && !testing::bit_equal(merged.samples[i], y.samples[i])) ++preserve_bad;
      if (m.flags[i] == 1 && erased.samples[i] != 0.0) ++preserve_bad;
    }
  }
  return {round_trip_bad == 0 && preserve_bad == 0,
          fmt("%d pairs: %d round-trip mismatches, %d preservation mismatches", kPairs, round_trip_bad, preserve_bad)};
}

// 3. Band-pass gains from the DFT of the zero-phase impulse response.
Outcome filter_response() {
  constexpr double kFs = 64.0;
  const std::size_t n = 16384;
  Signal impulse{std::vector<double>(n, 0.0), kFs};
  impulse.samples[n / 2] = 1.0;
  const auto h = filter::bandpass_raw(impulse).samples;
  auto gain_db = [&](double f) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += h[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(i) / kFs);
    }
    return 20.0 * std::log10(std::abs(acc));
  };
  double pass_worst = 0.0;
  for (double f = 1.0; f <= 4.0 + 1e-9; f += 0.05) pass_worst = std::max(pass_worst, std::abs(gain_db(f)));
  const double at_02 = gain_db(0.2);
  const double at_10 = gain_db(10.0);
  return {pass_worst <= 1.0 && at_02 <= -20.0 && at_10 <= -20.0,
          fmt("1-4 Hz worst |gain| %.3f dB (limit 1), 0.2 Hz %.1f dB, 10 Hz %.1f dB (limit -20)", pass_worst, at_02,
              at_10)};
}

// 4. Peak detection on clean synthetics spanning 45-180 bpm.
Outcome peak_detection() {
  constexpr int kRecordings = 50;
  constexpr double kTolS = 3.0 / 64.0;
  Rng rng(derive_seed(std::uint64_t{4}, "peaks"));
  double worst_err = 0.0, worst_match = 1.0;
  double worst_err_hr = 0.0, worst_match_hr = 0.0;
  for (int k = 0; k < kRecordings; ++k) {
    const double hr = 45.0 + 135.0 * k / (kRecordings - 1);
    const synth::HrvModulation mod{rng.uniform(0.0, 5.0), rng.uniform(0.05, 0.3)};
    const auto [clean, gt] = synth::gen_clean(60.0, hr, mod, {}, rng());
    const auto beats = metrics::detect_peaks(clean);
    const auto truth = metrics::BeatSeries::from_peaks(gt.peak_times_s);
    const auto est_w = metrics::estimate_hr_windows(beats, clean.duration());
    const auto truth_w = metrics::estimate_hr_windows(truth, clean.duration());
    std::vector<std::optional<double>> est, tru;
    for (std::size_t i = 0; i < truth_w.size(); ++i) {
      est.push_back(est_w[i].bpm);
      tru.push_back(truth_w[i].bpm);
    }
    const double err = metrics::mae(est, tru).value;
    std::size_t hits = 0;
    for (double t : gt.peak_times_s) {
      const auto it = std::lower_bound(beats.peak_times_s.begin(), beats.peak_times_s.end(), t - kTolS);
      if (it != beats.peak_times_s.end() && *it <= t + kTolS) ++hits;
    }
    const double match = static_cast<double>(hits) / static_cast<double>(gt.peak_times_s.size());
    if (err > worst_err) {
      worst_err = err;
      worst_err_hr = hr;
    }
    if (match < worst_match) {
      worst_match = match;
      worst_match_hr = hr;
    }
  }
  return {worst_err <= 2.0 && worst_match >= 0.98,
          fmt("%d recordings: worst HR error %.3f bpm at %.0f bpm (limit 2), worst match %.1f%% at %.0f bpm (limit 98%%)",
              kRecordings, worst_err, worst_err_hr, 100.0 * worst_match, worst_match_hr)};
}

// 9. HRV formulas against brute-force oracles.
Outcome hrv_oracles() {
  constexpr int kLists = 1000;
  constexpr double kTol = 1e-9;
  Rng rng(derive_seed(std::uint64_t{9}, "hrv"));
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < kLists; ++k) {
    const auto rr = testing::random_rr(rng);
    if (metrics::iqr_filter(rr) != testing::iqr_oracle(rr)) ++bad;
    const double s = metrics::sdnn(rr), s_ref = testing::sdnn_oracle(rr);
    const double r = metrics::rmssd(rr), r_ref = testing::rmssd_oracle(rr);
    worst = std::max({worst, std::abs(s - s_ref) / s_ref, std::abs(r - r_ref) / r_ref});
    if (!testing::relative_close(s, s_ref, kTol) || !testing::relative_close(r, r_ref, kTol)) ++bad;
  }
  return {bad == 0, fmt("%d lists: %d mismatches, worst relative error %.2e (limit %.0e)", kLists, bad, worst, kTol)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8. Two CLI e2e runs with one seed give byte-identical reports; so do two
// evaluations of the acceptance model.
Outcome reproducibility(const e2e::E2eConfig& cfg, const nn::DaeModel& model, const std::string& first_report) {
  const fs::path dir = fs::temp_directory_path() / "spear_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::string> reports;
  for (const char* name : {"a.json", "b.json"}) {
    const std::string cmd = std::string("\"") + SPEAR_CLI_PATH +
                            "\" e2e --seed 11 --train-segments 20 --test-recordings 3 --epochs 2 --quiet --report \"" +
                            (dir / name).string() + "\"";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status) || (WEXITSTATUS(status) != 0 && WEXITSTATUS(status) != 3)) {
      return {false, fmt("spear e2e exited with status %d", status)};
    }
    reports.push_back(read_file(dir / name));
  }
  const bool cli_same = !reports[0].empty() && reports[0] == reports[1];
  const bool eval_same = e2e::evaluate_models(cfg, model).report.dump(2) == first_report;
  return {cli_same && eval_same,
          fmt("CLI e2e reports %s (%zu bytes); acceptance evaluation rerun %s", cli_same ? "identical" : "differ",
              reports[0].size(), eval_same ? "identical" : "differs")};
}

}  // namespace

int main() {
  std::printf("SPEAR acceptance suite\n");
  run(1, "gradient correctness", gradients, 60.0);
  run(2, "erase/merge invariants", merge_invariants);
  run(3, "band-pass response", filter_response);
  run(4, "peak detection", peak_detection, 60.0);

  // 5-7 share one model trained with the default end-to-end configuration.
  const e2e::E2eConfig cfg;
  const auto train_start = Clock::now();
  std::optional<e2e::TrainedModels> models;
  std::string train_error;
  try {
    models = e2e::train_models(cfg, [](const std::string& msg) { std::fprintf(stderr, "  %s\n", msg.c_str()); });
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  const double train_s = seconds_since(train_start);

  {
    const auto start = Clock::now();
    Outcome o;
    if (!models) {
      o = {false, "training failed: " + train_error};
    } else {
      const auto held_out = e2e::make_clean_segments(60, cfg.corpus, derive_seed(cfg.seed, "held-out"));
      std::ostringstream detail;
      bool ok = train_s + seconds_since(start) <= 1800.0;
      detail << cfg.train_segments << " segments, " << cfg.epochs << " epochs, best epoch "
             << models->spear.best_epoch << "; " << held_out.size() << " held-out segments;";
      for (const std::size_t len : {64, 320, 640}) {
        const auto s = train::evaluate_patch_fill(models->spear.best_model, held_out, len,
                                                  derive_seed(cfg.seed, "patch-" + std::to_string(len)));
        ok = ok && s.model_rmse < s.zero_rmse && s.model_rmse < s.linear_rmse;
        detail << fmt(" %zu s patch: model %.4f zero %.4f linear %.4f;", len / 64, s.model_rmse, s.zero_rmse,
                      s.linear_rmse);
      }
      detail << fmt(" training %.0f s (limit 1800)", train_s);
      o = {ok, detail.str()};
    }
    report(5, "reconstruction beats naive fills", o, train_s + seconds_since(start));
  }

  std::string first_report;
  {
    const auto start = Clock::now();
    Outcome hr, hrv;
    if (!models) {
      hr = hrv = {false, "training failed: " + train_error};
    } else {
      try {
        const auto result = e2e::evaluate_models(cfg, models->spear.best_model);
        first_report = result.report.dump(2);
        const double eval_s = seconds_since(start);
        auto find = [&](const std::string& name) {
          for (const auto& c : result.checks) {
            if (c.name == name) return c;
          }
          return e2e::Check{name, false, "missing"};
        };
        const auto hr_order = find("hr_ordering"), hr_max = find("hr_spear_max");
        const auto sd = find("sdnn_ordering"), rm = find("rmssd_ordering");
        const bool in_time = eval_s <= 600.0;
        hr = {hr_order.passed && hr_max.passed && in_time,
              "HR-MAE " + hr_order.detail + "; " + hr_max.detail + fmt("; evaluation %.0f s (limit 600)", eval_s)};
        hrv = {sd.passed && rm.passed && in_time,
               "SDNN-MAE " + sd.detail + "; RMSSD-MAE " + rm.detail + fmt("; evaluation %.0f s (limit 600)", eval_s)};
      } catch (const std::exception& e) {
        hr = hrv = {false, std::string("threw: ") + e.what()};
      }
    }
    const double elapsed = seconds_since(start);
    report(6, "end-to-end HR ordering", hr, elapsed);
    report(7, "end-to-end HRV ordering", hrv, elapsed);
  }

  if (models) {
    run(8, "reproducibility", [&] { return reproducibility(cfg, models->spear.best_model, first_report); });
  } else {
    report(8, "reproducibility", {false, "training failed: " + train_error}, 0.0);
  }
  run(9, "HRV formula oracles", hrv_oracles);

  std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
