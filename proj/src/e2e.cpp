#include "spear/e2e.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "spear/detect.hpp"
#include "spear/rng.hpp"

namespace spear::e2e {

void CorpusSpec::validate() const {
  if (hr_lo_bpm > hr_hi_bpm || hrv_depth_lo_bpm > hrv_depth_hi_bpm || hrv_freq_lo_hz > hrv_freq_hi_hz) {
    throw std::invalid_argument("corpus spec: each range needs lo <= hi");
  }
  if (hr_lo_bpm - hrv_depth_hi_bpm < 30.0 || hr_hi_bpm + hrv_depth_hi_bpm > 220.0) {
    throw std::invalid_argument("corpus spec: modulated HR must stay within [30, 220] bpm");
  }
  beat.validate();
}

namespace {

std::pair<Signal, synth::GroundTruth> draw_clean(double duration_s, const CorpusSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const double hr = rng.uniform(spec.hr_lo_bpm, spec.hr_hi_bpm);
  synth::HrvModulation hrv;
  hrv.depth_bpm = rng.uniform(spec.hrv_depth_lo_bpm, spec.hrv_depth_hi_bpm);
  hrv.freq_hz = rng.uniform(spec.hrv_freq_lo_hz, spec.hrv_freq_hi_hz);
  return synth::gen_clean(duration_s, hr, hrv, spec.beat, derive_seed(seed, "beats"), spec.fs);
}

std::string rec_id(int k) {
  std::ostringstream s;
  s << "rec" << (k < 10 ? "00" : k < 100 ? "0" : "") << k;
  return s.str();
}

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

nlohmann::json mask_json(const train::MaskSpec& m) {
  return {{"patch_min_s", m.patch_min_s},
          {"patch_max_s", m.patch_max_s},
          {"min_patches", m.min_patches},
          {"max_patches", m.max_patches},
          {"masks_per_signal", m.masks_per_signal}};
}

}  // namespace

std::vector<Segment> make_clean_segments(int n, const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 0; k < n; ++k) {
    auto [clean, gt] = draw_clean(kSegmentSeconds, spec, derive_seed(seed, static_cast<std::uint64_t>(k)));
    auto segs = segment(clean, kSegmentSeconds, "train" + std::to_string(k));
    out.push_back(std::move(segs.front()));
  }
  return out;
}

std::vector<eval::EvalInput> make_test_corpus(int n, double duration_s, const CorpusSpec& spec,
                                              const synth::NoiseSpec& noise, int bursts_per_recording,
                                              std::uint64_t seed) {
  spec.validate();
  std::vector<eval::EvalInput> out;
  for (int k = 0; k < n; ++k) {
    const auto rec_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    auto [clean, gt] = draw_clean(duration_s, spec, rec_seed);
    synth::NoiseSpec ns = noise;
    ns.burst_count = bursts_per_recording;
    ns.seed = derive_seed(rec_seed, "noise");
    auto [noisy, noisy_gt] = synth::corrupt(clean, gt, ns);
    out.push_back({rec_id(k), std::move(clean), std::move(noisy), std::move(noisy_gt)});
  }
  return out;
}

StageSeeds::StageSeeds(std::uint64_t master)
    : train_corpus(derive_seed(master, "train-corpus")),
      test_corpus(derive_seed(master, "test-corpus")),
      masks(derive_seed(master, "masks")),
      shuffle(derive_seed(master, "shuffle")),
      init(derive_seed(master, "init")),
      simnoise(derive_seed(master, "simnoise")) {}

nlohmann::json E2eConfig::to_json() const {
  return {{"seed", seed},
          {"train_segments", train_segments},
          {"test_recordings", test_recordings},
          {"test_duration_s", test_duration_s},
          {"bursts_per_recording", bursts_per_recording},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"validation_fraction", validation_fraction},
          {"architecture_channels", architecture.channels},
          {"architecture_strides", architecture.strides},
          {"detector", detector},
          {"simnoise_baseline", simnoise_baseline},
          {"max_spear_hr_mae", max_spear_hr_mae},
          {"corpus",
           {{"hr_bpm", {corpus.hr_lo_bpm, corpus.hr_hi_bpm}},
            {"hrv_depth_bpm", {corpus.hrv_depth_lo_bpm, corpus.hrv_depth_hi_bpm}},
            {"hrv_freq_hz", {corpus.hrv_freq_lo_hz, corpus.hrv_freq_hi_hz}}}},
          {"noise",
           {{"bw_amp", noise.bw_amp},
            {"bw_freq_hz", noise.bw_freq_hz},
            {"fm_jitter_frac", noise.fm_jitter_frac},
            {"burst_amp", noise.burst_amp},
            {"burst_len_s", {noise.burst_len_lo_s, noise.burst_len_hi_s}}}},
          {"masks", mask_json(masks)}};
}

std::vector<Check> ordering_checks(const eval::CorpusSummary& summary, double max_spear_hr_mae) {
  using eval::Variant;
  auto value = [&](Variant v, auto member) -> std::optional<double> {
    const auto it = summary.variants.find(v);
    if (it == summary.variants.end() || !(it->second.*member)) return std::nullopt;
    return (it->second.*member)->value;
  };
  auto fmt = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s.precision(4);
    s << *v;
    return s.str();
  };
  std::vector<Check> checks;
  auto ordering = [&](const std::string& metric, auto member) {
    const auto sp = value(Variant::Spear, member);
    const auto bp = value(Variant::Bandpass, member);
    const auto raw = value(Variant::Raw, member);
    const bool ok = sp && bp && raw && *sp < *bp && *bp < *raw;
    checks.push_back({metric + "_ordering", ok,
                      "spear " + fmt(sp) + " < bandpass " + fmt(bp) + " < raw " + fmt(raw)});
  };
  ordering("hr", &eval::VariantSummary::hr);
  const auto sp_hr = value(Variant::Spear, &eval::VariantSummary::hr);
  checks.push_back({"hr_spear_max", sp_hr && *sp_hr <= max_spear_hr_mae,
                    "spear " + fmt(sp_hr) + " <= " + fmt(max_spear_hr_mae)});
  ordering("sdnn", &eval::VariantSummary::sdnn);
  ordering("rmssd", &eval::VariantSummary::rmssd);
  return checks;
}

namespace {

void check_sizes(const E2eConfig& config) {
  if (config.train_segments <= 0) throw std::invalid_argument("empty corpus");
  if (config.test_recordings <= 0) throw std::invalid_argument("e2e: need at least one test recording");
}

}  // namespace

TrainedModels train_models(const E2eConfig& config, const Progress& progress) {
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };
  check_sizes(config);
  const StageSeeds seeds(config.seed);
  note("generating training corpus");
  const auto train_segments = stage("synth", [&] {
    return make_clean_segments(config.train_segments, config.corpus, seeds.train_corpus);
  });

  train::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.lr = config.lr;
  tc.validation_fraction = config.validation_fraction;
  tc.architecture = config.architecture;
  tc.shuffle_seed = seeds.shuffle;
  tc.init_seed = seeds.init;
  auto log_epoch = [&](const train::EpochLog& e) {
    std::ostringstream s;
    s << "epoch " << e.epoch << " train_rmse " << e.train_rmse << " val_rmse " << e.val_rmse;
    note(s.str());
  };

  note("training");
  auto trained = stage("train", [&] {
    train::MaskSpec ms = config.masks;
    ms.seed = seeds.masks;
    // Synthetic clean segments carry an all-zero ground-truth mask.
    const detect::OracleDetector truth(
        BinaryMask{std::vector<std::uint8_t>(train_segments.front().signal.size(), 0), config.corpus.fs});
    const auto dataset = train::build_dataset(train_segments, ms, truth);
    return train::train_dae(dataset, tc, log_epoch);
  });

  std::optional<nn::DaeModel> simnoise;
  if (config.simnoise_baseline) {
    note("training simulated-noise baseline");
    simnoise = stage("train-simnoise", [&] {
      const auto dataset = train::build_simnoise_dataset(train_segments, config.noise, seeds.simnoise);
      train::TrainConfig sc = tc;
      sc.shuffle_seed = derive_seed(seeds.simnoise, "shuffle");
      return train::train_dae(dataset, sc, log_epoch).best_model;
    });
  }
  return {std::move(trained), std::move(simnoise)};
}

E2eResult evaluate_models(const E2eConfig& config, const nn::DaeModel& model, const nn::DaeModel* simnoise,
                          const Progress& progress) {
  check_sizes(config);
  const StageSeeds seeds(config.seed);
  if (progress) progress("generating test corpus");
  const auto test = stage("synth", [&] {
    return make_test_corpus(config.test_recordings, config.test_duration_s, config.corpus, config.noise,
                            config.bursts_per_recording, seeds.test_corpus);
  });

  if (progress) progress("evaluating");
  const auto recordings = stage("eval", [&] {
    std::vector<eval::RecordingEval> out;
    for (const auto& input : test) {
      const auto det = detect::make_detector(config.detector, &input.gt.noise_mask);
      out.push_back(eval::eval_recording(input, model, *det, simnoise));
    }
    return out;
  });

  E2eResult result;
  const auto summary = eval::summarize(recordings);
  result.checks = ordering_checks(summary, config.max_spear_hr_mae);
  result.passed = std::all_of(result.checks.begin(), result.checks.end(), [](const Check& c) { return c.passed; });
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : result.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  result.report = eval::to_json(summary, recordings);
  result.report["config"] = config.to_json();
  result.report["checks"] = std::move(checks);
  result.report["passed"] = result.passed;
  return result;
}

E2eResult run_e2e(const E2eConfig& config, const Progress& progress) {
  const auto models = train_models(config, progress);
  auto result = evaluate_models(config, models.spear.best_model, models.simnoise ? &*models.simnoise : nullptr,
                                progress);
  nlohmann::json train_log = nlohmann::json::array();
  for (const auto& e : models.spear.log) {
    train_log.push_back({{"epoch", e.epoch},
                         {"train_rmse", e.train_rmse},
                         {"val_rmse", std::isnan(e.val_rmse) ? nlohmann::json(nullptr) : nlohmann::json(e.val_rmse)}});
  }
  result.report["training"] = {{"best_epoch", models.spear.best_epoch}, {"log", std::move(train_log)}};
  return result;
}

}  // namespace spear::e2e
