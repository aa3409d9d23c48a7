#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spear/eval.hpp"
#include "spear/nn/dae.hpp"
#include "spear/synth.hpp"
#include "spear/train.hpp"

namespace spear::e2e {

/// Ranges for drawing synthetic recordings. Each recording draws its base
/// HR, modulation depth and modulation frequency uniformly from these.
struct CorpusSpec {
  double hr_lo_bpm = 60.0;
  double hr_hi_bpm = 120.0;
  double hrv_depth_lo_bpm = 2.0;
  double hrv_depth_hi_bpm = 8.0;
  double hrv_freq_lo_hz = 0.05;
  double hrv_freq_hi_hz = 0.3;
  synth::BeatTemplateParams beat{};
  double fs = kDefaultFs;

  void validate() const;
};

/// n clean 30 s segments, segment k generated from derive_seed(seed, k).
std::vector<Segment> make_clean_segments(int n, const CorpusSpec& spec, std::uint64_t seed);

/// n paired clean/noisy recordings named rec000, rec001, ...; recording k
/// uses derive_seed(seed, k) for the clean draw and a seed derived from that
/// for the noise. bursts_per_recording overrides noise.burst_count.
std::vector<eval::EvalInput> make_test_corpus(int n, double duration_s, const CorpusSpec& spec,
                                              const synth::NoiseSpec& noise, int bursts_per_recording,
                                              std::uint64_t seed);

struct E2eConfig {
  std::uint64_t seed = 7;
  int train_segments = 200;
  int test_recordings = 20;
  double test_duration_s = 180.0;
  int bursts_per_recording = 6;
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  double validation_fraction = 0.1;
  nn::DaeArchitecture architecture = nn::DaeArchitecture::light();
  std::string detector = "oracle";
  bool simnoise_baseline = false;
  double max_spear_hr_mae = 5.0;
  CorpusSpec corpus{};
  synth::NoiseSpec noise{};
  train::MaskSpec masks{};

  nlohmann::json to_json() const;
};

/// Stage seeds, all split from the master seed by label.
struct StageSeeds {
  std::uint64_t train_corpus, test_corpus, masks, shuffle, init, simnoise;
  explicit StageSeeds(std::uint64_t master);
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct E2eResult {
  nlohmann::json report;
  std::vector<Check> checks;
  bool passed = false;
};

using Progress = std::function<void(const std::string&)>;

struct TrainedModels {
  train::TrainResult spear;
  std::optional<nn::DaeModel> simnoise;  // set when simnoise_baseline is on
};

/// Training half of run_e2e: generates the clean corpus and trains the
/// autoencoder (and the simulated-noise baseline when enabled).
TrainedModels train_models(const E2eConfig& config, const Progress& progress = {});

/// Evaluation half of run_e2e: generates the test corpus, scores every
/// recording with the given models and checks the orderings. The report has
/// no training section.
E2eResult evaluate_models(const E2eConfig& config, const nn::DaeModel& model, const nn::DaeModel* simnoise = nullptr,
                          const Progress& progress = {});

/// train_models then evaluate_models. The report embeds the config, the seed
/// and the training log and excludes timings. Errors are rethrown as
/// std::runtime_error prefixed with the stage name.
E2eResult run_e2e(const E2eConfig& config, const Progress& progress = {});

/// HR: SPEAR < bandpass < raw and SPEAR <= max_hr. HRV: SPEAR < bandpass <
/// raw for SDNN and for RMSSD.
std::vector<Check> ordering_checks(const eval::CorpusSummary& summary, double max_spear_hr_mae);

}  // namespace spear::e2e
