#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spear/detect.hpp"
#include "spear/metrics.hpp"
#include "spear/nn/dae.hpp"
#include "spear/pipeline.hpp"
#include "spear/synth.hpp"

namespace spear::eval {

/// Ways of turning a noisy recording into beats: peaks on the normalized
/// noisy signal, on its band-passed version, on the output of a model
/// trained on simulated noise, and on the erase/reconstruct/merge output.
enum class Variant { Raw, Bandpass, SimNoise, Spear };

std::string to_string(Variant v);

struct EvalInput {
  std::string id;
  Signal clean;
  Signal noisy;
  synth::GroundTruth gt;
};

struct VariantResult {
  std::vector<metrics::HrWindow> hr;
  std::vector<metrics::HrvWindow> hrv;
  std::size_t peaks = 0;
  std::optional<std::string> error;  // set when the variant produced no output
};

struct RecordingEval {
  std::string id;
  double duration_s = 0.0;
  std::vector<metrics::HrWindow> truth_hr;
  std::vector<metrics::HrvWindow> truth_hrv;
  std::map<Variant, VariantResult> variants;
  std::optional<pipeline::DenoiseReport> spear_report;
};

struct EvalConfig {
  metrics::HrWindowConfig hr{};
  metrics::HrvWindowConfig hrv{};
  metrics::PeakDetectorConfig peaks{};
};

/// Scores every variant of one recording against windows computed from the
/// ground-truth beat times. The SimNoise variant runs only when a model for
/// it is supplied.
RecordingEval eval_recording(const EvalInput& input, const nn::DaeModel& model, const detect::Detector& detector,
                             const nn::DaeModel* simnoise_model = nullptr, const EvalConfig& cfg = {});

struct VariantSummary {
  std::optional<metrics::MaeResult> hr;
  std::optional<metrics::MaeResult> sdnn;
  std::optional<metrics::MaeResult> rmssd;
};

struct CorpusSummary {
  std::map<Variant, VariantSummary> variants;
};

/// Pools every window of every recording per variant, in id order, then
/// takes the MAE.
/// A metric with no comparable window stays empty.
CorpusSummary summarize(const std::vector<RecordingEval>& recordings);

/// Canonical report: recordings sorted by id, windows by start time, no
/// timing information, so equal inputs give byte-identical dumps.
nlohmann::json to_json(const CorpusSummary& summary, const std::vector<RecordingEval>& recordings);
nlohmann::json to_json(const pipeline::DenoiseReport& report);

}  // namespace spear::eval
