#pragma once

#include <string>
#include <vector>

#include "spear/detect.hpp"
#include "spear/nn/dae.hpp"
#include "spear/signal.hpp"

namespace spear::pipeline {

struct SegmentReport {
  std::size_t index = 0;
  double corrupted_fraction = 0.0;
  bool discarded = false;
};

struct DenoiseReport {
  std::size_t segments_total = 0;
  std::size_t segments_discarded = 0;
  std::vector<SegmentReport> segments;
  std::vector<ProvenanceRegion> regions;

  std::vector<double> fractions() const;
};

struct DenoiseResult {
  /// Merged signal before band-pass: at unflagged samples it equals the
  /// min-max-normalized input segment exactly.
  JoinedSignal merged;
  /// merged after per-region band-pass and renormalization.
  Signal filtered;
  DenoiseReport report;
};

/// Per 30 s segment: normalize, detect, discard if more than 75% is flagged,
/// erase the flagged samples, reconstruct them with the model and merge; then
/// join the kept segments and band-pass each provenance region. Throws
/// "no recoverable signal" when every segment is discarded (or the recording
/// is shorter than one segment).
DenoiseResult spear_denoise(const Signal& recording, const nn::DaeModel& model, const detect::Detector& detector);

/// Baseline for a model trained on simulated noise: every segment is
/// normalized and replaced wholesale by the model output, then band-passed.
DenoiseResult reconstruct_full(const Signal& recording, const nn::DaeModel& model);

}  // namespace spear::pipeline
