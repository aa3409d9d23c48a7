#include "spear/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "spear/filter.hpp"

namespace spear::pipeline {

std::vector<double> DenoiseReport::fractions() const {
  std::vector<double> f;
  f.reserve(segments.size());
  for (const auto& s : segments) f.push_back(s.corrupted_fraction);
  return f;
}

namespace {

void check_shape(const Signal& recording, const nn::DaeModel& model) {
  const auto seg_len = static_cast<std::size_t>(std::llround(kSegmentSeconds * recording.fs));
  if (seg_len != static_cast<std::size_t>(model.architecture().input_length)) {
    throw std::invalid_argument("model expects " + std::to_string(model.architecture().input_length) +
                                "-sample segments but the recording yields " + std::to_string(seg_len));
  }
}

DenoiseResult finish(std::vector<Segment> kept, DenoiseReport report) {
  if (kept.empty()) throw std::runtime_error("no recoverable signal");
  DenoiseResult result;
  result.merged = join(kept);
  result.filtered = filter::bandpass_regions(result.merged);
  report.regions = result.merged.provenance;
  result.report = std::move(report);
  return result;
}

}  // namespace

DenoiseResult spear_denoise(const Signal& recording, const nn::DaeModel& model, const detect::Detector& detector) {
  check_shape(recording, model);
  auto segments = segment(recording);

  DenoiseReport report;
  report.segments_total = segments.size();

  std::vector<Segment> kept;
  std::vector<BinaryMask> masks;
  for (auto& seg : segments) {
    seg.signal = normalize_minmax(seg.signal);
    auto detection = detector.detect(seg);
    if (detection.mask.size() != seg.signal.size()) throw std::runtime_error("detector returned a mask of the wrong length");
    const double fraction = detection.mask.corrupted_fraction();
    const bool discard = detect::discard_rule(detection.mask) == detect::Decision::Discard;
    report.segments.push_back({seg.index, fraction, discard});
    if (discard) {
      ++report.segments_discarded;
      continue;
    }
    kept.push_back(std::move(seg));
    masks.push_back(std::move(detection.mask));
  }

  std::vector<std::size_t> todo;
  std::vector<Signal> erased;
  std::vector<std::vector<double>> inputs;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (!masks[k].any()) continue;
    todo.push_back(k);
    erased.push_back(erase(kept[k].signal, masks[k]));
    inputs.push_back(erased.back().samples);
  }
  const auto outputs = model.reconstruct(inputs);
  for (std::size_t j = 0; j < todo.size(); ++j) {
    Segment& seg = kept[todo[j]];
    Signal y_out = seg.signal;
    y_out.samples = outputs[j];
    seg.signal = merge(erased[j], y_out, masks[todo[j]]);
  }
  return finish(std::move(kept), std::move(report));
}

DenoiseResult reconstruct_full(const Signal& recording, const nn::DaeModel& model) {
  check_shape(recording, model);
  auto segments = segment(recording);
  DenoiseReport report;
  report.segments_total = segments.size();
  std::vector<std::vector<double>> inputs;
  for (auto& seg : segments) {
    seg.signal = normalize_minmax(seg.signal);
    inputs.push_back(seg.signal.samples);
    report.segments.push_back({seg.index, 1.0, false});
  }
  const auto outputs = model.reconstruct(inputs);
  for (std::size_t k = 0; k < segments.size(); ++k) segments[k].signal.samples = outputs[k];
  return finish(std::move(segments), std::move(report));
}

}  // namespace spear::pipeline
