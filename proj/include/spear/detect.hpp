#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "spear/signal.hpp"

namespace spear::detect {

inline constexpr double kProbThreshold = 0.5;
inline constexpr double kDiscardFraction = 0.75;

struct DetectorOutput {
  std::vector<double> probs;
  BinaryMask mask;  // probs >= 0.5
};

/// mask[i] = probs[i] >= 0.5.
DetectorOutput threshold(std::vector<double> probs, double fs);

/// Per-sample artifact probabilities for one 30 s segment.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectorOutput detect(const Segment& segment) const = 0;
  virtual std::string name() const = 0;
};

/// Returns a known recording-level mask, sliced at the segment position.
class OracleDetector : public Detector {
 public:
  explicit OracleDetector(BinaryMask recording_mask);
  DetectorOutput detect(const Segment& segment) const override;
  std::string name() const override { return "oracle"; }

 protected:
  BinaryMask mask_;
};

/// Same slicing as the oracle, but the mask comes from a file produced by an
/// external segmentation model.
class ExternalMaskDetector : public OracleDetector {
 public:
  explicit ExternalMaskDetector(const std::filesystem::path& mask_path);
  std::string name() const override { return "external:" + path_; }

 private:
  std::string path_;
};

struct HeuristicConfig {
  double frame_s = 0.5;
  double k = 3.5;
  double dilation_s = 0.25;
};

/// Frame-level robust outlier detector: per 0.5 s frame, first-difference
/// energy and amplitude range are scored as robust z-scores against the
/// segment median/MAD; a frame is an artifact if either exceeds k. Flagged
/// frames are dilated by dilation_s on both sides.
class HeuristicDetector : public Detector {
 public:
  explicit HeuristicDetector(HeuristicConfig cfg = {}) : cfg_(cfg) {}
  DetectorOutput detect(const Segment& segment) const override;
  std::string name() const override { return "heuristic"; }
  const HeuristicConfig& config() const { return cfg_; }

 private:
  HeuristicConfig cfg_;
};

/// Parses `oracle`, `heuristic` or `external:<path>`. The oracle needs the
/// ground-truth mask of the recording being processed.
std::unique_ptr<Detector> make_detector(const std::string& spec, const BinaryMask* oracle_mask = nullptr);

/// True iff the detector flags no sample of the segment.
bool is_clean(const Segment& segment, const Detector& detector);

enum class Decision { Keep, Discard };

/// Discard iff more than 75% of the segment is flagged.
Decision discard_rule(const BinaryMask& mask);

}  // namespace spear::detect
