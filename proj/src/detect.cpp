#include "spear/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spear/signal_io.hpp"

namespace spear::detect {

namespace {

void check_segment_length(const Segment& segment) {
  const auto expected = static_cast<std::size_t>(std::llround(kSegmentSeconds * segment.signal.fs));
  if (segment.signal.size() != expected) {
    throw std::invalid_argument("detect: segment must hold exactly 30 s of samples (got " +
                                std::to_string(segment.signal.size()) + ", expected " + std::to_string(expected) + ")");
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

std::vector<double> robust_z(const std::vector<double>& f) {
  const double med = median(f);
  std::vector<double> dev(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) dev[i] = std::abs(f[i] - med);
  const double mad = 1.4826 * median(dev);
  std::vector<double> z(f.size(), 0.0);
  const double scale = mad > 1e-12 ? mad : 1e-12;
  for (std::size_t i = 0; i < f.size(); ++i) z[i] = (f[i] - med) / scale;
  return z;
}

}  // namespace

DetectorOutput threshold(std::vector<double> probs, double fs) {
  DetectorOutput out;
  out.mask.fs = fs;
  out.mask.flags.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out.mask.flags[i] = probs[i] >= kProbThreshold ? 1 : 0;
  out.probs = std::move(probs);
  return out;
}

OracleDetector::OracleDetector(BinaryMask recording_mask) : mask_(std::move(recording_mask)) {}

DetectorOutput OracleDetector::detect(const Segment& segment) const {
  check_segment_length(segment);
  const std::size_t n = segment.signal.size();
  const std::size_t begin = segment.index * n;
  if (begin + n > mask_.size()) throw std::invalid_argument("detect: mask shorter than the recording");
  const BinaryMask part = slice(mask_, begin, n);
  std::vector<double> probs(part.flags.begin(), part.flags.end());
  return threshold(std::move(probs), segment.signal.fs);
}

ExternalMaskDetector::ExternalMaskDetector(const std::filesystem::path& mask_path)
    : OracleDetector(io::read_mask(mask_path)), path_(mask_path.string()) {}

DetectorOutput HeuristicDetector::detect(const Segment& segment) const {
  check_segment_length(segment);
  const auto& x = segment.signal.samples;
  const std::size_t n = x.size();
  const auto frame = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(cfg_.frame_s * segment.signal.fs)));
  const std::size_t frames = (n + frame - 1) / frame;

  std::vector<double> energy(frames, 0.0);
  std::vector<double> range(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = f * frame;
    const std::size_t end = std::min(n, begin + frame);
    double lo = x[begin];
    double hi = x[begin];
    double e = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
      if (i > 0) e += (x[i] - x[i - 1]) * (x[i] - x[i - 1]);
    }
    energy[f] = e / static_cast<double>(end - begin);
    range[f] = hi - lo;
  }
  const auto ze = robust_z(energy);
  const auto zr = robust_z(range);

  const auto dilate = static_cast<std::size_t>(std::llround(cfg_.dilation_s * segment.signal.fs));
  std::vector<double> probs(n, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    if (ze[f] <= cfg_.k && zr[f] <= cfg_.k) continue;
    const std::size_t begin = f * frame;
    const std::size_t end = std::min(n, begin + frame);
    const std::size_t lo = begin > dilate ? begin - dilate : 0;
    const std::size_t hi = std::min(n, end + dilate);
    std::fill(probs.begin() + static_cast<std::ptrdiff_t>(lo), probs.begin() + static_cast<std::ptrdiff_t>(hi), 1.0);
  }
  return threshold(std::move(probs), segment.signal.fs);
}

std::unique_ptr<Detector> make_detector(const std::string& spec, const BinaryMask* oracle_mask) {
  if (spec == "oracle") {
    if (!oracle_mask) throw std::invalid_argument("oracle detector needs a ground-truth mask");
    return std::make_unique<OracleDetector>(*oracle_mask);
  }
  if (spec == "heuristic") return std::make_unique<HeuristicDetector>();
  if (spec.rfind("external:", 0) == 0) return std::make_unique<ExternalMaskDetector>(spec.substr(9));
  throw std::invalid_argument("unknown detector '" + spec + "' (expected oracle|heuristic|external:<path>)");
}

bool is_clean(const Segment& segment, const Detector& detector) { return !detector.detect(segment).mask.any(); }

Decision discard_rule(const BinaryMask& mask) {
  return mask.corrupted_fraction() > kDiscardFraction ? Decision::Discard : Decision::Keep;
}

}  // namespace spear::detect
