#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spear {

inline constexpr double kDefaultFs = 64.0;
inline constexpr double kSegmentSeconds = 30.0;
inline constexpr std::size_t kSegmentSamples = 1920;

/// Uniformly sampled PPG trace. t0 is the start offset in seconds relative to
/// the parent recording.
struct Signal {
  std::vector<double> samples;
  double fs = kDefaultFs;
  double t0 = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / fs; }
};

/// Per-sample {0,1} indicator aligned to a Signal. In the inference path a 1
/// marks an artifact sample (to be erased and reconstructed).
struct BinaryMask {
  std::vector<std::uint8_t> flags;
  double fs = kDefaultFs;

  std::size_t size() const { return flags.size(); }
  double corrupted_fraction() const;
  std::size_t count() const;
  bool any() const;
};

/// One fixed-length window of a recording.
struct Segment {
  Signal signal;
  std::string source_id;
  std::size_t index = 0;
};

/// Maps output samples [out_begin, out_begin + length) of a joined signal
/// back to the source segment they came from.
struct ProvenanceRegion {
  std::size_t out_begin = 0;
  std::size_t length = 0;
  std::size_t segment_index = 0;
  double source_t0 = 0.0;
};

struct JoinedSignal {
  Signal signal;
  std::vector<ProvenanceRegion> provenance;
};

/// Splits into floor(duration / window_s) non-overlapping windows; the
/// trailing remainder is dropped.
std::vector<Segment> segment(const Signal& recording, double window_s = kSegmentSeconds,
                             const std::string& source_id = {});

/// (x - min) / (max - min); a constant signal maps to all 0.5.
Signal normalize_minmax(const Signal& signal);
void normalize_minmax_inplace(std::span<double> samples);

/// x * (1 - mask): masked samples become exactly 0.
Signal erase(const Signal& signal, const BinaryMask& mask);

/// x_in * (1 - mask) + y_out * mask. Samples with mask = 0 are copied from
/// x_in without arithmetic, so they are bit-identical.
Signal merge(const Signal& x_in, const Signal& y_out, const BinaryMask& mask);

/// Concatenates segments (ordered by strictly increasing index) and records
/// where each one landed.
JoinedSignal join(std::span<const Segment> segments);

/// Contiguous sub-mask [begin, begin + length).
BinaryMask slice(const BinaryMask& mask, std::size_t begin, std::size_t length);

struct TimeInterval {
  double start = 0.0;
  double end = 0.0;
};

/// Source-time intervals [start, end) covered by the joined signal; regions
/// that are contiguous in source time are coalesced.
std::vector<TimeInterval> source_intervals(const JoinedSignal& joined);

/// Converts an output-time instant of a joined signal to recording time.
double to_source_time(const JoinedSignal& joined, double out_time_s);

}  // namespace spear
