#include "spear/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spear {

double BinaryMask::corrupted_fraction() const {
  if (flags.empty()) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(flags.size());
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; }));
}

bool BinaryMask::any() const {
  return std::any_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; });
}

std::vector<Segment> segment(const Signal& recording, double window_s, const std::string& source_id) {
  if (recording.samples.empty()) throw std::invalid_argument("empty signal");
  if (!(recording.fs > 0.0)) throw std::invalid_argument("segment: sampling rate must be positive");
  if (!(window_s > 0.0)) throw std::invalid_argument("segment: window must be positive");

  const auto window = static_cast<std::size_t>(std::llround(window_s * recording.fs));
  if (window == 0) throw std::invalid_argument("segment: window shorter than one sample");
  const std::size_t count = recording.size() / window;

  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Segment seg;
    seg.source_id = source_id;
    seg.index = i;
    seg.signal.fs = recording.fs;
    seg.signal.t0 = recording.t0 + static_cast<double>(i) * window_s;
    const auto first = recording.samples.begin() + static_cast<std::ptrdiff_t>(i * window);
    seg.signal.samples.assign(first, first + static_cast<std::ptrdiff_t>(window));
    out.push_back(std::move(seg));
  }
  return out;
}

void normalize_minmax_inplace(std::span<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty signal");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(samples.begin(), samples.end(), 0.5);
    return;
  }
  const double range = hi - lo;
  for (auto& v : samples) v = (v - lo) / range;
}

Signal normalize_minmax(const Signal& signal) {
  Signal out = signal;
  normalize_minmax_inplace(out.samples);
  return out;
}

Signal erase(const Signal& signal, const BinaryMask& mask) {
  if (signal.size() != mask.size()) throw std::invalid_argument("erase: signal and mask lengths differ");
  Signal out = signal;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.flags[i]) out.samples[i] = 0.0;
  }
  return out;
}

Signal merge(const Signal& x_in, const Signal& y_out, const BinaryMask& mask) {
  if (x_in.size() != mask.size() || y_out.size() != mask.size()) {
    throw std::invalid_argument("merge: input, reconstruction and mask lengths differ");
  }
  Signal out = x_in;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.flags[i]) out.samples[i] = y_out.samples[i];
  }
  return out;
}

JoinedSignal join(std::span<const Segment> segments) {
  JoinedSignal out;
  if (segments.empty()) return out;
  out.signal.fs = segments.front().signal.fs;
  out.signal.t0 = segments.front().signal.t0;

  std::size_t total = 0;
  for (const auto& s : segments) total += s.signal.size();
  out.signal.samples.reserve(total);

  for (std::size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    if (s.signal.fs != out.signal.fs) throw std::invalid_argument("join: mixed sampling rates");
    if (k > 0 && s.index <= segments[k - 1].index) {
      throw std::invalid_argument("join: segments must be ordered by increasing index");
    }
    const std::size_t begin = out.signal.samples.size();
    out.signal.samples.insert(out.signal.samples.end(), s.signal.samples.begin(), s.signal.samples.end());
    out.provenance.push_back({begin, s.signal.size(), s.index, s.signal.t0});
  }
  return out;
}

BinaryMask slice(const BinaryMask& mask, std::size_t begin, std::size_t length) {
  if (begin + length > mask.size()) throw std::invalid_argument("slice: range exceeds mask length");
  BinaryMask out;
  out.fs = mask.fs;
  const auto first = mask.flags.begin() + static_cast<std::ptrdiff_t>(begin);
  out.flags.assign(first, first + static_cast<std::ptrdiff_t>(length));
  return out;
}

std::vector<TimeInterval> source_intervals(const JoinedSignal& joined) {
  std::vector<TimeInterval> out;
  out.reserve(joined.provenance.size());
  const double tol = 0.5 / joined.signal.fs;
  for (const auto& r : joined.provenance) {
    const TimeInterval iv{r.source_t0, r.source_t0 + static_cast<double>(r.length) / joined.signal.fs};
    // Regions that abut in source time form one continuous interval.
    if (!out.empty() && std::abs(out.back().end - iv.start) < tol) {
      out.back().end = iv.end;
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

double to_source_time(const JoinedSignal& joined, double out_time_s) {
  const double fs = joined.signal.fs;
  for (const auto& r : joined.provenance) {
    const double begin = static_cast<double>(r.out_begin) / fs;
    const double end = static_cast<double>(r.out_begin + r.length) / fs;
    if (out_time_s >= begin && out_time_s < end) return r.source_t0 + (out_time_s - begin);
  }
  if (!joined.provenance.empty()) {
    const auto& last = joined.provenance.back();
    return last.source_t0 + (out_time_s - static_cast<double>(last.out_begin) / fs);
  }
  return out_time_s;
}

}  // namespace spear
