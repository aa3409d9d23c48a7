#pragma once

#include <complex>
#include <span>
#include <vector>

#include "spear/signal.hpp"

namespace spear::filter {

/// Normalized second-order section: y = b0 x + b1 x1 + b2 x2 - a1 y1 - a2 y2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double omega) const;
};

/// Prototype order of the digital Butterworth band-pass (the band-pass itself
/// has twice this order, realized as `order` biquads).
inline constexpr int kDefaultBandpassOrder = 8;
inline constexpr double kBandLoHz = 0.9;
inline constexpr double kBandHiHz = 5.0;
inline constexpr double kEdgePadSeconds = 3.0;

/// Digital Butterworth band-pass designed by the bilinear transform with
/// frequency prewarping. Each section is scaled to unit gain at the
/// geometric centre frequency.
class ButterworthBandpass {
 public:
  ButterworthBandpass(int order, double lo_hz, double hi_hz, double fs);

  const std::vector<Biquad>& sections() const { return sections_; }
  double fs() const { return fs_; }

  /// Complex response of one forward pass at f_hz.
  std::complex<double> response(double f_hz) const;

  /// One causal pass in place, zero initial state.
  void filter_inplace(std::span<double> x) const;

  /// Forward-backward pass (zero phase, squared magnitude) with odd
  /// reflection padding of pad_samples at each end.
  std::vector<double> filtfilt(std::span<const double> x, std::size_t pad_samples) const;

 private:
  std::vector<Biquad> sections_;
  double fs_;
};

/// Zero-phase band-pass without the final renormalization.
Signal bandpass_raw(const Signal& signal, double lo_hz = kBandLoHz, double hi_hz = kBandHiHz,
                    int order = kDefaultBandpassOrder);

/// Zero-phase band-pass followed by min-max renormalization to [0, 1].
Signal bandpass(const Signal& signal, double lo_hz = kBandLoHz, double hi_hz = kBandHiHz,
                int order = kDefaultBandpassOrder);

/// Band-passes and renormalizes each provenance region of a joined signal
/// independently, so no filter state crosses a discard gap.
Signal bandpass_regions(const JoinedSignal& joined, double lo_hz = kBandLoHz, double hi_hz = kBandHiHz,
                        int order = kDefaultBandpassOrder);

}  // namespace spear::filter
