#include "spear/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spear::filter {

namespace {

using cd = std::complex<double>;

struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

// Transposed direct form II, state preset to the steady state for a constant
// input equal to x[0].
void run_sections(const std::vector<Biquad>& sections, std::span<double> x) {
  if (x.empty()) return;
  std::vector<SectionState> st(sections.size());
  double u = x[0];
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = dc * u;
    st[s].z1 = y - q.b0 * u;
    st[s].z2 = q.b2 * u - q.a2 * y;
    u = y;
  }
  for (auto& v : x) {
    double in = v;
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const Biquad& q = sections[s];
      const double out = q.b0 * in + st[s].z1;
      st[s].z1 = q.b1 * in - q.a1 * out + st[s].z2;
      st[s].z2 = q.b2 * in - q.a2 * out;
      in = out;
    }
    v = in;
  }
}

}  // namespace

std::complex<double> Biquad::response(double omega) const {
  const cd z1 = std::polar(1.0, -omega);
  const cd z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

ButterworthBandpass::ButterworthBandpass(int order, double lo_hz, double hi_hz, double fs) : fs_(fs) {
  if (order < 1) throw std::invalid_argument("bandpass: order must be at least 1");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz)) throw std::invalid_argument("bandpass: invalid band (need 0 < lo < hi)");
  if (!(fs > 2.0 * hi_hz)) throw std::invalid_argument("bandpass: sampling rate must exceed twice the upper cutoff");

  const double pi = std::numbers::pi;
  const double w_lo = 2.0 * fs * std::tan(pi * lo_hz / fs);
  const double w_hi = 2.0 * fs * std::tan(pi * hi_hz / fs);
  const double w0 = std::sqrt(w_lo * w_hi);
  const double bw = w_hi - w_lo;

  std::vector<cd> upper;
  std::vector<cd> real;
  for (int k = 0; k < order; ++k) {
    const cd p = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cd pb = p * bw;
    const cd disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
    for (const cd s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      const cd z = (2.0 * fs + s) / (2.0 * fs - s);
      if (std::abs(z.imag()) < 1e-12) {
        real.push_back(z);
      } else if (z.imag() > 0.0) {
        upper.push_back(z);
      }
    }
  }
  std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::arg(a) < std::arg(b); });

  const double omega0 = 2.0 * std::atan(w0 / (2.0 * fs));
  auto push_section = [&](double a1, double a2) {
    Biquad q{1.0, 0.0, -1.0, a1, a2};
    const double g = 1.0 / std::abs(q.response(omega0));
    q.b0 *= g;
    q.b2 *= g;
    sections_.push_back(q);
  };
  for (const cd z : upper) push_section(-2.0 * z.real(), std::norm(z));
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    push_section(-(real[i].real() + real[i + 1].real()), real[i].real() * real[i + 1].real());
  }
}

std::complex<double> ButterworthBandpass::response(double f_hz) const {
  const double omega = 2.0 * std::numbers::pi * f_hz / fs_;
  cd h = 1.0;
  for (const auto& q : sections_) h *= q.response(omega);
  return h;
}

void ButterworthBandpass::filter_inplace(std::span<double> x) const { run_sections(sections_, x); }

std::vector<double> ButterworthBandpass::filtfilt(std::span<const double> x, std::size_t pad_samples) const {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(pad_samples, n - 1);

  std::vector<double> buf;
  buf.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) buf.push_back(2.0 * x[0] - x[i]);
  buf.insert(buf.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) buf.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_sections(sections_, buf);
  std::reverse(buf.begin(), buf.end());
  run_sections(sections_, buf);
  std::reverse(buf.begin(), buf.end());

  return {buf.begin() + static_cast<std::ptrdiff_t>(pad), buf.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Signal bandpass_raw(const Signal& signal, double lo_hz, double hi_hz, int order) {
  if (signal.samples.empty()) throw std::invalid_argument("empty signal");
  const ButterworthBandpass bp(order, lo_hz, hi_hz, signal.fs);
  Signal out = signal;
  out.samples = bp.filtfilt(signal.samples, static_cast<std::size_t>(std::llround(kEdgePadSeconds * signal.fs)));
  return out;
}

Signal bandpass(const Signal& signal, double lo_hz, double hi_hz, int order) {
  Signal out = bandpass_raw(signal, lo_hz, hi_hz, order);
  normalize_minmax_inplace(out.samples);
  return out;
}

Signal bandpass_regions(const JoinedSignal& joined, double lo_hz, double hi_hz, int order) {
  const Signal& sig = joined.signal;
  if (sig.samples.empty()) throw std::invalid_argument("empty signal");
  if (joined.provenance.empty()) return bandpass(sig, lo_hz, hi_hz, order);

  const ButterworthBandpass bp(order, lo_hz, hi_hz, sig.fs);
  const auto pad = static_cast<std::size_t>(std::llround(kEdgePadSeconds * sig.fs));
  const double tol = 0.5 / sig.fs;

  Signal out = sig;
  std::size_t r = 0;
  while (r < joined.provenance.size()) {
    // Extend over regions that continue each other in source time.
    std::size_t last = r;
    while (last + 1 < joined.provenance.size()) {
      const auto& a = joined.provenance[last];
      const auto& b = joined.provenance[last + 1];
      const double a_end = a.source_t0 + static_cast<double>(a.length) / sig.fs;
      if (std::abs(a_end - b.source_t0) >= tol || b.out_begin != a.out_begin + a.length) break;
      ++last;
    }
    const std::size_t begin = joined.provenance[r].out_begin;
    const std::size_t end = joined.provenance[last].out_begin + joined.provenance[last].length;
    const std::span<const double> part(sig.samples.data() + begin, end - begin);
    auto filtered = bp.filtfilt(part, pad);
    normalize_minmax_inplace(filtered);
    std::copy(filtered.begin(), filtered.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(begin));
    r = last + 1;
  }
  return out;
}

}  // namespace spear::filter
