#include "spear/signal_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace spear::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

double read_fs_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto s = trim(line);
  if (s.substr(0, 3) != "fs=") throw std::runtime_error(path.string() + ": first line must be fs=<Hz>");
  const double fs = parse_double(s.substr(3), path, 1);
  if (!(fs > 0.0)) throw std::runtime_error(path.string() + ": sampling rate must be positive");
  return fs;
}

template <typename Fn>
void for_each_value_line(std::istream& in, std::size_t first_line_no, Fn&& fn) {
  std::string line;
  std::size_t line_no = first_line_no;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    fn(s, line_no);
  }
}

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

std::string format_fs(double fs) {
  char buf[32];
  if (fs == static_cast<double>(static_cast<long long>(fs))) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(fs));
  } else {
    std::snprintf(buf, sizeof buf, "%.9g", fs);
  }
  return buf;
}

}  // namespace

Signal read_ppgcsv(const std::filesystem::path& path) {
  auto in = open_in(path);
  Signal sig;
  sig.fs = read_fs_header(in, path);
  for_each_value_line(in, 1, [&](std::string_view s, std::size_t n) { sig.samples.push_back(parse_double(s, path, n)); });
  if (sig.samples.empty()) throw std::runtime_error(path.string() + ": no samples");
  return sig;
}

void write_ppgcsv(const std::filesystem::path& path, const Signal& signal, const std::vector<std::string>& comments) {
  auto out = open_out(path);
  out << "fs=" << format_fs(signal.fs) << '\n';
  write_comments(out, comments);
  char buf[40];
  for (const double v : signal.samples) {
    std::snprintf(buf, sizeof buf, "%.9g\n", v);
    out << buf;
  }
}

BinaryMask read_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  BinaryMask mask;
  mask.fs = read_fs_header(in, path);
  for_each_value_line(in, 1, [&](std::string_view s, std::size_t n) {
    if (s == "0") {
      mask.flags.push_back(0);
    } else if (s == "1") {
      mask.flags.push_back(1);
    } else {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": mask values must be 0 or 1");
    }
  });
  return mask;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask, const std::vector<std::string>& comments) {
  auto out = open_out(path);
  out << "fs=" << format_fs(mask.fs) << '\n';
  write_comments(out, comments);
  for (const auto f : mask.flags) out << (f ? "1\n" : "0\n");
}

std::vector<double> read_peaks(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> peaks;
  for_each_value_line(in, 0, [&](std::string_view s, std::size_t n) { peaks.push_back(parse_double(s, path, n)); });
  return peaks;
}

void write_peaks(const std::filesystem::path& path, const std::vector<double>& peak_times_s,
                 const std::vector<std::string>& comments) {
  auto out = open_out(path);
  write_comments(out, comments);
  char buf[40];
  for (const double t : peak_times_s) {
    std::snprintf(buf, sizeof buf, "%.9g\n", t);
    out << buf;
  }
}

}  // namespace spear::io
