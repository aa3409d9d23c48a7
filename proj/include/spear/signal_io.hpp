#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spear/signal.hpp"

namespace spear::io {

// ppgcsv: line 1 is `fs=<integer Hz>`, then one decimal sample per line
// (written with 9 significant digits). Lines starting with '#' after the fs
// line are comments; writers use them to embed the producing config.
// Mask files share the layout with one 0/1 per line. Peak files hold one
// peak time in seconds per line, with optional '#' comment lines.

Signal read_ppgcsv(const std::filesystem::path& path);
void write_ppgcsv(const std::filesystem::path& path, const Signal& signal,
                  const std::vector<std::string>& comments = {});

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask,
                const std::vector<std::string>& comments = {});

std::vector<double> read_peaks(const std::filesystem::path& path);
void write_peaks(const std::filesystem::path& path, const std::vector<double>& peak_times_s,
                 const std::vector<std::string>& comments = {});

}  // namespace spear::io
