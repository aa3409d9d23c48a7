#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "spear/nn/dae.hpp"

namespace spear::nn {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

nlohmann::json arch_to_json(const DaeArchitecture& a) {
  return {{"channels", a.channels},       {"strides", a.strides},
          {"kernel", a.kernel},           {"head_kernel", a.head_kernel},
          {"input_length", a.input_length}, {"block_order", "conv-relu-bn"},
          {"head_activation", "sigmoid"}};
}

DaeArchitecture arch_from_json(const nlohmann::json& j) {
  DaeArchitecture a;
  a.channels = j.at("channels").get<std::vector<int>>();
  a.kernel = j.at("kernel").get<int>();
  a.strides = j.at("strides").get<std::vector<int>>();
  a.head_kernel = j.at("head_kernel").get<int>();
  a.input_length = j.at("input_length").get<int>();
  return a;
}

}  // namespace

std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = std::uint32_t{bytes[i]} << 16;
    if (i + 1 < bytes.size()) v |= std::uint32_t{bytes[i + 1]} << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += (i + 1 < bytes.size()) ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int k = 0; k < 64; ++k) lut[static_cast<unsigned char>(kAlphabet[k])] = k;

  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (const char c : text) {
    if (c == '=') break;
    const int v = lut[static_cast<unsigned char>(c)];
    if (v < 0) throw std::runtime_error("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, DaeModel& model, const std::string& metadata_json) {
  nlohmann::json j;
  j["format"] = "spear-dae";
  j["version"] = kFormatVersion;
  j["architecture"] = arch_to_json(model.architecture());
  j["metadata"] = nlohmann::json::parse(metadata_json);
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, values] : model.state()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(values->data());
    tensors[name] = {{"size", values->size()},
                     {"data", base64_encode({bytes, values->size() * sizeof(double)})}};
  }
  j["tensors"] = std::move(tensors);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

DaeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "spear-dae") throw std::runtime_error("checkpoint " + path.string() + ": unknown format");
  if (j.value("version", 0) != kFormatVersion) {
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported version");
  }
  DaeModel model(arch_from_json(j.at("architecture")), 0);
  const auto& tensors = j.at("tensors");
  for (const auto& [name, values] : model.state()) {
    if (!tensors.contains(name)) throw std::runtime_error("checkpoint missing tensor " + name);
    const auto bytes = base64_decode(tensors.at(name).at("data").get<std::string>());
    if (bytes.size() != values->size() * sizeof(double)) {
      throw std::runtime_error("checkpoint tensor " + name + " has the wrong size");
    }
    std::memcpy(values->data(), bytes.data(), bytes.size());
  }
  return model;
}

}  // namespace spear::nn
