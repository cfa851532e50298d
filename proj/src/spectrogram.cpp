// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/spectrogram.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace s3t {

void Spectrogram::validate() const {
  if (values.size() == 0) throw std::invalid_argument("spectrogram is empty");
  for (int f = 0; f < f_bins(); ++f) {
    for (int t = 0; t < t_frames(); ++t) {
      const float v = values(f, t);
      if (!std::isfinite(v) || v < 0.0f) {
        throw std::invalid_argument("spectrogram entries must be finite and non-negative");
      }
    }
  }
}

namespace {
constexpr char kMagic[8] = {'S', '3', 'T', 'S', 'P', 'E', 'C', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 4);
}
std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_spectrogram(const std::string& path, const Spectrogram& spec,
                       const std::map<std::string, std::string>& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write spectrogram cache: " + path);
  out.write(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(spec.f_bins()));
  put_u32(out, static_cast<std::uint32_t>(spec.t_frames()));
  const float fr = static_cast<float>(spec.frame_rate);
  std::uint32_t frbits;
  std::memcpy(&frbits, &fr, 4);
  put_u32(out, frbits);
  out.write(reinterpret_cast<const char*>(spec.values.data()),
            static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
  if (!out) throw std::runtime_error("short write to spectrogram cache: " + path);

  if (!meta.empty()) {
    std::ofstream m(path + ".meta");
    for (const auto& [k, v] : meta) m << k << "=" << v << "\n";
  }
}

Spectrogram read_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spectrogram cache: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("bad spectrogram cache magic: " + path);
  }
  const std::uint32_t f = get_u32(in);
  const std::uint32_t t = get_u32(in);
  const std::uint32_t frbits = get_u32(in);
  float fr;
  std::memcpy(&fr, &frbits, 4);
  Spectrogram spec;
  spec.frame_rate = fr;
  spec.values.resize(f, t);
  in.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
  if (!in) throw std::runtime_error("truncated spectrogram cache: " + path);
  return spec;
}

std::map<std::string, std::string> read_spectrogram_meta(const std::string& path) {
  std::map<std::string, std::string> meta;
  std::ifstream m(path + ".meta");
  std::string line;
  while (std::getline(m, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace s3t
