// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace s3t {

void AudioClip::validate() const {
  if (samples.empty()) throw std::invalid_argument("audio clip has no samples");
  if (sample_rate <= 0) throw std::invalid_argument("audio clip sample rate must be positive");
  for (float v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("audio clip contains non-finite sample");
  }
}

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("not a RIFF file: " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("not a WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;

  while (in && !(have_fmt && have_data)) {
    in.read(tag, 4);
    if (!in) break;
    std::uint32_t size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      in.ignore(size > 16 ? size - 16 : 0);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      have_data = true;
    } else {
      in.ignore(size + (size & 1));
    }
  }
  if (!have_fmt || !have_data) throw std::runtime_error("wav missing fmt or data chunk: " + path);
  if (channels == 0) throw std::runtime_error("wav has zero channels: " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);

  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = data.size() / (bytes_per * channels);
  clip.samples.resize(frames);

  if (format == 1 && bits == 16) {
    const auto* p = reinterpret_cast<const std::int16_t*>(data.data());
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (std::uint16_t c = 0; c < channels; ++c) acc += p[i * channels + c] / 32768.0;
      clip.samples[i] = static_cast<float>(acc / channels);
    }
  } else if (format == 3 && bits == 32) {
    const auto* p = reinterpret_cast<const float*>(data.data());
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (std::uint16_t c = 0; c < channels; ++c) acc += p[i * channels + c];
      clip.samples[i] = static_cast<float>(acc / channels);
    }
  } else {
    throw std::runtime_error("unsupported wav encoding (need 16-bit PCM or 32-bit float): " + path);
  }
  clip.validate();
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  clip.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav file: " + path);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(clip.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (float v : clip.samples) {
    const int s = std::clamp(static_cast<int>(std::lround(v * 32768.0)), -32768, 32767);
    write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
  }
  if (!out) throw std::runtime_error("short write to wav file: " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  clip.validate();
  if (target_rate <= 0) throw std::invalid_argument("target sample rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const std::int64_t g = std::gcd<std::int64_t>(clip.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = clip.sample_rate / g;

  // Hann-windowed sinc low-pass. Cutoff (cycles per input sample) sits at
  // 0.45 of the tighter Nyquist limit; 16 zero crossings per side.
  constexpr double kPi = 3.14159265358979323846;
  const double ratio = static_cast<double>(up) / static_cast<double>(down);
  const double fc = 0.45 * std::min(1.0, ratio);
  const double half = std::ceil(16.0 / (2.0 * fc));

  const std::int64_t n_in = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;  // ceil(n*L/M)

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));

  for (std::int64_t j = 0; j < n_out; ++j) {
    // Output sample j sits at input-grid position j*M/L.
    const std::int64_t num = j * down;
    const double p = static_cast<double>(num / up) + static_cast<double>(num % up) / up;
    const std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(p - half)));
    const std::int64_t hi = std::min<std::int64_t>(n_in - 1, static_cast<std::int64_t>(std::floor(p + half)));
    double acc = 0.0;
    for (std::int64_t i = lo; i <= hi; ++i) {
      const double t = static_cast<double>(i) - p;
      const double x = 2.0 * kPi * fc * t;
      const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
      const double w = 0.5 * (1.0 + std::cos(kPi * t / half));
      acc += clip.samples[static_cast<std::size_t>(i)] * 2.0 * fc * sinc * w;
    }
    // The unit-spaced samples of the 2*fc-scaled sinc sum to 1 (fc <= 0.5),
    // so no gain correction is needed.
    out.samples[static_cast<std::size_t>(j)] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace s3t
