// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/cqt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace s3t {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double CqtConfig::bin_frequency(int k) const {
  return fmin * std::pow(2.0, static_cast<double>(k) / bins_per_octave);
}

void CqtConfig::validate(int sample_rate) const {
  if (bins <= 0 || bins_per_octave <= 0 || hop <= 0 || fmin <= 0.0 || gain <= 0.0) {
    throw std::invalid_argument("cqt config fields must be positive");
  }
  if (bins % bins_per_octave != 0) {
    throw std::invalid_argument("cqt bins must be divisible by bins_per_octave");
  }
  if (fmin * std::pow(2.0, static_cast<double>(bins) / bins_per_octave) >= sample_rate / 2.0) {
    throw std::invalid_argument("cqt top bin exceeds Nyquist at sample rate " +
                                std::to_string(sample_rate));
  }
}

Spectrogram cqt(const AudioClip& clip, const CqtConfig& cfg) {
  clip.validate();
  cfg.validate(clip.sample_rate);

  const double q = 1.0 / (std::pow(2.0, 1.0 / cfg.bins_per_octave) - 1.0);
  const int sr = clip.sample_rate;
  const auto n = static_cast<std::int64_t>(clip.samples.size());

  // One Hann-windowed complex atom per bin, window-sum normalized.
  struct Atom {
    std::vector<float> re, im;
    int len = 0;
  };
  std::vector<Atom> atoms(cfg.bins);
  int longest = 0;
  for (int k = 0; k < cfg.bins; ++k) {
    const double fk = cfg.bin_frequency(k);
    const int len = std::max(2, static_cast<int>(std::lround(q * sr / fk)));
    atoms[k].len = len;
    atoms[k].re.resize(len);
    atoms[k].im.resize(len);
    double wsum = 0.0;
    std::vector<double> win(len);
    for (int i = 0; i < len; ++i) {
      win[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (len - 1)));
      wsum += win[i];
    }
    for (int i = 0; i < len; ++i) {
      const double phase = 2.0 * kPi * fk * (i - len / 2) / sr;
      atoms[k].re[i] = static_cast<float>(win[i] / wsum * std::cos(phase));
      atoms[k].im[i] = static_cast<float>(win[i] / wsum * std::sin(phase));
    }
    longest = std::max(longest, len);
  }
  if (n < longest) {
    throw std::invalid_argument("clip too short for cqt: " + std::to_string(n) + " samples, longest filter " +
                                std::to_string(longest));
  }

  const int t_frames = static_cast<int>(n / cfg.hop) + 1;
  Spectrogram spec;
  spec.frame_rate = static_cast<double>(sr) / cfg.hop;
  spec.values.resize(cfg.bins, t_frames);

  const float* x = clip.samples.data();
  for (int k = 0; k < cfg.bins; ++k) {
    const Atom& a = atoms[k];
    for (int t = 0; t < t_frames; ++t) {
      const std::int64_t center = static_cast<std::int64_t>(t) * cfg.hop;
      const std::int64_t start = center - a.len / 2;
      const int lo = static_cast<int>(std::max<std::int64_t>(0, -start));
      const int hi = static_cast<int>(std::min<std::int64_t>(a.len, n - start));
      double re = 0.0, im = 0.0;
      const float* xs = x + start;
      for (int i = lo; i < hi; ++i) {
        re += xs[i] * a.re[i];
        im += xs[i] * a.im[i];
      }
      spec.values(k, t) = static_cast<float>(std::log1p(cfg.gain * std::sqrt(re * re + im * im)));
    }
  }
  return spec;
}

Spectrogram compress_time(const Spectrogram& spec, int factor) {
  spec.validate();
  if (factor < 1) throw std::invalid_argument("compress factor must be >= 1");
  if (spec.t_frames() < factor) {
    throw std::invalid_argument("spectrogram has fewer frames than the compression factor");
  }
  if (factor == 1) return spec;

  const int t_out = spec.t_frames() / factor;
  Spectrogram out;
  out.frame_rate = spec.frame_rate / factor;
  out.values.resize(spec.f_bins(), t_out);
  for (int f = 0; f < spec.f_bins(); ++f) {
    for (int j = 0; j < t_out; ++j) {
      double acc = 0.0;
      for (int i = 0; i < factor; ++i) acc += spec.values(f, j * factor + i);
      out.values(f, j) = static_cast<float>(acc / factor);
    }
  }
  return out;
}

}  // namespace s3t
