// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "s3t/audio.hpp"
#include "s3t/cqt.hpp"
#include "s3t/rng.hpp"
#include "s3t/spectrogram.hpp"

namespace {

s3t::AudioClip sine(double freq, int rate, double seconds, double amp = 0.5) {
  s3t::AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(rate * seconds);
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * freq * i / rate));
  }
  return c;
}

// Independent direct-DFT peak finder (no shared code with resample).
double dft_peak_hz(const std::vector<float>& x, int rate, std::size_t n_fft) {
  double best_mag = -1.0;
  std::size_t best_k = 0;
  const std::size_t n = std::min(n_fft, x.size());
  for (std::size_t k = 1; k < n / 2; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double phi = -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n);
      acc += static_cast<double>(x[i]) * std::complex<double>(std::cos(phi), std::sin(phi));
    }
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * rate / static_cast<double>(n);
}

}  // namespace

TEST_CASE("resample at the source rate returns identical samples") {
  const auto clip = sine(440.0, 22050, 0.5);
  const auto out = s3t::resample(clip, 22050);
  REQUIRE(out.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) CHECK(out.samples[i] == clip.samples[i]);
}

TEST_CASE("resample output length is ceil(n * target / source)") {
  for (std::size_t n : {1000u, 1001u, 44100u}) {
    s3t::AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples.assign(n, 0.1f);
    const auto out = s3t::resample(clip, 22050);
    CHECK(out.samples.size() == (n + 1) / 2);  // ceil(n/2)
    CHECK(out.sample_rate == 22050);
  }
}

TEST_CASE("resample empty input is rejected") {
  s3t::AudioClip clip;
  clip.sample_rate = 44100;
  CHECK_THROWS(s3t::resample(clip, 22050));
}

TEST_CASE("440 Hz tone keeps its spectral peak through 16 kHz -> 22.05 kHz") {
  const auto clip = sine(440.0, 16000, 1.0);
  const auto out = s3t::resample(clip, 22050);
  const std::size_t n_fft = 8192;
  const double bin_hz = 22050.0 / static_cast<double>(n_fft);
  // Skip the filter warm-up region at the clip head.
  std::vector<float> mid(out.samples.begin() + 2000, out.samples.begin() + 2000 + n_fft);
  const double peak = dft_peak_hz(mid, 22050, n_fft);
  CHECK(std::abs(peak - 440.0) <= bin_hz + 1e-9);
}

TEST_CASE("adjacent CQT bin frequencies are spaced by exactly 2^(1/12)") {
  const s3t::CqtConfig cfg;
  const double ratio = std::pow(2.0, 1.0 / 12.0);
  for (int k = 1; k < cfg.bins; ++k) {
    CHECK(cfg.bin_frequency(k) / cfg.bin_frequency(k - 1) == doctest::Approx(ratio).epsilon(1e-12));
  }
  CHECK(cfg.bin_frequency(0) == doctest::Approx(32.70));
}

TEST_CASE("pure tones at bin centers produce per-frame argmax at that bin") {
  const s3t::CqtConfig cfg;
  for (int bin : {0, 12, 36, 83}) {
    CAPTURE(bin);
    const auto clip = sine(cfg.bin_frequency(bin), 22050, 10.0);
    const auto spec = s3t::cqt(clip, cfg);
    REQUIRE(spec.f_bins() == 84);
    REQUIRE(spec.t_frames() == static_cast<int>(clip.samples.size()) / cfg.hop + 1);
    for (int t = 2; t < spec.t_frames() - 2; ++t) {
      Eigen::Index arg = 0;
      spec.values.col(t).maxCoeff(&arg);
      CHECK(static_cast<int>(arg) == bin);
    }
  }
}

TEST_CASE("silence maps to an all-zero spectrogram") {
  s3t::AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.assign(22050 * 2, 0.0f);
  const auto spec = s3t::cqt(clip, s3t::CqtConfig{});
  CHECK(spec.values.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("cqt rejects clips shorter than the longest filter") {
  s3t::AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.assign(100, 0.1f);
  CHECK_THROWS(s3t::cqt(clip, s3t::CqtConfig{}));
}

TEST_CASE("cqt config invariants are enforced") {
  s3t::CqtConfig cfg;
  cfg.fmin = 8000.0;  // top bin above Nyquist at 22.05 kHz
  CHECK_THROWS(cfg.validate(22050));
  cfg = s3t::CqtConfig{};
  cfg.bins = 85;  // not divisible by bins_per_octave
  CHECK_THROWS(cfg.validate(22050));
}

TEST_CASE("compress_time arithmetic, identity, and mass preservation") {
  s3t::Rng rng(7);
  s3t::Spectrogram spec;
  spec.frame_rate = 43.066f;
  spec.values.resize(84, 1292);
  for (int f = 0; f < 84; ++f) {
    for (int t = 0; t < 1292; ++t) spec.values(f, t) = static_cast<float>(rng.uniform());
  }

  const auto id = s3t::compress_time(spec, 1);
  CHECK(id.values == spec.values);

  const auto out = s3t::compress_time(spec, 100);
  CHECK(out.t_frames() == 12);
  CHECK(out.f_bins() == 84);
  CHECK(out.frame_rate == doctest::Approx(spec.frame_rate / 100.0));

  // Sum of output * factor equals the sum over the covered input prefix.
  const double out_mass = out.values.cast<double>().sum() * 100.0;
  const double in_mass = spec.values.leftCols(1200).cast<double>().sum();
  CHECK(std::abs(out_mass - in_mass) <= 1e-6 * std::abs(in_mass));

  s3t::Spectrogram constant;
  constant.frame_rate = 1.0f;
  constant.values = s3t::MatF::Constant(84, 250, 0.75f);
  const auto cc = s3t::compress_time(constant, 100);
  CHECK(cc.values.isApproxToConstant(0.75f, 1e-6f));

  CHECK_THROWS(s3t::compress_time(constant, 251));
}

TEST_CASE("spectrogram cache file round-trips bitwise") {
  s3t::Rng rng(11);
  s3t::Spectrogram spec;
  spec.frame_rate = 0.4306640625f;
  spec.values.resize(84, 37);
  for (int f = 0; f < 84; ++f) {
    for (int t = 0; t < 37; ++t) spec.values(f, t) = static_cast<float>(rng.uniform());
  }
  const auto path = (std::filesystem::temp_directory_path() / "s3t_spec_rt.s3tspec").string();
  s3t::write_spectrogram(path, spec);
  const auto back = s3t::read_spectrogram(path);
  CHECK(back.frame_rate == spec.frame_rate);
  CHECK(back.values == spec.values);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta");
}

TEST_CASE("wav write/read round-trips within 16-bit quantization") {
  const auto clip = sine(220.0, 22050, 0.2, 0.8);
  const auto path = (std::filesystem::temp_directory_path() / "s3t_wav_rt.wav").string();
  s3t::write_wav(path, clip);
  const auto back = s3t::read_wav(path);
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.sample_rate == 22050);
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 0.5f / 32768.0f + 1e-6f);
  }
  std::filesystem::remove(path);
}
