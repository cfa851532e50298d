// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/data/synth.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "s3t/audio.hpp"
#include "s3t/rng.hpp"

namespace s3t {

void SyntheticSpec::validate() const {
  if (clips_per_class <= 0 || duration_s <= 0.0 || sample_rate <= 0 || recipes.empty()) {
    throw std::invalid_argument("synthetic spec fields must be positive and recipes non-empty");
  }
  for (std::size_t i = 0; i < recipes.size(); ++i) {
    for (std::size_t j = i + 1; j < recipes.size(); ++j) {
      const auto& a = recipes[i];
      const auto& b = recipes[j];
      const bool distinct = a.f0_lo != b.f0_lo || a.f0_hi != b.f0_hi ||
                            a.harmonic_decay != b.harmonic_decay || a.noise_level != b.noise_level ||
                            a.harmonic_stride != b.harmonic_stride ||
                            a.am_rate_hz != b.am_rate_hz;
      if (!distinct) {
        throw std::invalid_argument("class recipes " + a.name + " and " + b.name +
                                    " are indistinguishable");
      }
    }
  }
}

std::vector<ClassRecipe> default_recipes(int n_classes) {
  // All base classes share one wide fundamental range, so pitch identifies a
  // clip but never its class; classes differ in spectral envelope, noise
  // floor, and amplitude modulation — the timbre structure the encoder has to
  // learn. Extra classes interpolate fundamentals.
  std::vector<ClassRecipe> base = {
      {"drone", 120.0, 200.0, 0.95, 14, 1, 0.01, 0.6, 0.25},
      {"pulse", 120.0, 200.0, 0.92, 14, 2, 0.02, 6.5, 0.9},
      {"shimmer", 120.0, 200.0, 0.50, 10, 1, 0.02, 2.0, 0.45},
      {"noiseband", 120.0, 200.0, 0.60, 4, 1, 0.50, 9.0, 0.6},
  };
  std::vector<ClassRecipe> out;
  for (int i = 0; i < n_classes; ++i) {
    ClassRecipe r = base[i % base.size()];
    if (i >= static_cast<int>(base.size())) {
      const double shift = 1.0 + 0.21 * (i / static_cast<int>(base.size()));
      r.f0_lo *= shift;
      r.f0_hi *= shift;
      r.name += std::to_string(i);
    }
    out.push_back(r);
  }
  return out;
}

namespace {

AudioClip render_clip(const ClassRecipe& recipe, const SyntheticSpec& spec, Rng& rng) {
  const int n = static_cast<int>(spec.duration_s * spec.sample_rate);
  const double f0 = rng.uniform(recipe.f0_lo, recipe.f0_hi);
  const double am_phase = rng.uniform(0.0, 6.283185307179586);
  auto jitter = [&]() { return 1.0 + recipe.timbre_jitter * rng.uniform(-1.0, 1.0); };
  const double decay = std::min(0.99, recipe.harmonic_decay * jitter());
  const double noise = recipe.noise_level * jitter();
  const double am_rate = recipe.am_rate_hz * jitter();
  std::vector<double> phases(recipe.harmonics);
  for (auto& p : phases) p = rng.uniform(0.0, 6.283185307179586);

  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.samples.resize(n);
  const double nyquist = spec.sample_rate / 2.0;
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    double v = 0.0;
    for (int h = 1; h <= recipe.harmonics; h += recipe.harmonic_stride) {
      const double fh = f0 * h;
      if (fh >= nyquist * 0.95) break;
      v += std::pow(decay, h - 1) *
           std::sin(6.283185307179586 * fh * t + phases[h - 1]);
    }
    v *= 1.0 + recipe.am_depth * std::sin(6.283185307179586 * am_rate * t + am_phase);
    v += noise * rng.normal();
    clip.samples[i] = static_cast<float>(v);
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0.0) {
    const float scale = static_cast<float>(0.9 / peak);
    for (auto& s : clip.samples) s *= scale;
  }
  return clip;
}

}  // namespace

std::string generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                               const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  Rng root(seed);
  std::vector<ManifestRow> rows;
  const int n_train = spec.clips_per_class * 8 / 10;
  const int n_valid = spec.clips_per_class / 10;

  for (std::size_t c = 0; c < spec.recipes.size(); ++c) {
    Rng class_rng = root.split(c);
    for (int i = 0; i < spec.clips_per_class; ++i) {
      Rng clip_rng = class_rng.split(i);
      const AudioClip clip = render_clip(spec.recipes[c], spec, clip_rng);
      const std::string id = spec.recipes[c].name + "_" + std::to_string(i);
      const std::string wav_path = out_dir + "/" + id + ".wav";
      write_wav(wav_path, clip);
      ManifestRow row;
      row.id = id;
      row.audio_path = wav_path;
      row.split = i < n_train ? "train" : (i < n_train + n_valid ? "valid" : "test");
      row.labels = {spec.recipes[c].name};
      rows.push_back(std::move(row));
    }
  }
  const std::string manifest_path = out_dir + "/manifest.csv";
  write_manifest(manifest_path, rows);
  return manifest_path;
}

}  // namespace s3t
