// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3t/data/manifest.hpp"

namespace s3t {

// Class recipe for the synthetic benchmark: harmonic stacks whose
// fundamental range, spectral envelope, noise floor, and amplitude
// modulation differ per class.
struct ClassRecipe {
  std::string name;
  double f0_lo = 110.0, f0_hi = 220.0;  // Hz
  double harmonic_decay = 0.7;          // amplitude of harmonic h: decay^(h-1)
  int harmonics = 8;
  int harmonic_stride = 1;  // 1 = full stack, 2 = odd harmonics only (hollow)
  double noise_level = 0.02;
  double am_rate_hz = 2.0;
  double am_depth = 0.5;
  // Per-clip relative jitter on decay, noise, and AM rate. Every timbre cue
  // then varies clip to clip inside a class-specific band, so telling clips
  // apart requires encoding exactly the cues that separate the classes.
  double timbre_jitter = 0.2;
};

struct SyntheticSpec {
  int clips_per_class = 50;
  double duration_s = 6.0;
  int sample_rate = 22050;
  std::vector<ClassRecipe> recipes;

  void validate() const;
};

// Default 4-class recipe set; classes differ in at least one field.
std::vector<ClassRecipe> default_recipes(int n_classes);

// Writes 16-bit WAVs under out_dir plus manifest.csv with a per-class
// 8:1:1 train/valid/test split. Deterministic per seed.
// Returns the manifest path.
std::string generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                               const std::string& out_dir);

}  // namespace s3t
