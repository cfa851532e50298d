// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "s3t/rng.hpp"
#include "s3t/spectrogram.hpp"

namespace s3t {

struct AugmentConfig {
  double crop_ratio_lo = 0.1, crop_ratio_hi = 0.9;

  int freq_mask_n_lo = 1, freq_mask_n_hi = 5;
  int freq_mask_len_lo = 5, freq_mask_len_hi = 30;
  double freq_mask_total_cap_ratio = 0.4;  // cap = floor(ratio * F)
  double freq_mask_p = 0.5;

  int time_mask_n_lo = 1, time_mask_n_hi = 10;
  double time_mask_ratio_lo = 0.01, time_mask_ratio_hi = 0.2;
  double time_mask_total_cap_ratio = 0.4;  // cap = floor(ratio * T)
  double time_mask_p = 0.5;

  int time_warp_w_lo = 0, time_warp_w_hi = 10;
  double time_warp_p = 0.4;

  int shift_step_lo = 1, shift_step_hi = 10;
  double shift_p = 0.4;

  void validate() const;
};

// Sampled parameters of one transform application. Enough to replay the
// transform bit-exactly without the generator.
struct MaskSegment {
  int start = 0;
  int length = 0;
};

struct CropRecord {
  double ratio = 0;
  int length = 0;
  int start = 0;
};

struct FreqMaskRecord {
  bool applied = false;
  std::vector<MaskSegment> segments;
};

struct TimeMaskRecord {
  bool applied = false;
  std::vector<MaskSegment> segments;
};

struct TimeWarpRecord {
  bool applied = false;
  bool identity = false;  // degenerate T or W = 0
  int w = 0;
  int anchor = 0;
  int direction = 1;
};

struct ShiftRecord {
  bool applied = false;
  int axis = 1;  // 0 = frequency (pitch), 1 = time
  int step = 0;
  int direction = 1;
};

struct ViewProvenance {
  CropRecord crop;
  FreqMaskRecord freq_mask;
  TimeMaskRecord time_mask;
  TimeWarpRecord time_warp;
  ShiftRecord shift;
};

struct PairProvenance {
  int source_f = 0, source_t = 0;
  ViewProvenance query, key;

  std::string to_text() const;
  static PairProvenance from_text(const std::string& text);
};

struct AugmentedPair {
  Spectrogram query, key;
  PairProvenance provenance;
};

// Sampling front ends (draw parameters from rng, then apply).
std::pair<Spectrogram, Spectrogram> random_multi_crop(const Spectrogram& spec,
                                                      const AugmentConfig& cfg, Rng& rng);
Spectrogram frequency_mask(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng);
Spectrogram time_mask(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng);
Spectrogram time_warp(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng);
Spectrogram random_shift(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng);

// Full pipeline: crop into two views, then per view gate the four
// transforms by their probabilities in the fixed order
// frequency_mask, time_mask, time_warp, random_shift.
AugmentedPair augment_pair(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng);

// Deterministic replay of a recorded pipeline run.
AugmentedPair replay_pair(const Spectrogram& spec, const PairProvenance& prov);

// Parameter samplers and deterministic appliers, exposed for replay and tests.
CropRecord sample_crop(int t_frames, const AugmentConfig& cfg, Rng& rng);
FreqMaskRecord sample_freq_mask(int f_bins, const AugmentConfig& cfg, Rng& rng);
TimeMaskRecord sample_time_mask(int t_frames, const AugmentConfig& cfg, Rng& rng);
TimeWarpRecord sample_time_warp(int t_frames, const AugmentConfig& cfg, Rng& rng);
ShiftRecord sample_shift(int f_bins, int t_frames, const AugmentConfig& cfg, Rng& rng);

Spectrogram apply_crop(const Spectrogram& spec, const CropRecord& rec);
Spectrogram apply_freq_mask(const Spectrogram& spec, const FreqMaskRecord& rec);
Spectrogram apply_time_mask(const Spectrogram& spec, const TimeMaskRecord& rec);
Spectrogram apply_time_warp(const Spectrogram& spec, const TimeWarpRecord& rec);
Spectrogram apply_shift(const Spectrogram& spec, const ShiftRecord& rec);

}  // namespace s3t
