// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "s3t/audio.hpp"
#include "s3t/spectrogram.hpp"

namespace s3t {

struct CqtConfig {
  int bins = 84;
  int bins_per_octave = 12;
  double fmin = 32.70;  // C1
  int hop = 512;
  // Magnitude scale applied before the log; the window-sum-normalized atoms
  // respond to a unit tone with |X| ~ 0.5, so without this gain the log
  // compression would stay in its linear regime and do nothing.
  double gain = 1000.0;
  // Hann-windowed complex Gabor atoms, Q = 1 / (2^(1/bpo) - 1).

  double bin_frequency(int k) const;
  void validate(int sample_rate) const;
};

// Log-compressed constant-Q magnitude spectrogram, log(1 + gain * |X|).
// T = floor(n_samples / hop) + 1; frame t is centered at sample t*hop.
Spectrogram cqt(const AudioClip& clip, const CqtConfig& cfg);

// Non-overlapping mean pooling along time by `factor`; remainder frames
// dropped, frame_rate divided by factor.
Spectrogram compress_time(const Spectrogram& spec, int factor);

}  // namespace s3t
