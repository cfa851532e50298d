// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

namespace s3t {

// Mono waveform. Ingestion mixes multi-channel sources down by channel mean.
struct AudioClip {
  std::vector<float> samples;  // amplitudes in [-1, 1]
  int sample_rate = 0;

  void validate() const;
};

// Reads a RIFF WAV file (16-bit PCM or 32-bit IEEE float), mono mixdown.
AudioClip read_wav(const std::string& path);

// Writes mono 16-bit PCM.
void write_wav(const std::string& path, const AudioClip& clip);

// Band-limited rational resampling (polyphase windowed-sinc).
// Output length is ceil(n * target_rate / clip.sample_rate).
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace s3t
