// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "s3t/spectrogram.hpp"

namespace s3t {

enum class Preprocessor { kTiling, kFolding };

Preprocessor preprocessor_from_string(const std::string& name);
std::string to_string(Preprocessor p);

// Square model input produced by a pre-processor plus resize.
struct ModelInput {
  MatF values;  // size x size
  int source_f = 0, source_t = 0;
  Preprocessor preprocessor = Preprocessor::kFolding;
};

// Stack copies of the spectrogram along frequency and crop to T rows,
// giving a T x T output: out[i, t] = in[i mod F, t].
Spectrogram frequency_tile(const Spectrogram& spec);

// Fold time chunks onto the frequency axis: n = max(1, round(sqrt(T/F))),
// zero-pad T to n*ceil(T/n), chunk j lands at frequency offset F*j.
// Output is (F*n) x (T'/n).
Spectrogram time_fold(const Spectrogram& spec);

// Bilinear resize (align-corners) to size x size.
ModelInput resize_to_model(const Spectrogram& spec, int size, Preprocessor tag);

// Convenience: apply the configured pre-processor then resize.
ModelInput preprocess(const Spectrogram& spec, Preprocessor p, int size);

}  // namespace s3t
