// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/preproc.hpp"

#include <cmath>
#include <stdexcept>

namespace s3t {

Preprocessor preprocessor_from_string(const std::string& name) {
  if (name == "tiling") return Preprocessor::kTiling;
  if (name == "folding") return Preprocessor::kFolding;
  throw std::invalid_argument("unknown preprocessor: " + name + " (expected tiling or folding)");
}

std::string to_string(Preprocessor p) {
  return p == Preprocessor::kTiling ? "tiling" : "folding";
}

Spectrogram frequency_tile(const Spectrogram& spec) {
  const int f = spec.f_bins(), t = spec.t_frames();
  if (f < 1 || t < 1) throw std::invalid_argument("frequency_tile needs a non-empty spectrogram");
  Spectrogram out;
  out.frame_rate = spec.frame_rate;
  out.values.resize(t, t);
  for (int i = 0; i < t; ++i) out.values.row(i) = spec.values.row(i % f);
  return out;
}

Spectrogram time_fold(const Spectrogram& spec) {
  const int f = spec.f_bins(), t = spec.t_frames();
  if (f < 1 || t < 1) throw std::invalid_argument("time_fold needs a non-empty spectrogram");
  const int n = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(t) / f))));
  const int chunk = (t + n - 1) / n;  // ceil(T/n); padded length is n*chunk
  Spectrogram out;
  out.frame_rate = spec.frame_rate;
  out.values = MatF::Zero(f * n, chunk);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < chunk; ++c) {
      const int src = j * chunk + c;
      if (src >= t) break;  // zero padding
      out.values.col(c).segment(f * j, f) = spec.values.col(src);
    }
  }
  return out;
}

ModelInput resize_to_model(const Spectrogram& spec, int size, Preprocessor tag) {
  const int h = spec.f_bins(), w = spec.t_frames();
  if (h < 1 || w < 1) throw std::invalid_argument("resize_to_model needs a non-empty input");
  if (size < 1) throw std::invalid_argument("model input size must be positive");

  ModelInput out;
  out.source_f = h;
  out.source_t = w;
  out.preprocessor = tag;
  out.values.resize(size, size);

  const double sy = size > 1 ? static_cast<double>(h - 1) / (size - 1) : 0.0;
  const double sx = size > 1 ? static_cast<double>(w - 1) / (size - 1) : 0.0;
  for (int i = 0; i < size; ++i) {
    const double fy = i * sy;
    const int y0 = std::min(static_cast<int>(fy), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float ay = static_cast<float>(fy - y0);
    for (int j = 0; j < size; ++j) {
      const double fx = j * sx;
      const int x0 = std::min(static_cast<int>(fx), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const float ax = static_cast<float>(fx - x0);
      const float top = (1.0f - ax) * spec.values(y0, x0) + ax * spec.values(y0, x1);
      const float bot = (1.0f - ax) * spec.values(y1, x0) + ax * spec.values(y1, x1);
      out.values(i, j) = (1.0f - ay) * top + ay * bot;
    }
  }
  return out;
}

ModelInput preprocess(const Spectrogram& spec, Preprocessor p, int size) {
  const Spectrogram squared = p == Preprocessor::kTiling ? frequency_tile(spec) : time_fold(spec);
  ModelInput out = resize_to_model(squared, size, p);
  out.source_f = spec.f_bins();
  out.source_t = spec.t_frames();
  return out;
}

}  // namespace s3t
