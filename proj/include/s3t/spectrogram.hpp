// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

namespace s3t {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// F x T non-negative matrix of log-compressed magnitudes.
struct Spectrogram {
  MatF values;            // rows = frequency bins, cols = time frames
  double frame_rate = 0;  // frames per second

  int f_bins() const { return static_cast<int>(values.rows()); }
  int t_frames() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

// Binary cache: magic "S3TSPEC1", then F, T, frame_rate as little-endian
// 32-bit fields (frame_rate as float), then row-major float32 values.
// `meta` goes to a sidecar "<path>.meta" as key=value lines.
void write_spectrogram(const std::string& path, const Spectrogram& spec,
                       const std::map<std::string, std::string>& meta = {});
Spectrogram read_spectrogram(const std::string& path);
std::map<std::string, std::string> read_spectrogram_meta(const std::string& path);

}  // namespace s3t
