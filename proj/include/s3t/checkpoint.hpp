// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <string>
#include <vector>

#include "s3t/spectrogram.hpp"

namespace s3t {

// Single-file checkpoint container: magic "S3TCKPT1", a length-prefixed
// UTF-8 JSON manifest, then named float32 tensor payloads
// (name, dtype code, rank, dims, little-endian row-major data).
// Round-trips are bitwise exact.

struct TensorEntry {
  std::string name;
  MatF data;
};

void write_checkpoint(const std::string& path, const std::string& manifest_json,
                      const std::vector<TensorEntry>& tensors);

struct CheckpointFile {
  std::string manifest_json;
  std::map<std::string, MatF> tensors;
};

CheckpointFile read_checkpoint(const std::string& path);

}  // namespace s3t
