// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace s3t {

struct ManifestRow {
  std::string id;
  std::string audio_path;
  std::string split;  // train | valid | test
  std::vector<std::string> labels;
};

// Manifest-backed labeled dataset. The vocabulary is the sorted set of
// label tokens; multi-label rows become binary vectors over it.
struct LabeledDataset {
  std::vector<ManifestRow> rows;
  std::vector<std::string> vocabulary;
  bool multi_label = false;
  std::vector<std::string> diagnostics;  // per-row rejection notes

  int label_index(const ManifestRow& row) const;        // single-label
  Eigen::VectorXf label_vector(const ManifestRow& row) const;  // multi-label
  std::vector<int> split_indices(const std::string& split) const;
};

// CSV columns: id,audio_path,split,labels. Tag labels ';'-separated.
// Bad rows are rejected with diagnostics; more than 10% bad rows aborts.
LabeledDataset load_manifest(const std::string& path, bool check_paths = true);

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);

}  // namespace s3t
