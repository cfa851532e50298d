// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/data/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace s3t {

int LabeledDataset::label_index(const ManifestRow& row) const {
  if (row.labels.size() != 1) {
    throw std::invalid_argument("row " + row.id + " is not single-label");
  }
  const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), row.labels[0]);
  if (it == vocabulary.end() || *it != row.labels[0]) {
    throw std::invalid_argument("label not in vocabulary: " + row.labels[0]);
  }
  return static_cast<int>(it - vocabulary.begin());
}

Eigen::VectorXf LabeledDataset::label_vector(const ManifestRow& row) const {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(vocabulary.size()));
  for (const auto& label : row.labels) {
    const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
    if (it == vocabulary.end() || *it != label) {
      throw std::invalid_argument("label not in vocabulary: " + label);
    }
    v(it - vocabulary.begin()) = 1.0f;
  }
  return v;
}

std::vector<int> LabeledDataset::split_indices(const std::string& split) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].split == split) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream is(line);
  std::string field;
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::string> split_tags(const std::string& s) {
  std::vector<std::string> tags;
  std::istringstream is(s);
  std::string tag;
  while (std::getline(is, tag, ';')) {
    if (!tag.empty()) tags.push_back(tag);
  }
  return tags;
}

}  // namespace

LabeledDataset load_manifest(const std::string& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("manifest is empty: " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "id,audio_path,split,labels") {
    throw std::runtime_error("manifest header must be 'id,audio_path,split,labels', got: " + header);
  }

  LabeledDataset ds;
  std::set<std::string> seen_ids;
  std::set<std::string> vocab;
  std::string line;
  std::size_t total = 0, bad = 0;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++total;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      ds.diagnostics.push_back("malformed row: " + line);
      ++bad;
      continue;
    }
    ManifestRow row{fields[0], fields[1], fields[2], split_tags(fields[3])};
    if (row.id.empty() || !seen_ids.insert(row.id).second) {
      ds.diagnostics.push_back("duplicate or empty id: " + row.id);
      ++bad;
      continue;
    }
    if (row.split != "train" && row.split != "valid" && row.split != "test") {
      ds.diagnostics.push_back("unknown split token '" + row.split + "' for id " + row.id);
      ++bad;
      continue;
    }
    if (row.labels.empty()) {
      ds.diagnostics.push_back("empty labels for id " + row.id);
      ++bad;
      continue;
    }
    if (check_paths && !std::filesystem::exists(row.audio_path)) {
      ds.diagnostics.push_back("unresolvable audio path for id " + row.id + ": " + row.audio_path);
      ++bad;
      continue;
    }
    for (const auto& label : row.labels) vocab.insert(label);
    if (row.labels.size() > 1) ds.multi_label = true;
    ds.rows.push_back(std::move(row));
  }

  if (total > 0 && bad * 10 > total) {
    throw std::runtime_error("more than 10% of manifest rows are invalid (" + std::to_string(bad) +
                             "/" + std::to_string(total) + ")");
  }
  ds.vocabulary.assign(vocab.begin(), vocab.end());
  return ds;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "id,audio_path,split,labels\n";
  for (const auto& row : rows) {
    out << row.id << "," << row.audio_path << "," << row.split << ",";
    for (std::size_t i = 0; i < row.labels.size(); ++i) {
      if (i) out << ";";
      out << row.labels[i];
    }
    out << "\n";
  }
}

}  // namespace s3t
