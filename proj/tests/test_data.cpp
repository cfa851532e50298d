// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "s3t/data/manifest.hpp"
#include "s3t/data/synth.hpp"
#include "s3t/train.hpp"

using s3t::LabeledDataset;
using s3t::ManifestRow;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("s3t_data_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return path.string();
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("manifest parsing: fields, vocabulary, splits") {
  TempDir dir("parse");
  const std::string path = write_text(dir.path / "m.csv",
                                      "id,audio_path,split,labels\n"
                                      "a,/x/a.wav,train,rock\n"
                                      "b,/x/b.wav,valid,jazz\n"
                                      "c,/x/c.wav,test,rock\n");
  const LabeledDataset ds = s3t::load_manifest(path, /*check_paths=*/false);
  REQUIRE(ds.rows.size() == 3);
  CHECK(ds.diagnostics.empty());
  CHECK(ds.rows[0].id == "a");
  CHECK(ds.rows[0].audio_path == "/x/a.wav");
  CHECK(ds.rows[0].split == "train");
  CHECK(ds.rows[0].labels == std::vector<std::string>{"rock"});
  CHECK(ds.multi_label == false);
  CHECK(ds.vocabulary == std::vector<std::string>{"jazz", "rock"});
  CHECK(ds.split_indices("train") == std::vector<int>{0});
  CHECK(ds.split_indices("valid") == std::vector<int>{1});
  CHECK(ds.split_indices("test") == std::vector<int>{2});
  CHECK(ds.label_index(ds.rows[1]) == 0);  // jazz sorts first
  CHECK(ds.label_index(ds.rows[2]) == 1);

  CHECK_THROWS(s3t::load_manifest((dir.path / "missing.csv").string()));
  const std::string bad_header =
      write_text(dir.path / "h.csv", "identifier,path,split,labels\na,/x,train,rock\n");
  CHECK_THROWS(s3t::load_manifest(bad_header, false));
}

TEST_CASE("manifest diagnostics name the offending row") {
  TempDir dir("diag");
  std::string text = "id,audio_path,split,labels\n";
  for (int i = 0; i < 30; ++i) {
    text += "row" + std::to_string(i) + ",/x/clip" + std::to_string(i) + ".wav,train,rock\n";
  }
  text += "row0,/x/dup.wav,train,rock\n";   // duplicate id
  text += "m,/x/m.wav,holdout,rock\n";      // unknown split token
  text += "n,/x/n.wav,train,\n";            // empty labels
  const std::string path = write_text(dir.path / "m.csv", text);
  const LabeledDataset ds = s3t::load_manifest(path, false);
  CHECK(ds.rows.size() == 30);
  REQUIRE(ds.diagnostics.size() == 3);
  CHECK(ds.diagnostics[0].find("duplicate") != std::string::npos);
  CHECK(ds.diagnostics[0].find("row0") != std::string::npos);
  CHECK(ds.diagnostics[1].find("unknown split") != std::string::npos);
  CHECK(ds.diagnostics[1].find("holdout") != std::string::npos);
  CHECK(ds.diagnostics[1].find("m") != std::string::npos);
  CHECK(ds.diagnostics[2].find("empty labels") != std::string::npos);
  CHECK(ds.diagnostics[2].find("n") != std::string::npos);

  // More than 10% invalid rows aborts the load outright.
  const std::string mostly_bad = write_text(dir.path / "bad.csv",
                                            "id,audio_path,split,labels\n"
                                            "a,/x/a.wav,train,rock\n"
                                            "b,/x/b.wav,train,jazz\n"
                                            "c,/x/c.wav,nowhere,pop\n");
  CHECK_THROWS(s3t::load_manifest(mostly_bad, false));

  // Unresolvable audio paths count as bad rows when checking is on.
  const std::string ghost = write_text(dir.path / "ghost.csv",
                                       "id,audio_path,split,labels\n"
                                       "a,/definitely/not/here.wav,train,rock\n");
  CHECK_THROWS(s3t::load_manifest(ghost, true));
}

TEST_CASE("multi-label rows become binary vectors over the sorted vocabulary") {
  TempDir dir("tags");
  const std::string path = write_text(dir.path / "m.csv",
                                      "id,audio_path,split,labels\n"
                                      "a,/x/a.wav,train,rock;guitar\n"
                                      "b,/x/b.wav,test,vocal\n");
  const LabeledDataset ds = s3t::load_manifest(path, false);
  CHECK(ds.multi_label == true);
  CHECK(ds.vocabulary == std::vector<std::string>{"guitar", "rock", "vocal"});
  const Eigen::VectorXf v = ds.label_vector(ds.rows[0]);
  CHECK(v(0) == 1.0f);  // guitar
  CHECK(v(1) == 1.0f);  // rock
  CHECK(v(2) == 0.0f);  // vocal
  CHECK_THROWS(ds.label_index(ds.rows[0]));  // two labels, not single-label
}

TEST_CASE("written manifests load back unchanged") {
  TempDir dir("rt");
  std::vector<ManifestRow> rows{
      {"a", "/x/a.wav", "train", {"rock"}},
      {"b", "/x/b.wav", "valid", {"guitar", "vocal"}},
      {"c", "/x/c.wav", "test", {"jazz"}},
  };
  const std::string path = (dir.path / "m.csv").string();
  s3t::write_manifest(path, rows);
  const LabeledDataset ds = s3t::load_manifest(path, false);
  REQUIRE(ds.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(ds.rows[i].id == rows[i].id);
    CHECK(ds.rows[i].audio_path == rows[i].audio_path);
    CHECK(ds.rows[i].split == rows[i].split);
    CHECK(ds.rows[i].labels == rows[i].labels);
  }
}

TEST_CASE("synthetic corpus: counts, splits, and byte-level determinism") {
  s3t::SyntheticSpec spec;
  spec.clips_per_class = 10;
  spec.duration_s = 1.0;
  spec.recipes = s3t::default_recipes(4);

  TempDir d1("synth1"), d2("synth2");
  const std::string m1 = s3t::generate_synthetic(spec, 5, d1.path.string());
  const std::string m2 = s3t::generate_synthetic(spec, 5, d2.path.string());

  const LabeledDataset ds = s3t::load_manifest(m1);
  CHECK(ds.rows.size() == 40);
  CHECK(ds.vocabulary.size() == 4);
  CHECK(ds.split_indices("train").size() == 32);  // 8:1:1 per class
  CHECK(ds.split_indices("valid").size() == 4);
  CHECK(ds.split_indices("test").size() == 4);

  // Same seed: identical audio bytes; manifests differ only in directory.
  for (const auto& row : ds.rows) {
    const std::filesystem::path other = d2.path / std::filesystem::path(row.audio_path).filename();
    CHECK(read_bytes(row.audio_path) == read_bytes(other));
  }
  TempDir d3("synth3");
  const std::string m3 = s3t::generate_synthetic(spec, 6, d3.path.string());
  const LabeledDataset ds3 = s3t::load_manifest(m3);
  CHECK(read_bytes(ds.rows[0].audio_path) != read_bytes(ds3.rows[0].audio_path));

  s3t::SyntheticSpec bad = spec;
  bad.recipes.clear();
  CHECK_THROWS(s3t::generate_synthetic(bad, 1, d3.path.string()));
  bad = spec;
  bad.recipes = {spec.recipes[0], spec.recipes[0]};
  CHECK_THROWS(s3t::generate_synthetic(bad, 1, d3.path.string()));
}

TEST_CASE("classes are separable by a nearest-centroid sketch on mean spectra") {
  s3t::SyntheticSpec spec;
  spec.clips_per_class = 25;
  spec.duration_s = 3.0;
  spec.recipes = s3t::default_recipes(4);
  TempDir dir("sep");
  const LabeledDataset ds = s3t::load_manifest(s3t::generate_synthetic(spec, 9, dir.path.string()));

  s3t::FrontendSection frontend;
  frontend.compress = 4;
  std::vector<Eigen::VectorXf> mean_spec(ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const s3t::Spectrogram s = s3t::compute_frontend(ds.rows[i].audio_path, frontend);
    mean_spec[i] = s.values.rowwise().mean();
  }

  const int classes = static_cast<int>(ds.vocabulary.size());
  std::vector<Eigen::VectorXf> centroid(classes,
                                        Eigen::VectorXf::Zero(mean_spec[0].size()));
  std::vector<int> count(classes, 0);
  for (int i : ds.split_indices("train")) {
    const int c = ds.label_index(ds.rows[i]);
    centroid[c] += mean_spec[i];
    ++count[c];
  }
  for (int c = 0; c < classes; ++c) centroid[c] /= static_cast<float>(count[c]);

  int hits = 0, total = 0;
  for (const auto& split : {std::string("valid"), std::string("test")}) {
    for (int i : ds.split_indices(split)) {
      int best = -1;
      float best_dist = 0;
      for (int c = 0; c < classes; ++c) {
        const float dist = (mean_spec[i] - centroid[c]).squaredNorm();
        if (best < 0 || dist < best_dist) {
          best = c;
          best_dist = dist;
        }
      }
      hits += best == ds.label_index(ds.rows[i]);
      ++total;
    }
  }
  CHECK(total == 20);  // valid + test, 2 + 3 per class
  CHECK(static_cast<double>(hits) / total > 0.9);
}
