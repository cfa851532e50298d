// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "s3t/config.hpp"
#include "s3t/data/manifest.hpp"
#include "s3t/moco.hpp"
#include "s3t/preproc.hpp"
#include "s3t/spectrogram.hpp"
#include "s3t/train.hpp"

namespace s3t {

enum class TaskKind { kSingleLabel, kMultiLabel };

struct FeatureRow {
  std::string id;
  Eigen::VectorXf feature;
  Eigen::VectorXf label;  // one-hot for single-label, binary vector for tags
};

struct FeatureTable {
  TaskKind task = TaskKind::kSingleLabel;
  std::vector<std::string> label_names;
  std::vector<FeatureRow> rows;

  int feature_dim() const { return rows.empty() ? 0 : static_cast<int>(rows[0].feature.size()); }
  int label_dim() const { return static_cast<int>(label_names.size()); }
  // Argmax class index per row (single-label convenience).
  std::vector<int> class_labels() const;
};

void write_feature_table(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_table(const std::string& path);

// Query-branch model restored from a pretraining checkpoint, plus the config
// it was trained with.
struct LoadedModel {
  Config cfg;
  MocoModel<float> model;
};
LoadedModel load_query_model(const std::string& ckpt_path);

// Pooled encoder representation of one spectrogram, eval mode. Clips longer
// than chunk_frames are split into chunks and the features mean-pooled.
nn::Vec<float> extract_feature(MocoModel<float>& model, const Spectrogram& spec, Preprocessor p,
                               int model_size, int chunk_frames);

// Frozen-feature extraction over manifest rows. Unreadable rows are skipped
// and reported through diagnostics.
FeatureTable featurize(const LabeledDataset& ds, const std::vector<int>& row_indices,
                       MocoModel<float>& model, const Config& cfg, int threads = 1,
                       std::vector<std::string>* diagnostics = nullptr);

// Single linear layer on frozen features. Inputs are unit-normalized, then
// centered on the probe's training mean and renormalized, before the
// (bias-free) linear map: frozen contrastive features concentrate in a narrow
// cone, and without the centering the class margins are too small for the
// fixed probe budget. Normalizing first makes the whole transform exactly
// invariant to positive rescaling of the features, so inference-time
// rescaling cannot change the argmax.
struct LinearProbe {
  TaskKind task = TaskKind::kSingleLabel;
  nn::Mat<float> weight;       // label_dim x feature_dim
  nn::Vec<float> center_mean;  // training-set mean of unit-normalized features

  // Normalized, centered, renormalized copy of one feature vector.
  nn::Vec<float> transform(const nn::Vec<float>& feature) const {
    nn::Vec<float> v = feature;
    float n = v.norm();
    if (n > 0.0f) v /= n;
    v -= center_mean;
    n = v.norm();
    if (n > 0.0f) v /= n;
    return v;
  }

  // N x label_dim raw scores (logits) for a stack of features.
  nn::Mat<float> scores(const nn::Mat<float>& features) const {
    nn::Mat<float> x = features;
    for (long i = 0; i < x.rows(); ++i) x.row(i) = transform(x.row(i).transpose()).transpose();
    return x * weight.transpose();
  }
};

LinearProbe train_probe(const FeatureTable& train, const EvalSection& cfg, std::uint64_t seed);

double top_k_accuracy(const nn::Mat<float>& scores, const std::vector<int>& labels, int k);

struct TagwiseResult {
  double mean = 0;
  std::vector<double> per_tag;       // NaN for excluded tags
  std::vector<int> excluded_tags;    // tags lacking a positive or a negative
};

TagwiseResult roc_auc_tagwise(const nn::Mat<float>& scores, const nn::Mat<float>& labels);
TagwiseResult pr_auc_tagwise(const nn::Mat<float>& scores, const nn::Mat<float>& labels);

// Stratified label-efficiency subset of the given training rows: per class
// (or tag bucket) ceil(fraction * n) rows, at least one each, seeded.
std::vector<int> subset_rows(const LabeledDataset& ds, const std::vector<int>& train_rows,
                             double fraction, std::uint64_t seed);
FeatureTable subset_table(const FeatureTable& table, double fraction, std::uint64_t seed);

struct RunMetrics {
  double top1 = 0, top5 = 0;     // single-label
  double roc_auc = 0, pr_auc = 0;  // multi-label
};

struct MetricsReport {
  TaskKind task = TaskKind::kSingleLabel;
  std::vector<RunMetrics> runs;
  RunMetrics mean, stddev;  // sample standard deviation (0 for n = 1)
  std::vector<std::string> excluded_tags;

  std::string to_json() const;
  std::string to_text() const;  // aligned table
};

RunMetrics evaluate_probe(const LinearProbe& probe, const FeatureTable& test,
                          std::vector<int>* excluded = nullptr);

// Probe retrained n_repeats times with seeds base_seed .. base_seed+n-1 on
// identical features; per-run metrics plus mean +/- sample std.
MetricsReport repeated_eval(const FeatureTable& train, const FeatureTable& test,
                            const EvalSection& cfg, int n_repeats, std::uint64_t base_seed);

}  // namespace s3t
