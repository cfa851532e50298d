// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "s3t/augment.hpp"
#include "s3t/cqt.hpp"
#include "s3t/moco.hpp"
#include "s3t/nn/swin.hpp"

namespace s3t {

struct FrontendSection {
  int sample_rate = 22050;
  CqtConfig cqt;
  int compress = 100;
};

struct ModelSection {
  nn::SwinConfig swin;
  std::string preprocessor = "folding";
};

struct TrainSection {
  long epochs = 400;
  long warmup_epochs = 20;
  double base_lr = 0.0005;
  double weight_decay = 0.05;
  int batch_size = 128;
  std::uint64_t seed = 42;
  int threads = 1;  // determinism is only guaranteed at 1
  long checkpoint_interval = 10;  // epochs between checkpoints
};

struct EvalSection {
  double probe_lr = 0.001;
  double probe_weight_decay = 0.05;
  long probe_epochs = 50;
  long probe_warmup_epochs = 5;
  int probe_batch = 64;
  int chunk_frames = 1024;  // featurization chunks longer clips, mean-pools
};

// Whole-pipeline configuration, serialized as [section] key=value text.
struct Config {
  FrontendSection frontend;
  AugmentConfig augment;
  ModelSection model;
  MocoConfig moco;
  TrainSection train;
  EvalSection eval;

  // Full-scale settings from the published recipe (documentation target).
  static Config full_scale() { return Config{}; }

  // Desk-scale preset: reduced encoder and horizons so the whole pipeline
  // runs on one workstation. Batch 32, queue 4096, 50 epochs.
  static Config desk_scale();

  static Config load(const std::string& path);
  void save(const std::string& path) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::map<std::string, std::map<std::string, std::string>> to_map() const;
  static Config from_map(const std::map<std::string, std::map<std::string, std::string>>& m);

  std::string to_json() const;
  static Config from_json(const std::string& text);
};

}  // namespace s3t
