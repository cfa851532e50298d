// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "s3t/checkpoint.hpp"
#include "s3t/config.hpp"
#include "s3t/data/manifest.hpp"
#include "s3t/optim.hpp"
#include "s3t/preproc.hpp"

namespace s3t {

// wav -> resample -> cqt -> compress, per the frontend section.
Spectrogram compute_frontend(const std::string& wav_path, const FrontendSection& f);

// Cached spectrograms for a set of manifest rows. Files land in cache_dir
// (S3T_CACHE_DIR overrides when cache_dir is empty), keyed by row id.
std::vector<Spectrogram> load_or_build_cache(const LabeledDataset& ds,
                                             const std::vector<int>& row_indices,
                                             const FrontendSection& f, std::string cache_dir,
                                             int threads = 1);

struct StepDiagnostics {
  long step = 0;
  long epoch = 0;
  float loss = 0;
  float pos_logit_mean = 0;
  double lr = 0;
  bool queue_warm = true;
};

// Single-writer momentum-contrast pretraining loop. Worker threads only
// parallelize augmentation and per-sample forward/backward; the optimizer,
// momentum update, and queue mutation stay serialized. Runs are bit
// reproducible at threads = 1.
class Trainer {
 public:
  explicit Trainer(const Config& cfg);

  // Rebuild a trainer mid-run from a checkpoint file.
  static Trainer resume(const std::string& ckpt_path);

  // One optimizer step over a full batch of source spectrograms.
  StepDiagnostics step(const std::vector<const Spectrogram*>& batch);

  // Epoch loop over the train split; writes diagnostics JSONL and periodic
  // checkpoints under out_dir. Returns the final checkpoint path.
  std::string run(const std::vector<Spectrogram>& train_specs, const std::string& out_dir);

  void save_checkpoint(const std::string& path) const;

  MoCoState<float>& state() { return state_; }
  const Config& config() const { return cfg_; }
  const std::vector<float>& loss_trace() const { return trace_; }
  long current_epoch() const { return epoch_; }
  long current_step() const { return step_; }
  void set_total_steps(long steps) { total_steps_ = steps; }

 private:
  Config cfg_;
  MoCoState<float> state_;
  AdamW<float> opt_;
  Rng rng_;
  long step_ = 0;
  long epoch_ = 0;
  long total_steps_ = 0;
  long warmup_steps_ = 0;
  std::vector<float> trace_;
  std::vector<MocoModel<float>> query_workers_, key_workers_;
};

}  // namespace s3t
