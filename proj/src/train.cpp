// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/train.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "s3t/audio.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace s3t {

Spectrogram compute_frontend(const std::string& wav_path, const FrontendSection& f) {
  AudioClip clip = read_wav(wav_path);
  clip = resample(clip, f.sample_rate);
  Spectrogram spec = cqt(clip, f.cqt);
  return compress_time(spec, f.compress);
}

std::vector<Spectrogram> load_or_build_cache(const LabeledDataset& ds,
                                             const std::vector<int>& row_indices,
                                             const FrontendSection& f, std::string cache_dir,
                                             int threads) {
  if (cache_dir.empty()) {
    if (const char* env = std::getenv("S3T_CACHE_DIR")) cache_dir = env;
  }
  if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);

  std::vector<Spectrogram> specs(row_indices.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads))
  for (long i = 0; i < static_cast<long>(row_indices.size()); ++i) {
    const ManifestRow& row = ds.rows[row_indices[i]];
    const std::string cache_path =
        cache_dir.empty() ? std::string{} : cache_dir + "/" + row.id + ".s3tspec";
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
      specs[i] = read_spectrogram(cache_path);
      continue;
    }
    specs[i] = compute_frontend(row.audio_path, f);
    if (!cache_path.empty()) {
      write_spectrogram(cache_path, specs[i],
                        {{"source", row.audio_path},
                         {"bins", std::to_string(f.cqt.bins)},
                         {"bins_per_octave", std::to_string(f.cqt.bins_per_octave)},
                         {"fmin", std::to_string(f.cqt.fmin)},
                         {"hop", std::to_string(f.cqt.hop)},
                         {"compress", std::to_string(f.compress)}});
    }
  }
  return specs;
}

Trainer::Trainer(const Config& cfg)
    : cfg_(cfg),
      state_(cfg.model.swin, cfg.moco, cfg.train.seed),
      rng_(cfg.train.seed ^ 0x5354524154414c4cULL) {
  opt_ = AdamW<float>(collect_params<float>(state_.query));
  const int workers = std::max(1, cfg_.train.threads);
  query_workers_.assign(workers, state_.query);
  key_workers_.assign(workers, state_.key);
}

StepDiagnostics Trainer::step(const std::vector<const Spectrogram*>& batch) {
  const long b = static_cast<long>(batch.size());
  if (b == 0) throw std::invalid_argument("empty training batch");
  if (state_.queue.rows() % (cfg_.moco.symmetric ? 2 * b : b) != 0) {
    throw std::invalid_argument("batch size must divide the queue size");
  }

  // All randomness is drawn serially up front so worker scheduling cannot
  // perturb the stream.
  std::vector<std::uint64_t> aug_seeds(b), drop_seeds(b);
  for (long i = 0; i < b; ++i) aug_seeds[i] = rng_.next_u64();
  for (long i = 0; i < b; ++i) drop_seeds[i] = rng_.next_u64();

  const int workers = static_cast<int>(query_workers_.size());
  const int size = cfg_.model.swin.input_size;
  const Preprocessor pp = preprocessor_from_string(cfg_.model.preprocessor);
  const int dirs = cfg_.moco.symmetric ? 2 : 1;

  std::vector<MatF> xq(b * dirs), xk(b * dirs);
#pragma omp parallel for schedule(static) num_threads(workers)
  for (long i = 0; i < b; ++i) {
    Rng arng(aug_seeds[i]);
    const AugmentedPair pair = augment_pair(*batch[i], cfg_.augment, arng);
    xq[i] = preprocess(pair.query, pp, size).values;
    xk[i] = preprocess(pair.key, pp, size).values;
    if (cfg_.moco.symmetric) {  // swapped roles reuse the same two views
      xq[b + i] = xk[i];
      xk[b + i] = xq[i];
    }
  }

  const long n = b * dirs;
  nn::Mat<float> keys(n, cfg_.moco.proj_dim);
#pragma omp parallel num_threads(workers)
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    key_workers_[tid] = state_.key;
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      keys.row(i) = key_workers_[tid].forward_embed(xk[i], nn::Mode::kEval).transpose();
    }
  }

  float loss_sum = 0.0f, pos_sum = 0.0f;
#pragma omp parallel num_threads(workers) reduction(+ : loss_sum, pos_sum)
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    query_workers_[tid] = state_.query;
    query_workers_[tid].zero_grad();
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      Rng drng(drop_seeds[i % b] + (i >= b ? 1 : 0));
      const nn::Vec<float> q =
          query_workers_[tid].forward_embed(xq[i], nn::Mode::kTrain, &drng);
      const auto r = nn::info_nce<float>(q, keys.row(i).transpose(), state_.queue,
                                     static_cast<float>(cfg_.moco.temperature));
      loss_sum += r.loss;
      pos_sum += r.logits(0);
      query_workers_[tid].backward_embed(r.d_query / static_cast<float>(n));
    }
  }

  // Ordered reduction of worker gradients into the master model.
  auto master = collect_params<float>(state_.query);
  for (auto& ref : master) ref.grad->setZero();
  for (int t = 0; t < workers; ++t) {
    auto wp = collect_params<float>(query_workers_[t]);
    for (std::size_t p = 0; p < master.size(); ++p) *master[p].grad += *wp[p].grad;
  }

  const double lr =
      lr_at(step_, std::max(total_steps_, step_ + 1), warmup_steps_, cfg_.train.base_lr);
  opt_.step(master, lr, cfg_.train.weight_decay);
  momentum_update(state_.key, state_.query, cfg_.moco.momentum);
  enqueue_dequeue(state_, keys);
  ++step_;

  StepDiagnostics d;
  d.step = step_;
  d.epoch = epoch_;
  d.loss = loss_sum / static_cast<float>(n);
  d.pos_logit_mean = pos_sum / static_cast<float>(n);
  d.lr = lr;
  d.queue_warm = state_.warm();
  return d;
}

std::string Trainer::run(const std::vector<Spectrogram>& train_specs, const std::string& out_dir) {
  const long b = cfg_.train.batch_size;
  const long n = static_cast<long>(train_specs.size());
  if (n < b) throw std::invalid_argument("training set smaller than one batch");
  const long steps_per_epoch = n / b;
  total_steps_ = cfg_.train.epochs * steps_per_epoch;
  warmup_steps_ = cfg_.train.warmup_epochs * steps_per_epoch;

  std::filesystem::create_directories(out_dir);
  std::ofstream diag(out_dir + "/diagnostics.jsonl", std::ios::app);

  std::string last_ckpt = out_dir + "/checkpoint.s3tckpt";
  for (; epoch_ < cfg_.train.epochs; ++epoch_) {
    std::vector<long> order(n);
    for (long i = 0; i < n; ++i) order[i] = i;
    // Fisher-Yates with the trainer rng; part of the resumable stream.
    for (long i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng_.uniform_int(0, i)]);
    }
    for (long s = 0; s < steps_per_epoch; ++s) {
      std::vector<const Spectrogram*> batch(b);
      for (long i = 0; i < b; ++i) batch[i] = &train_specs[order[s * b + i]];
      const StepDiagnostics d = step(batch);
      trace_.push_back(d.loss);
      diag << "{\"step\":" << d.step << ",\"epoch\":" << d.epoch << ",\"loss\":" << d.loss
           << ",\"pos_logit_mean\":" << d.pos_logit_mean << ",\"lr\":" << d.lr
           << ",\"queue_warm\":" << (d.queue_warm ? "true" : "false") << "}\n";
    }
    diag.flush();
    if ((epoch_ + 1) % cfg_.train.checkpoint_interval == 0 || epoch_ + 1 == cfg_.train.epochs) {
      save_checkpoint(last_ckpt);
    }
  }
  return last_ckpt;
}

void Trainer::save_checkpoint(const std::string& path) const {
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["config"] = nlohmann::json::parse(cfg_.to_json());
  manifest["epoch"] = epoch_ + 1;  // next epoch to run
  manifest["step"] = step_;
  manifest["total_steps"] = total_steps_;
  manifest["warmup_steps"] = warmup_steps_;
  manifest["adam_t"] = opt_.step_count();
  manifest["queue_ptr"] = state_.queue_ptr;
  manifest["keys_seen"] = state_.keys_seen;
  const auto rs = rng_.state();
  manifest["rng_state"] = {std::to_string(rs[0]), std::to_string(rs[1]), std::to_string(rs[2]),
                           std::to_string(rs[3])};

  std::vector<TensorEntry> tensors;
  auto& self = const_cast<Trainer&>(*this);
  for (const auto& r : collect_params<float>(self.state_.query)) {
    tensors.push_back({"query." + r.name, *r.value});
  }
  for (const auto& r : collect_params<float>(self.state_.key)) {
    tensors.push_back({"key." + r.name, *r.value});
  }
  auto refs = collect_params<float>(self.state_.query);
  auto& m1 = self.opt_.first_moments();
  auto& m2 = self.opt_.second_moments();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    tensors.push_back({"opt.m." + refs[i].name, m1[i]});
    tensors.push_back({"opt.v." + refs[i].name, m2[i]});
  }
  tensors.push_back({"moco.queue", state_.queue});
  write_checkpoint(path, manifest.dump(), tensors);
}

Trainer Trainer::resume(const std::string& ckpt_path) {
  const CheckpointFile ck = read_checkpoint(ckpt_path);
  const auto manifest = nlohmann::json::parse(ck.manifest_json);
  Trainer t(Config::from_json(manifest["config"].dump()));

  auto load_into = [&ck](const std::string& prefix, MocoModel<float>& model) {
    for (auto& r : collect_params<float>(model)) {
      const auto it = ck.tensors.find(prefix + r.name);
      if (it == ck.tensors.end()) throw std::runtime_error("checkpoint missing tensor " + prefix + r.name);
      if (it->second.rows() != r.value->rows() || it->second.cols() != r.value->cols()) {
        throw std::runtime_error("checkpoint shape mismatch for " + prefix + r.name);
      }
      *r.value = it->second;
    }
  };
  load_into("query.", t.state_.query);
  load_into("key.", t.state_.key);

  auto refs = collect_params<float>(t.state_.query);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    t.opt_.first_moments()[i] = ck.tensors.at("opt.m." + refs[i].name);
    t.opt_.second_moments()[i] = ck.tensors.at("opt.v." + refs[i].name);
  }
  t.opt_.set_step_count(manifest["adam_t"].get<long>());
  t.state_.queue = ck.tensors.at("moco.queue");
  t.state_.queue_ptr = manifest["queue_ptr"].get<long>();
  t.state_.keys_seen = manifest["keys_seen"].get<long>();
  t.epoch_ = manifest["epoch"].get<long>();
  t.step_ = manifest["step"].get<long>();
  t.total_steps_ = manifest["total_steps"].get<long>();
  t.warmup_steps_ = manifest["warmup_steps"].get<long>();
  const auto& rsj = manifest["rng_state"];
  t.rng_.set_state({std::stoull(rsj[0].get<std::string>()), std::stoull(rsj[1].get<std::string>()),
                    std::stoull(rsj[2].get<std::string>()), std::stoull(rsj[3].get<std::string>())});
  return t;
}

}  // namespace s3t
