// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line surface: featurize | augment-preview | pretrain | probe |
// synth | inspect-ckpt. Exit codes: 0 success, 1 user error, 2 internal.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "s3t/augment.hpp"
#include "s3t/checkpoint.hpp"
#include "s3t/config.hpp"
#include "s3t/data/manifest.hpp"
#include "s3t/data/synth.hpp"
#include "s3t/eval.hpp"
#include "s3t/train.hpp"

namespace {

s3t::Config load_config_or_preset(const std::string& path, const std::string& preset) {
  if (!path.empty()) return s3t::Config::load(path);
  if (preset == "desk") return s3t::Config::desk_scale();
  if (preset == "full") return s3t::Config::full_scale();
  throw std::invalid_argument("unknown preset '" + preset + "' (expected desk or full)");
}

int run_synth(int classes, int per_class, double duration, std::uint64_t seed,
              const std::string& out_dir) {
  s3t::SyntheticSpec spec;
  spec.clips_per_class = per_class;
  spec.duration_s = duration;
  spec.recipes = s3t::default_recipes(classes);
  const std::string manifest = s3t::generate_synthetic(spec, seed, out_dir);
  std::cout << "wrote " << classes * per_class << " clips; manifest at " << manifest << "\n";
  return 0;
}

int run_featurize(const std::string& manifest_path, const std::string& ckpt,
                  const std::string& config_path, const std::string& preset,
                  const std::string& split, const std::string& out, std::uint64_t seed,
                  int threads, bool random_init) {
  const s3t::LabeledDataset ds = s3t::load_manifest(manifest_path);
  s3t::Config cfg;
  s3t::MocoModel<float> model;
  if (random_init) {
    cfg = load_config_or_preset(config_path, preset);
    model = s3t::MocoModel<float>(cfg.model.swin, cfg.moco);
    model.init(seed);
  } else {
    if (ckpt.empty()) throw std::invalid_argument("--checkpoint required unless --random-init");
    s3t::LoadedModel lm = s3t::load_query_model(ckpt);
    cfg = lm.cfg;
    model = std::move(lm.model);
  }
  std::vector<int> rows;
  if (split == "all") {
    for (int i = 0; i < static_cast<int>(ds.rows.size()); ++i) rows.push_back(i);
  } else {
    rows = ds.split_indices(split);
  }
  std::vector<std::string> diags;
  const s3t::FeatureTable table = s3t::featurize(ds, rows, model, cfg, threads, &diags);
  s3t::write_feature_table(out, table);
  for (const auto& d : diags) std::cerr << d << "\n";
  std::cout << "wrote " << table.rows.size() << " feature rows (" << table.feature_dim()
            << "-dim) to " << out << "\n";
  if (!diags.empty()) {
    std::cerr << diags.size() << " rows skipped\n";
    return 2;
  }
  return 0;
}

int run_augment_preview(const std::string& wav, const std::string& spec_path,
                        const std::string& config_path, const std::string& preset,
                        std::uint64_t seed, const std::string& out_dir) {
  const s3t::Config cfg = load_config_or_preset(config_path, preset);
  s3t::Spectrogram spec;
  if (!wav.empty()) {
    spec = s3t::compute_frontend(wav, cfg.frontend);
  } else if (!spec_path.empty()) {
    spec = s3t::read_spectrogram(spec_path);
  } else {
    throw std::invalid_argument("one of --wav or --spec is required");
  }
  s3t::Rng rng(seed);
  const s3t::AugmentedPair pair = s3t::augment_pair(spec, cfg.augment, rng);

  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  s3t::write_spectrogram((dir / "source.s3tspec").string(), spec);
  s3t::write_spectrogram((dir / "query.s3tspec").string(), pair.query);
  s3t::write_spectrogram((dir / "key.s3tspec").string(), pair.key);
  std::ofstream prov(dir / "provenance.txt");
  prov << pair.provenance.to_text();
  std::cout << "source " << spec.f_bins() << "x" << spec.t_frames() << ", query "
            << pair.query.f_bins() << "x" << pair.query.t_frames() << ", key "
            << pair.key.f_bins() << "x" << pair.key.t_frames() << "\n"
            << pair.provenance.to_text();
  return 0;
}

int run_pretrain(const std::string& manifest_path, const std::string& config_path,
                 const std::string& preset, const std::string& resume_path,
                 const std::string& out_dir, const std::string& cache_dir, std::uint64_t seed,
                 int threads) {
  std::filesystem::create_directories(out_dir);
  s3t::Config cfg;
  if (resume_path.empty()) {
    cfg = load_config_or_preset(config_path, preset);
    cfg.train.seed = seed;
    if (threads > 0) cfg.train.threads = threads;
  }
  const s3t::LabeledDataset ds = s3t::load_manifest(manifest_path);
  const std::vector<int> train_rows = ds.split_indices("train");
  if (train_rows.empty()) throw std::invalid_argument("manifest has no train rows");

  if (resume_path.empty()) {
    const auto specs = s3t::load_or_build_cache(ds, train_rows, cfg.frontend, cache_dir,
                                                std::max(1, cfg.train.threads));
    s3t::Trainer trainer(cfg);
    const std::string ckpt = trainer.run(specs, out_dir);
    std::cout << "final checkpoint: " << ckpt << "\n";
  } else {
    s3t::Trainer trainer = s3t::Trainer::resume(resume_path);
    const auto specs = s3t::load_or_build_cache(ds, train_rows, trainer.config().frontend,
                                                cache_dir, std::max(1, trainer.config().train.threads));
    const std::string ckpt = trainer.run(specs, out_dir);
    std::cout << "final checkpoint: " << ckpt << "\n";
  }
  return 0;
}

int run_probe(const std::string& features_path, const std::string& manifest_path,
              const std::string& task, double fraction, int repeats, std::uint64_t seed,
              const std::string& json_out) {
  s3t::FeatureTable all = s3t::read_feature_table(features_path);
  const s3t::LabeledDataset ds = s3t::load_manifest(manifest_path, /*check_paths=*/false);
  all.task = task == "tagging" ? s3t::TaskKind::kMultiLabel : s3t::TaskKind::kSingleLabel;
  all.label_names = ds.vocabulary;

  std::map<std::string, const s3t::ManifestRow*> by_id;
  for (const auto& r : ds.rows) by_id[r.id] = &r;
  s3t::FeatureTable train, test;
  train.task = test.task = all.task;
  train.label_names = test.label_names = all.label_names;
  for (const auto& row : all.rows) {
    const auto it = by_id.find(row.id);
    if (it == by_id.end()) {
      std::cerr << "feature row " << row.id << " missing from manifest; skipped\n";
      continue;
    }
    if (it->second->split == "train") {
      train.rows.push_back(row);
    } else if (it->second->split == "test") {
      test.rows.push_back(row);
    }
  }
  if (train.rows.empty() || test.rows.empty()) {
    throw std::invalid_argument("need feature rows in both train and test splits");
  }
  if (fraction < 1.0) train = s3t::subset_table(train, fraction, seed);

  const s3t::MetricsReport report =
      s3t::repeated_eval(train, test, s3t::Config{}.eval, repeats, seed);
  std::cout << report.to_text();
  if (!json_out.empty()) {
    std::ofstream os(json_out);
    os << report.to_json() << "\n";
  }
  return 0;
}

int run_inspect(const std::string& path) {
  const s3t::CheckpointFile ck = s3t::read_checkpoint(path);
  std::cout << nlohmann::json::parse(ck.manifest_json).dump(2) << "\n\n";
  std::size_t width = 0;
  for (const auto& [name, t] : ck.tensors) width = std::max(width, name.size());
  for (const auto& [name, t] : ck.tensors) {
    std::cout << name << std::string(width + 2 - name.size(), ' ') << t.rows() << " x " << t.cols()
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"S3T music-representation pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string config_path, preset = "desk";
  int threads = 1;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key=value sections)");
    sub->add_option("--preset", preset, "built-in config preset: desk | full")
        ->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
  int classes = 4, per_class = 50;
  double duration = 6.0;
  std::string out_dir;
  synth->add_option("--classes", classes, "number of classes")->capture_default_str();
  synth->add_option("--per-class", per_class, "clips per class")->capture_default_str();
  synth->add_option("--duration", duration, "clip length in seconds")->capture_default_str();
  synth->add_option("--out", out_dir, "output directory")->required();
  add_common(synth);

  auto* feat = app.add_subcommand("featurize", "extract frozen features from a checkpoint");
  std::string manifest_path, ckpt_path, split = "all", out_path;
  bool random_init = false;
  feat->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  feat->add_option("--checkpoint", ckpt_path, "pretraining checkpoint");
  feat->add_option("--split", split, "train | valid | test | all")->capture_default_str();
  feat->add_option("--out", out_path, "output feature table")->required();
  feat->add_option("--threads", threads, "worker threads")->capture_default_str();
  feat->add_flag("--random-init", random_init, "use a freshly initialized encoder instead");
  add_config(feat);
  add_common(feat);

  auto* aug = app.add_subcommand("augment-preview", "run the augmentation pair sampler once");
  std::string wav_path, spec_path;
  aug->add_option("--wav", wav_path, "input WAV (runs the frontend)");
  aug->add_option("--spec", spec_path, "input spectrogram file");
  aug->add_option("--out", out_dir, "output directory")->required();
  add_config(aug);
  add_common(aug);

  auto* pre = app.add_subcommand("pretrain", "momentum-contrast pretraining");
  std::string resume_path, cache_dir;
  pre->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--resume", resume_path, "resume from this checkpoint");
  pre->add_option("--cache-dir", cache_dir, "spectrogram cache directory");
  pre->add_option("--threads", threads, "worker threads (determinism at 1)")
      ->capture_default_str();
  add_config(pre);
  add_common(pre);

  auto* probe = app.add_subcommand("probe", "linear probe on frozen features");
  std::string features_path, task = "genre", json_out;
  double fraction = 1.0;
  int repeats = 1;
  probe->add_option("--features", features_path, "feature table file")->required();
  probe->add_option("--labels", manifest_path, "manifest CSV providing labels/splits")->required();
  probe->add_option("--task", task, "genre | tagging")->capture_default_str();
  probe->add_option("--fraction", fraction, "labeled training fraction in (0,1]")
      ->capture_default_str();
  probe->add_option("--repeats", repeats, "probe retraining repeats")->capture_default_str();
  probe->add_option("--json", json_out, "also write the report as JSON here");
  add_common(probe);

  auto* inspect = app.add_subcommand("inspect-ckpt", "print checkpoint manifest and tensors");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(classes, per_class, duration, seed, out_dir);
    if (feat->parsed()) {
      return run_featurize(manifest_path, ckpt_path, config_path, preset, split, out_path, seed,
                           threads, random_init);
    }
    if (aug->parsed()) {
      return run_augment_preview(wav_path, spec_path, config_path, preset, seed, out_dir);
    }
    if (pre->parsed()) {
      return run_pretrain(manifest_path, config_path, preset, resume_path, out_dir, cache_dir,
                          seed, threads);
    }
    if (probe->parsed()) {
      return run_probe(features_path, manifest_path, task, fraction, repeats, seed, json_out);
    }
    if (inspect->parsed()) return run_inspect(inspect_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
