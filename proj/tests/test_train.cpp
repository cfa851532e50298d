// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include <json.hpp>

#include "s3t/checkpoint.hpp"
#include "s3t/config.hpp"
#include "s3t/optim.hpp"
#include "s3t/train.hpp"

using s3t::AdamW;
using s3t::Config;
using s3t::lr_at;
using s3t::ParamRef;
using s3t::Rng;
using s3t::Spectrogram;
using s3t::Trainer;
namespace nn = s3t::nn;

namespace {

Config tiny_train_config() {
  Config cfg;
  cfg.model.swin.input_size = 16;
  cfg.model.swin.patch_size = 4;
  cfg.model.swin.embed_dim = 8;
  cfg.model.swin.depths = {1, 1};
  cfg.model.swin.heads = {1, 2};
  cfg.model.swin.window = 2;
  cfg.model.swin.mlp_ratio = 2.0;
  cfg.model.swin.drop_path_max = 0.1;
  cfg.moco.queue_size = 8;
  cfg.moco.proj_dim = 8;
  cfg.moco.proj_hidden = 16;
  cfg.train.batch_size = 2;
  cfg.train.epochs = 4;
  cfg.train.warmup_epochs = 1;
  cfg.train.checkpoint_interval = 2;
  cfg.train.seed = 7;
  return cfg;
}

std::vector<Spectrogram> random_specs(int n, int bins, int frames, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Spectrogram> specs(n);
  for (auto& s : specs) {
    s.values.resize(bins, frames);
    for (int f = 0; f < bins; ++f) {
      for (int t = 0; t < frames; ++t) s.values(f, t) = std::abs(static_cast<float>(rng.normal()));
    }
    s.frame_rate = 10.0;
  }
  return specs;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("s3t_train_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("learning-rate schedule: warm-up, peak, midpoint, and tail") {
  const double base = 0.0005;
  const long total = 1000, warmup = 100;
  // Linear ramp from zero up to the base rate at the end of warm-up.
  CHECK(lr_at(0, total, warmup, base) == 0.0);
  CHECK(std::abs(lr_at(50, total, warmup, base) - 0.5 * base) < 1e-18);
  CHECK(lr_at(warmup, total, warmup, base) == base);
  for (long s = 1; s <= warmup; ++s) {
    CHECK(lr_at(s, total, warmup, base) > lr_at(s - 1, total, warmup, base));
  }
  // Cosine half-period: half the base rate at the midpoint, zero at the end.
  const long mid = warmup + (total - warmup) / 2;
  CHECK(std::abs(lr_at(mid, total, warmup, base) - 0.5 * base) < 1e-12);
  CHECK(std::abs(lr_at(total, total, warmup, base)) < 1e-18);
  // Monotone decay after warm-up and continuity at the warm-up boundary.
  for (long s = warmup + 1; s <= total; ++s) {
    CHECK(lr_at(s, total, warmup, base) < lr_at(s - 1, total, warmup, base));
  }
  CHECK(std::abs(lr_at(warmup + 1, total, warmup, base) - base) < base * 1e-4);

  CHECK(lr_at(0, 100, 0, base) == base);  // no warm-up starts at the peak
  CHECK(lr_at(5, 5, 5, base) == base);    // all-warm-up schedule stays flat
  CHECK_THROWS_AS(lr_at(-1, total, warmup, base), std::invalid_argument);
  CHECK_THROWS_AS(lr_at(total + 1, total, warmup, base), std::invalid_argument);
}

TEST_CASE("optimizer follows the scalar hand recurrence exactly") {
  nn::Mat<double> theta(1, 1), grad(1, 1);
  theta(0, 0) = 0.5;
  std::vector<ParamRef<double>> refs{{"w", &theta, &grad, true}};
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01, wd = 0.05;
  AdamW<double> opt(refs, b1, b2, eps);

  // Independent recurrence carried alongside.
  double m = 0.0, v = 0.0, ref_theta = 0.5;
  const double gs[] = {0.3, -1.2, 0.05, 2.0, -0.7, 0.0, 1.1};
  for (int t = 1; t <= 7; ++t) {
    const double g = gs[t - 1];
    grad(0, 0) = g;
    opt.step(refs, lr, wd);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    ref_theta -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * ref_theta);
    CHECK(std::abs(theta(0, 0) - ref_theta) < 1e-12);
  }
  CHECK(opt.step_count() == 7);
}

TEST_CASE("optimizer edge behavior: no-op, pure decay, and error paths") {
  nn::Mat<double> w(2, 2), g(2, 2), b(1, 2), gb(1, 2);
  w << 1.0, -2.0, 3.0, 0.25;
  b << 4.0, -1.0;
  g.setZero();
  gb.setZero();
  std::vector<ParamRef<double>> refs{{"w", &w, &g, true}, {"b", &b, &gb, false}};

  // Zero gradients and zero decay leave everything untouched.
  AdamW<double> opt(refs);
  const nn::Mat<double> w0 = w;
  opt.step(refs, 0.01, 0.0);
  CHECK(w == w0);

  // Zero gradients with decay shrink flagged parameters by (1 - lr*wd) per
  // step; the no-decay parameter never moves.
  AdamW<double> opt2(refs);
  const nn::Mat<double> b0 = b;
  const double lr = 0.1, wd = 0.2;
  for (int t = 1; t <= 5; ++t) {
    opt2.step(refs, lr, wd);
    CHECK((w - w0 * std::pow(1.0 - lr * wd, t)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(b == b0);
  }

  g(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt2.step(refs, 0.01, 0.0), std::runtime_error);
  g(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(opt2.step(refs, 0.01, 0.0), std::runtime_error);
  g(0, 0) = 0.0;
  CHECK_THROWS_AS(opt2.step(refs, -0.01, 0.0), std::invalid_argument);
  std::vector<ParamRef<double>> fewer{refs[0]};
  CHECK_THROWS_AS(opt2.step(fewer, 0.01, 0.0), std::invalid_argument);
}

TEST_CASE("checkpoint files round-trip bitwise") {
  TempDir dir("ckpt");
  Rng rng(99);
  std::vector<s3t::TensorEntry> tensors;
  for (int i = 0; i < 5; ++i) {
    s3t::MatF m(3 + i, 7);
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c) m(r, c) = static_cast<float>(rng.normal());
    tensors.push_back({"t" + std::to_string(i), m});
  }
  const std::string manifest = R"({"schema_version":1,"note":"round-trip"})";
  const std::string p1 = (dir.path / "a.s3tckpt").string();
  const std::string p2 = (dir.path / "b.s3tckpt").string();
  s3t::write_checkpoint(p1, manifest, tensors);

  const s3t::CheckpointFile ck = s3t::read_checkpoint(p1);
  CHECK(ck.manifest_json == manifest);
  REQUIRE(ck.tensors.size() == tensors.size());
  for (const auto& t : tensors) {
    REQUIRE(ck.tensors.count(t.name) == 1);
    CHECK(ck.tensors.at(t.name) == t.data);  // elementwise, bit-for-bit
  }

  // Re-serializing the parsed file reproduces the original byte stream.
  std::vector<s3t::TensorEntry> again;
  for (const auto& t : tensors) again.push_back({t.name, ck.tensors.at(t.name)});
  s3t::write_checkpoint(p2, ck.manifest_json, again);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
  const std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(bytes1 == bytes2);
  CHECK(!bytes1.empty());

  CHECK_THROWS(s3t::read_checkpoint((dir.path / "missing.s3tckpt").string()));
}

TEST_CASE("interrupted training resumes bitwise-identically") {
  const Config cfg = tiny_train_config();
  const auto specs = random_specs(8, 84, 60, 2024);
  std::vector<const Spectrogram*> batch_a{&specs[0], &specs[1]};
  std::vector<const Spectrogram*> batch_b{&specs[2], &specs[3]};
  const std::vector<std::vector<const Spectrogram*>> schedule{batch_a, batch_b, batch_a,
                                                              batch_b, batch_a, batch_b};

  // Reference: six uninterrupted steps.
  Trainer ref(cfg);
  ref.set_total_steps(6);
  std::vector<float> ref_losses;
  for (const auto& batch : schedule) ref_losses.push_back(ref.step(batch).loss);

  // Same schedule, but checkpoint after step 3 and resume in a new trainer.
  TempDir dir("resume");
  Trainer first(cfg);
  first.set_total_steps(6);
  std::vector<float> split_losses;
  for (int s = 0; s < 3; ++s) split_losses.push_back(first.step(schedule[s]).loss);
  const std::string ckpt = (dir.path / "mid.s3tckpt").string();
  first.save_checkpoint(ckpt);

  Trainer second = Trainer::resume(ckpt);
  CHECK(second.current_step() == 3);
  for (int s = 3; s < 6; ++s) split_losses.push_back(second.step(schedule[s]).loss);

  REQUIRE(split_losses.size() == ref_losses.size());
  for (std::size_t i = 0; i < ref_losses.size(); ++i) CHECK(split_losses[i] == ref_losses[i]);

  // Final states agree parameter-for-parameter, bit-for-bit.
  auto rp = s3t::collect_params<float>(ref.state().query);
  auto sp = s3t::collect_params<float>(second.state().query);
  REQUIRE(rp.size() == sp.size());
  for (std::size_t i = 0; i < rp.size(); ++i) {
    CHECK(rp[i].name == sp[i].name);
    CHECK(*rp[i].value == *sp[i].value);
  }
  auto rk = s3t::collect_params<float>(ref.state().key);
  auto sk = s3t::collect_params<float>(second.state().key);
  for (std::size_t i = 0; i < rk.size(); ++i) CHECK(*rk[i].value == *sk[i].value);
  CHECK(ref.state().queue == second.state().queue);
  CHECK(ref.state().queue_ptr == second.state().queue_ptr);
  CHECK(ref.state().keys_seen == second.state().keys_seen);

  // Saving both at the end produces identical tensor payloads. (The manifest
  // epoch counter records "next epoch to run", so the resumed trainer reports
  // one epoch more than the never-checkpointed reference; everything else in
  // the manifests must agree.)
  const std::string pa = (dir.path / "final_a.s3tckpt").string();
  const std::string pb = (dir.path / "final_b.s3tckpt").string();
  ref.save_checkpoint(pa);
  second.save_checkpoint(pb);
  const s3t::CheckpointFile ca = s3t::read_checkpoint(pa);
  const s3t::CheckpointFile cb = s3t::read_checkpoint(pb);
  REQUIRE(ca.tensors.size() == cb.tensors.size());
  for (const auto& [name, data] : ca.tensors) {
    REQUIRE(cb.tensors.count(name) == 1);
    CHECK(data == cb.tensors.at(name));
  }
  auto ma = nlohmann::json::parse(ca.manifest_json);
  auto mb = nlohmann::json::parse(cb.manifest_json);
  ma.erase("epoch");
  mb.erase("epoch");
  CHECK(ma == mb);
}

TEST_CASE("epoch loop trains, logs, and checkpoints deterministically") {
  const Config cfg = tiny_train_config();
  const auto specs = random_specs(6, 84, 60, 11);

  TempDir d1("run1"), d2("run2");
  Trainer t1(cfg), t2(cfg);
  const std::string c1 = t1.run(specs, d1.path.string());
  const std::string c2 = t2.run(specs, d2.path.string());
  // 6 specs / batch 2 = 3 steps per epoch, 4 epochs.
  CHECK(t1.loss_trace().size() == 12);
  CHECK(t1.current_epoch() == 4);
  CHECK(std::filesystem::exists(c1));
  CHECK(std::filesystem::exists(d1.path / "diagnostics.jsonl"));

  // Same seed, same data: identical traces and identical checkpoint bytes.
  REQUIRE(t2.loss_trace().size() == t1.loss_trace().size());
  for (std::size_t i = 0; i < t1.loss_trace().size(); ++i) {
    CHECK(t1.loss_trace()[i] == t2.loss_trace()[i]);
  }
  std::ifstream f1(c1, std::ios::binary), f2(c2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  Trainer t3(cfg);
  CHECK_THROWS_AS(t3.step({}), std::invalid_argument);
  std::vector<const Spectrogram*> bad{&specs[0], &specs[1], &specs[2]};  // 3 does not divide 8
  CHECK_THROWS_AS(t3.step(bad), std::invalid_argument);
  CHECK_THROWS_AS(t3.run({specs[0]}, (d1.path / "short").string()), std::invalid_argument);
}

TEST_CASE("configuration text file round-trips every field") {
  TempDir dir("cfg");
  Config cfg = Config::desk_scale();
  cfg.frontend.compress = 7;
  cfg.augment.crop_ratio_lo = 0.33;
  cfg.model.preprocessor = "tiling";
  cfg.model.swin.depths = {2, 3, 4};
  cfg.model.swin.heads = {2, 4, 8};
  cfg.moco.temperature = 0.123;
  cfg.moco.symmetric = true;
  cfg.train.seed = 31337;
  cfg.train.base_lr = 0.00025;
  cfg.eval.chunk_frames = 555;

  const std::string path = (dir.path / "cfg.ini").string();
  cfg.save(path);
  const Config back = Config::load(path);
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.model.swin.depths == cfg.model.swin.depths);
  CHECK(back.moco.symmetric == true);
  CHECK(back.train.seed == 31337);

  // JSON round-trip and targeted set() agree with the map form.
  Config viaj = Config::from_json(cfg.to_json());
  CHECK(viaj.to_json() == cfg.to_json());
  Config edited = cfg;
  edited.set("train", "batch_size", "64");
  CHECK(edited.train.batch_size == 64);
  CHECK_THROWS(edited.set("train", "no_such_key", "1"));
  CHECK_THROWS(edited.set("no_such_section", "x", "1"));
}
