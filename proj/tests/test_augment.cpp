// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "s3t/augment.hpp"
#include "s3t/rng.hpp"

namespace {

s3t::Spectrogram random_spec(int f, int t, std::uint64_t seed) {
  s3t::Rng rng(seed);
  s3t::Spectrogram spec;
  spec.frame_rate = 43.0f;
  spec.values.resize(f, t);
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < t; ++j) spec.values(i, j) = static_cast<float>(rng.uniform());
  }
  return spec;
}

int masked_rows(const s3t::FreqMaskRecord& rec, int f) {
  std::vector<char> hit(f, 0);
  for (const auto& seg : rec.segments) {
    for (int i = seg.start; i < seg.start + seg.length; ++i) hit[i] = 1;
  }
  int n = 0;
  for (char h : hit) n += h;
  return n;
}

int masked_cols(const s3t::TimeMaskRecord& rec, int t) {
  std::vector<char> hit(t, 0);
  for (const auto& seg : rec.segments) {
    for (int i = seg.start; i < seg.start + seg.length; ++i) hit[i] = 1;
  }
  int n = 0;
  for (char h : hit) n += h;
  return n;
}

}  // namespace

TEST_CASE("crop lengths follow floor(T * r) with r in [0.1, 0.9] over 10k draws") {
  const s3t::AugmentConfig cfg;
  s3t::Rng rng(101);
  const int t = 100;
  for (int i = 0; i < 10000; ++i) {
    const auto rec = s3t::sample_crop(t, cfg, rng);
    CHECK(rec.ratio >= 0.1);
    CHECK(rec.ratio <= 0.9);
    CHECK(rec.length == static_cast<int>(t * rec.ratio));
    CHECK(rec.length >= 10);
    CHECK(rec.length <= 90);
    CHECK(rec.start >= 0);
    CHECK(rec.start + rec.length <= t);
  }
}

TEST_CASE("crop of a too-short spectrogram is rejected") {
  const s3t::AugmentConfig cfg;
  s3t::Rng rng(1);
  const auto spec = random_spec(84, 9, 2);
  CHECK_THROWS(s3t::random_multi_crop(spec, cfg, rng));
}

TEST_CASE("frequency mask stays within bounds and cap over 10k draws") {
  const s3t::AugmentConfig cfg;
  const int f = 84;
  const int cap = static_cast<int>(cfg.freq_mask_total_cap_ratio * f);  // 33
  s3t::Rng rng(202);
  for (int i = 0; i < 10000; ++i) {
    const auto rec = s3t::sample_freq_mask(f, cfg, rng);
    CHECK(static_cast<int>(rec.segments.size()) <= cfg.freq_mask_n_hi);
    int total = 0;
    for (const auto& seg : rec.segments) {
      CHECK(seg.length >= cfg.freq_mask_len_lo);
      CHECK(seg.length <= cfg.freq_mask_len_hi);
      CHECK(seg.start >= 0);
      CHECK(seg.start + seg.length <= f);
      total += seg.length;
    }
    CHECK(total <= cap);
    CHECK(masked_rows(rec, f) <= cap);
  }
}

TEST_CASE("frequency mask zeroes exactly the recorded rows") {
  auto spec = random_spec(84, 40, 3);
  s3t::FreqMaskRecord rec;
  rec.applied = true;
  rec.segments = {{0, 5}};
  const auto out = s3t::apply_freq_mask(spec, rec);
  for (int i = 0; i < 5; ++i) CHECK(out.values.row(i).cwiseAbs().maxCoeff() == 0.0f);
  for (int i = 5; i < 84; ++i) CHECK(out.values.row(i) == spec.values.row(i));
}

TEST_CASE("time mask respects the 0.4T budget over 10k draws at T=100") {
  const s3t::AugmentConfig cfg;
  const int t = 100;
  s3t::Rng rng(303);
  for (int i = 0; i < 10000; ++i) {
    const auto rec = s3t::sample_time_mask(t, cfg, rng);
    CHECK(static_cast<int>(rec.segments.size()) <= cfg.time_mask_n_hi);
    int total = 0;
    for (const auto& seg : rec.segments) {
      CHECK(seg.length >= 1);
      CHECK(seg.start >= 0);
      CHECK(seg.start + seg.length <= t);
      total += seg.length;
    }
    CHECK(total <= 40);
    CHECK(masked_cols(rec, t) <= 40);
  }
}

TEST_CASE("time mask zeroes exactly the recorded columns") {
  auto spec = random_spec(84, 100, 4);
  s3t::TimeMaskRecord rec;
  rec.applied = true;
  rec.segments = {{10, 10}};
  const auto out = s3t::apply_time_mask(spec, rec);
  for (int j = 10; j < 20; ++j) CHECK(out.values.col(j).cwiseAbs().maxCoeff() == 0.0f);
  for (int j = 0; j < 10; ++j) CHECK(out.values.col(j) == spec.values.col(j));
  for (int j = 20; j < 100; ++j) CHECK(out.values.col(j) == spec.values.col(j));
}

TEST_CASE("time warp parameter bounds over 10k draws") {
  const s3t::AugmentConfig cfg;
  const int t = 100;
  s3t::Rng rng(404);
  for (int i = 0; i < 10000; ++i) {
    const auto rec = s3t::sample_time_warp(t, cfg, rng);
    if (rec.identity) continue;
    CHECK(rec.w >= 0);
    CHECK(rec.w <= 10);
    CHECK(rec.anchor >= rec.w + 1);
    CHECK(rec.anchor <= t - rec.w - 1);
    CHECK((rec.direction == 1 || rec.direction == -1));
  }
}

TEST_CASE("zero warp is the identity and constants stay constant") {
  const auto spec = random_spec(84, 60, 5);
  s3t::TimeWarpRecord rec;
  rec.applied = true;
  rec.w = 0;
  rec.anchor = 30;
  const auto out = s3t::apply_time_warp(spec, rec);
  CHECK(out.values == spec.values);

  s3t::Spectrogram constant;
  constant.frame_rate = 1.0f;
  constant.values = s3t::MatF::Constant(4, 50, 0.3f);
  s3t::TimeWarpRecord warp;
  warp.applied = true;
  warp.w = 7;
  warp.anchor = 20;
  warp.direction = 1;
  const auto cw = s3t::apply_time_warp(constant, warp);
  CHECK(cw.values.isApproxToConstant(0.3f, 1e-6f));
}

TEST_CASE("warping moves an impulse to the remapped anchor") {
  // Brute-force interpolation oracle on a 1 x T row: piecewise-linear map
  // sending anchor -> anchor + w, endpoints fixed.
  const int t = 100;
  for (const auto& [anchor, w, dir] : std::vector<std::tuple<int, int, int>>{
           {30, 8, 1}, {30, 8, -1}, {50, 10, 1}, {15, 5, -1}}) {
    CAPTURE(anchor);
    CAPTURE(w);
    CAPTURE(dir);
    s3t::Spectrogram spec;
    spec.frame_rate = 1.0f;
    spec.values = s3t::MatF::Zero(1, t);
    spec.values(0, anchor) = 1.0f;

    s3t::TimeWarpRecord rec;
    rec.applied = true;
    rec.w = w;
    rec.anchor = anchor;
    rec.direction = dir;
    const auto out = s3t::apply_time_warp(spec, rec);

    // Mass centroid of the warped impulse sits at anchor + dir*w.
    double mass = 0, centroid = 0;
    for (int j = 0; j < t; ++j) {
      mass += out.values(0, j);
      centroid += j * out.values(0, j);
    }
    REQUIRE(mass > 0);
    centroid /= mass;
    CHECK(std::abs(centroid - (anchor + dir * w)) <= 1.0);

    // Brute-force oracle: same map evaluated sample by sample.
    const int target = anchor + dir * w;
    for (int j = 0; j < t; ++j) {
      const double src = j <= target
                             ? static_cast<double>(j) * anchor / target
                             : anchor + static_cast<double>(j - target) * (t - 1 - anchor) /
                                            (t - 1 - target);
      const int lo = static_cast<int>(std::floor(src));
      const double frac = src - lo;
      const double expected = (1.0 - frac) * spec.values(0, lo) +
                              (lo + 1 < t ? frac * spec.values(0, lo + 1) : 0.0);
      CHECK(out.values(0, j) == doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("shift bounds and direct displacement semantics") {
  const s3t::AugmentConfig cfg;
  s3t::Rng rng(505);
  for (int i = 0; i < 10000; ++i) {
    const auto rec = s3t::sample_shift(84, 50, cfg, rng);
    CHECK((rec.axis == 0 || rec.axis == 1));
    CHECK((rec.direction == 1 || rec.direction == -1));
    CHECK(rec.step >= 1);
    CHECK(rec.step <= 10);
    CHECK(rec.step < (rec.axis == 0 ? 84 : 50));
  }

  s3t::Spectrogram spec;
  spec.frame_rate = 1.0f;
  spec.values = s3t::MatF::Zero(20, 20);
  spec.values(10, 5) = 1.0f;

  s3t::ShiftRecord right;
  right.applied = true;
  right.axis = 1;
  right.step = 2;
  right.direction = 1;
  auto out = s3t::apply_shift(spec, right);
  CHECK(out.values(10, 7) == 1.0f);
  CHECK(out.values.col(0).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(out.values.col(1).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(out.values.sum() == 1.0f);

  s3t::ShiftRecord down;
  down.applied = true;
  down.axis = 0;
  down.step = 3;
  down.direction = -1;
  out = s3t::apply_shift(spec, down);
  CHECK(out.values(7, 5) == 1.0f);
  CHECK(out.values.sum() == 1.0f);
}

TEST_CASE("shift then inverse shift restores everything outside the zero band") {
  const auto spec = random_spec(30, 40, 6);
  s3t::ShiftRecord fwd;
  fwd.applied = true;
  fwd.axis = 1;
  fwd.step = 4;
  fwd.direction = 1;
  s3t::ShiftRecord bwd = fwd;
  bwd.direction = -1;
  const auto round = s3t::apply_shift(s3t::apply_shift(spec, fwd), bwd);
  // Columns [0, T-4) survive; the last 4 columns were pushed out and zeroed.
  CHECK(round.values.leftCols(36) == spec.values.leftCols(36));
  CHECK(round.values.rightCols(4).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("pipeline fire rates match (0.5, 0.5, 0.4, 0.4) within 3 sigma over 20k runs") {
  const s3t::AugmentConfig cfg;
  const auto spec = random_spec(84, 120, 7);
  s3t::Rng rng(606);
  long n_views = 0;
  long fired[4] = {0, 0, 0, 0};
  for (int i = 0; i < 20000; ++i) {
    const auto pair = s3t::augment_pair(spec, cfg, rng);
    for (const auto* view : {&pair.provenance.query, &pair.provenance.key}) {
      ++n_views;
      fired[0] += view->freq_mask.applied;
      fired[1] += view->time_mask.applied;
      fired[2] += view->time_warp.applied;
      fired[3] += view->shift.applied;
    }
  }
  const double p_expected[4] = {cfg.freq_mask_p, cfg.time_mask_p, cfg.time_warp_p, cfg.shift_p};
  for (int k = 0; k < 4; ++k) {
    const double p_hat = static_cast<double>(fired[k]) / static_cast<double>(n_views);
    const double sigma = std::sqrt(p_expected[k] * (1 - p_expected[k]) / n_views);
    CHECK(std::abs(p_hat - p_expected[k]) <= 3.0 * sigma);
  }
}

TEST_CASE("pipeline outputs stay non-negative and masks respect budgets on every run") {
  const s3t::AugmentConfig cfg;
  const auto spec = random_spec(84, 90, 8);
  s3t::Rng rng(707);
  for (int i = 0; i < 2000; ++i) {
    const auto pair = s3t::augment_pair(spec, cfg, rng);
    CHECK(pair.query.values.minCoeff() >= 0.0f);
    CHECK(pair.key.values.minCoeff() >= 0.0f);
    for (const auto* view : {&pair.provenance.query, &pair.provenance.key}) {
      CHECK(masked_rows(view->freq_mask, 84) <= 33);
      const int crop_t = view->crop.length;
      CHECK(masked_cols(view->time_mask, crop_t) <=
            static_cast<int>(cfg.time_mask_total_cap_ratio * crop_t));
    }
  }
}

TEST_CASE("provenance replay reproduces the pair bit-exactly") {
  const s3t::AugmentConfig cfg;
  const auto spec = random_spec(84, 110, 9);
  s3t::Rng rng(808);
  for (int i = 0; i < 200; ++i) {
    const auto pair = s3t::augment_pair(spec, cfg, rng);
    const auto again = s3t::replay_pair(spec, pair.provenance);
    CHECK(again.query.values == pair.query.values);
    CHECK(again.key.values == pair.key.values);

    // Through the text round trip as well.
    const auto prov = s3t::PairProvenance::from_text(pair.provenance.to_text());
    const auto replayed = s3t::replay_pair(spec, prov);
    CHECK(replayed.query.values == pair.query.values);
    CHECK(replayed.key.values == pair.key.values);
  }
}

TEST_CASE("fixed seed reproduces identical pairs") {
  const s3t::AugmentConfig cfg;
  const auto spec = random_spec(84, 75, 10);
  s3t::Rng a(909), b(909);
  for (int i = 0; i < 50; ++i) {
    const auto pa = s3t::augment_pair(spec, cfg, a);
    const auto pb = s3t::augment_pair(spec, cfg, b);
    CHECK(pa.query.values == pb.query.values);
    CHECK(pa.key.values == pb.key.values);
  }
}

TEST_CASE("all-miss gate draws leave the raw crops untouched") {
  s3t::AugmentConfig cfg;
  cfg.freq_mask_p = cfg.time_mask_p = cfg.time_warp_p = cfg.shift_p = 0.0;
  const auto spec = random_spec(84, 100, 11);
  s3t::Rng rng(111);
  const auto pair = s3t::augment_pair(spec, cfg, rng);
  const auto& qc = pair.provenance.query.crop;
  const auto& kc = pair.provenance.key.crop;
  CHECK(pair.query.values == spec.values.middleCols(qc.start, qc.length));
  CHECK(pair.key.values == spec.values.middleCols(kc.start, kc.length));
}
