// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/augment.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

namespace s3t {

void AugmentConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(freq_mask_p) || !prob(time_mask_p) || !prob(time_warp_p) || !prob(shift_p)) {
    throw std::invalid_argument("augment probabilities must lie in [0, 1]");
  }
  if (crop_ratio_lo > crop_ratio_hi || freq_mask_n_lo > freq_mask_n_hi ||
      freq_mask_len_lo > freq_mask_len_hi || time_mask_n_lo > time_mask_n_hi ||
      time_mask_ratio_lo > time_mask_ratio_hi || time_warp_w_lo > time_warp_w_hi ||
      shift_step_lo > shift_step_hi) {
    throw std::invalid_argument("augment ranges must satisfy low <= high");
  }
}

// ---- samplers ----

CropRecord sample_crop(int t_frames, const AugmentConfig& cfg, Rng& rng) {
  if (t_frames < 10) {
    throw std::invalid_argument("random_multi_crop requires at least 10 frames");
  }
  CropRecord rec;
  rec.ratio = rng.uniform(cfg.crop_ratio_lo, cfg.crop_ratio_hi);
  rec.length = std::max(1, static_cast<int>(t_frames * rec.ratio));
  rec.start = static_cast<int>(rng.uniform_int(0, t_frames - rec.length));
  return rec;
}

FreqMaskRecord sample_freq_mask(int f_bins, const AugmentConfig& cfg, Rng& rng) {
  FreqMaskRecord rec;
  rec.applied = true;
  const int cap = static_cast<int>(cfg.freq_mask_total_cap_ratio * f_bins);
  const int n = static_cast<int>(rng.uniform_int(cfg.freq_mask_n_lo, cfg.freq_mask_n_hi));
  int used = 0;
  for (int i = 0; i < n; ++i) {
    // Segments that would blow the cap get their length redrawn; when even
    // the minimum length no longer fits, the remaining segments are skipped.
    if (cap - used < cfg.freq_mask_len_lo) break;
    int len = static_cast<int>(rng.uniform_int(cfg.freq_mask_len_lo, cfg.freq_mask_len_hi));
    while (used + len > cap) {
      len = static_cast<int>(rng.uniform_int(cfg.freq_mask_len_lo, cfg.freq_mask_len_hi));
    }
    len = std::min(len, f_bins);
    MaskSegment seg;
    seg.length = len;
    seg.start = static_cast<int>(rng.uniform_int(0, f_bins - len));
    rec.segments.push_back(seg);
    used += len;
  }
  return rec;
}

TimeMaskRecord sample_time_mask(int t_frames, const AugmentConfig& cfg, Rng& rng) {
  TimeMaskRecord rec;
  rec.applied = true;
  const int cap = static_cast<int>(cfg.time_mask_total_cap_ratio * t_frames);
  const int n = static_cast<int>(rng.uniform_int(cfg.time_mask_n_lo, cfg.time_mask_n_hi));
  int used = 0;
  for (int i = 0; i < n; ++i) {
    if (used >= cap) break;
    const double r = rng.uniform(cfg.time_mask_ratio_lo, cfg.time_mask_ratio_hi);
    int len = static_cast<int>(t_frames * r);
    len = std::min(len, cap - used);  // truncate at the budget
    if (len <= 0) continue;
    MaskSegment seg;
    seg.length = len;
    seg.start = static_cast<int>(rng.uniform_int(0, t_frames - len));
    rec.segments.push_back(seg);
    used += len;
  }
  return rec;
}

TimeWarpRecord sample_time_warp(int t_frames, const AugmentConfig& cfg, Rng& rng) {
  TimeWarpRecord rec;
  rec.applied = true;
  if (t_frames <= 2 * cfg.time_warp_w_hi) {
    rec.identity = true;
    return rec;
  }
  rec.w = static_cast<int>(rng.uniform_int(cfg.time_warp_w_lo, cfg.time_warp_w_hi));
  rec.direction = rng.bernoulli(0.5) ? 1 : -1;
  if (rec.w == 0 || t_frames < 2 * rec.w + 2) {
    // No anchor position satisfies w+1 <= t0 <= T-w-1 (or the warp is null).
    rec.identity = true;
    return rec;
  }
  rec.anchor = static_cast<int>(rng.uniform_int(rec.w + 1, t_frames - rec.w - 1));
  return rec;
}

ShiftRecord sample_shift(int f_bins, int t_frames, const AugmentConfig& cfg, Rng& rng) {
  ShiftRecord rec;
  rec.applied = true;
  rec.axis = rng.bernoulli(0.5) ? 0 : 1;
  rec.direction = rng.bernoulli(0.5) ? 1 : -1;
  const int axis_len = rec.axis == 0 ? f_bins : t_frames;
  if (axis_len < 2) throw std::invalid_argument("random_shift needs an axis of length >= 2");
  rec.step = static_cast<int>(
      rng.uniform_int(cfg.shift_step_lo, std::min(cfg.shift_step_hi, axis_len - 1)));
  return rec;
}

// ---- deterministic appliers ----

Spectrogram apply_crop(const Spectrogram& spec, const CropRecord& rec) {
  if (rec.start < 0 || rec.length < 1 || rec.start + rec.length > spec.t_frames()) {
    throw std::invalid_argument("crop out of range");
  }
  Spectrogram out;
  out.frame_rate = spec.frame_rate;
  out.values = spec.values.middleCols(rec.start, rec.length);
  return out;
}

Spectrogram apply_freq_mask(const Spectrogram& spec, const FreqMaskRecord& rec) {
  Spectrogram out = spec;
  if (!rec.applied) return out;
  for (const auto& seg : rec.segments) {
    out.values.middleRows(seg.start, seg.length).setZero();
  }
  return out;
}

Spectrogram apply_time_mask(const Spectrogram& spec, const TimeMaskRecord& rec) {
  Spectrogram out = spec;
  if (!rec.applied) return out;
  for (const auto& seg : rec.segments) {
    out.values.middleCols(seg.start, seg.length).setZero();
  }
  return out;
}

Spectrogram apply_time_warp(const Spectrogram& spec, const TimeWarpRecord& rec) {
  if (!rec.applied || rec.identity || rec.w == 0) return spec;
  const int t_frames = spec.t_frames();
  const int target = rec.anchor + rec.direction * rec.w;
  if (target < 1 || target > t_frames - 2) return spec;

  Spectrogram out;
  out.frame_rate = spec.frame_rate;
  out.values.resize(spec.f_bins(), t_frames);
  for (int t = 0; t < t_frames; ++t) {
    // Piecewise-linear remap: [0, target] <- [0, anchor],
    // [target, T-1] <- [anchor, T-1].
    double src;
    if (t <= target) {
      src = static_cast<double>(t) * rec.anchor / target;
    } else {
      src = rec.anchor + static_cast<double>(t - target) * (t_frames - 1 - rec.anchor) /
                             (t_frames - 1 - target);
    }
    const int t0 = std::min(static_cast<int>(src), t_frames - 1);
    const int t1 = std::min(t0 + 1, t_frames - 1);
    const float a = static_cast<float>(src - t0);
    out.values.col(t) = (1.0f - a) * spec.values.col(t0) + a * spec.values.col(t1);
  }
  return out;
}

Spectrogram apply_shift(const Spectrogram& spec, const ShiftRecord& rec) {
  if (!rec.applied || rec.step == 0) return spec;
  const int axis_len = rec.axis == 0 ? spec.f_bins() : spec.t_frames();
  if (rec.step >= axis_len) {
    throw std::invalid_argument("shift step must be smaller than the axis length");
  }
  Spectrogram out;
  out.frame_rate = spec.frame_rate;
  out.values = MatF::Zero(spec.f_bins(), spec.t_frames());
  const int s = rec.step * rec.direction;
  const int keep = axis_len - rec.step;
  if (rec.axis == 0) {
    if (s > 0) {
      out.values.bottomRows(keep) = spec.values.topRows(keep);
    } else {
      out.values.topRows(keep) = spec.values.bottomRows(keep);
    }
  } else {
    if (s > 0) {
      out.values.rightCols(keep) = spec.values.leftCols(keep);
    } else {
      out.values.leftCols(keep) = spec.values.rightCols(keep);
    }
  }
  return out;
}

// ---- sampling front ends ----

std::pair<Spectrogram, Spectrogram> random_multi_crop(const Spectrogram& spec,
                                                      const AugmentConfig& cfg, Rng& rng) {
  const CropRecord a = sample_crop(spec.t_frames(), cfg, rng);
  const CropRecord b = sample_crop(spec.t_frames(), cfg, rng);
  return {apply_crop(spec, a), apply_crop(spec, b)};
}

Spectrogram frequency_mask(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng) {
  return apply_freq_mask(spec, sample_freq_mask(spec.f_bins(), cfg, rng));
}

Spectrogram time_mask(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng) {
  return apply_time_mask(spec, sample_time_mask(spec.t_frames(), cfg, rng));
}

Spectrogram time_warp(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng) {
  return apply_time_warp(spec, sample_time_warp(spec.t_frames(), cfg, rng));
}

Spectrogram random_shift(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng) {
  return apply_shift(spec, sample_shift(spec.f_bins(), spec.t_frames(), cfg, rng));
}

namespace {

// Per-view transform chain: fixed order, each gated by its probability.
// Draw order is part of the replay contract:
//   gate, [params]  for freq_mask, time_mask, time_warp, shift in turn.
std::pair<Spectrogram, ViewProvenance> augment_view(const Spectrogram& spec, const CropRecord& crop,
                                                    const AugmentConfig& cfg, Rng& rng) {
  ViewProvenance prov;
  prov.crop = crop;
  Spectrogram cur = spec;
  if (rng.bernoulli(cfg.freq_mask_p)) {
    prov.freq_mask = sample_freq_mask(cur.f_bins(), cfg, rng);
    cur = apply_freq_mask(cur, prov.freq_mask);
  }
  if (rng.bernoulli(cfg.time_mask_p)) {
    prov.time_mask = sample_time_mask(cur.t_frames(), cfg, rng);
    cur = apply_time_mask(cur, prov.time_mask);
  }
  if (rng.bernoulli(cfg.time_warp_p)) {
    prov.time_warp = sample_time_warp(cur.t_frames(), cfg, rng);
    cur = apply_time_warp(cur, prov.time_warp);
  }
  if (rng.bernoulli(cfg.shift_p)) {
    prov.shift = sample_shift(cur.f_bins(), cur.t_frames(), cfg, rng);
    cur = apply_shift(cur, prov.shift);
  }
  return {std::move(cur), std::move(prov)};
}

Spectrogram replay_view(const Spectrogram& spec, const ViewProvenance& prov) {
  Spectrogram cur = apply_crop(spec, prov.crop);
  cur = apply_freq_mask(cur, prov.freq_mask);
  cur = apply_time_mask(cur, prov.time_mask);
  cur = apply_time_warp(cur, prov.time_warp);
  cur = apply_shift(cur, prov.shift);
  return cur;
}

}  // namespace

AugmentedPair augment_pair(const Spectrogram& spec, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const CropRecord crop_q = sample_crop(spec.t_frames(), cfg, rng);
  const CropRecord crop_k = sample_crop(spec.t_frames(), cfg, rng);

  AugmentedPair pair;
  pair.provenance.source_f = spec.f_bins();
  pair.provenance.source_t = spec.t_frames();

  auto [q, pq] = augment_view(apply_crop(spec, crop_q), crop_q, cfg, rng);
  auto [k, pk] = augment_view(apply_crop(spec, crop_k), crop_k, cfg, rng);
  pair.query = std::move(q);
  pair.key = std::move(k);
  pair.provenance.query = std::move(pq);
  pair.provenance.key = std::move(pk);
  return pair;
}

AugmentedPair replay_pair(const Spectrogram& spec, const PairProvenance& prov) {
  if (spec.f_bins() != prov.source_f || spec.t_frames() != prov.source_t) {
    throw std::invalid_argument("provenance source shape does not match spectrogram");
  }
  AugmentedPair pair;
  pair.provenance = prov;
  pair.query = replay_view(spec, prov.query);
  pair.key = replay_view(spec, prov.key);
  return pair;
}

// ---- provenance text form ----

namespace {

std::string segments_to_text(const std::vector<MaskSegment>& segs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (i) os << ";";
    os << segs[i].start << ":" << segs[i].length;
  }
  return os.str();
}

std::vector<MaskSegment> segments_from_text(const std::string& s) {
  std::vector<MaskSegment> segs;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    segs.push_back({std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
  }
  return segs;
}

void view_to_text(std::ostream& os, const std::string& name, const ViewProvenance& v) {
  os << name << ".crop.ratio=" << std::hexfloat << v.crop.ratio << std::defaultfloat << "\n";
  os << name << ".crop.length=" << v.crop.length << "\n";
  os << name << ".crop.start=" << v.crop.start << "\n";
  os << name << ".freq_mask.applied=" << v.freq_mask.applied << "\n";
  os << name << ".freq_mask.segments=" << segments_to_text(v.freq_mask.segments) << "\n";
  os << name << ".time_mask.applied=" << v.time_mask.applied << "\n";
  os << name << ".time_mask.segments=" << segments_to_text(v.time_mask.segments) << "\n";
  os << name << ".time_warp.applied=" << v.time_warp.applied << "\n";
  os << name << ".time_warp.identity=" << v.time_warp.identity << "\n";
  os << name << ".time_warp.w=" << v.time_warp.w << "\n";
  os << name << ".time_warp.anchor=" << v.time_warp.anchor << "\n";
  os << name << ".time_warp.direction=" << v.time_warp.direction << "\n";
  os << name << ".shift.applied=" << v.shift.applied << "\n";
  os << name << ".shift.axis=" << v.shift.axis << "\n";
  os << name << ".shift.step=" << v.shift.step << "\n";
  os << name << ".shift.direction=" << v.shift.direction << "\n";
}

}  // namespace

std::string PairProvenance::to_text() const {
  std::ostringstream os;
  os << "source_f=" << source_f << "\n";
  os << "source_t=" << source_t << "\n";
  view_to_text(os, "query", query);
  view_to_text(os, "key", key);
  return os.str();
}

PairProvenance PairProvenance::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto geti = [&](const std::string& k) { return std::stoi(kv.at(k)); };
  auto getd = [&](const std::string& k) { return std::strtod(kv.at(k).c_str(), nullptr); };

  PairProvenance p;
  p.source_f = geti("source_f");
  p.source_t = geti("source_t");
  auto load_view = [&](const std::string& name, ViewProvenance& v) {
    v.crop.ratio = getd(name + ".crop.ratio");
    v.crop.length = geti(name + ".crop.length");
    v.crop.start = geti(name + ".crop.start");
    v.freq_mask.applied = geti(name + ".freq_mask.applied") != 0;
    v.freq_mask.segments = segments_from_text(kv.at(name + ".freq_mask.segments"));
    v.time_mask.applied = geti(name + ".time_mask.applied") != 0;
    v.time_mask.segments = segments_from_text(kv.at(name + ".time_mask.segments"));
    v.time_warp.applied = geti(name + ".time_warp.applied") != 0;
    v.time_warp.identity = geti(name + ".time_warp.identity") != 0;
    v.time_warp.w = geti(name + ".time_warp.w");
    v.time_warp.anchor = geti(name + ".time_warp.anchor");
    v.time_warp.direction = geti(name + ".time_warp.direction");
    v.shift.applied = geti(name + ".shift.applied") != 0;
    v.shift.axis = geti(name + ".shift.axis");
    v.shift.step = geti(name + ".shift.step");
    v.shift.direction = geti(name + ".shift.direction");
  };
  load_view("query", p.query);
  load_view("key", p.key);
  return p;
}

}  // namespace s3t
