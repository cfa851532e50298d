// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

namespace s3t {

namespace {

constexpr char kFeatMagic[8] = {'S', '3', 'T', 'F', 'E', 'A', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("truncated feature table");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void seeded_shuffle(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(v[i], v[j]);
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string label_signature(const Eigen::VectorXf& label) {
  std::string sig;
  for (Eigen::Index i = 0; i < label.size(); ++i) sig.push_back(label[i] > 0.5f ? '1' : '0');
  return sig;
}

}  // namespace

std::vector<int> FeatureTable::class_labels() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    Eigen::Index idx = 0;
    r.label.maxCoeff(&idx);
    out.push_back(static_cast<int>(idx));
  }
  return out;
}

void write_feature_table(const std::string& path, const FeatureTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kFeatMagic, 8);
  const int fd = table.feature_dim();
  const int ld = table.label_dim();
  put_u32(os, static_cast<std::uint32_t>(table.rows.size()));
  put_u32(os, static_cast<std::uint32_t>(fd));
  put_u32(os, static_cast<std::uint32_t>(ld));
  for (const auto& r : table.rows) {
    if (r.feature.size() != fd || r.label.size() != ld) {
      throw std::invalid_argument("ragged feature table row " + r.id);
    }
    put_u32(os, static_cast<std::uint32_t>(r.id.size()));
    os.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
    os.write(reinterpret_cast<const char*>(r.feature.data()),
             static_cast<std::streamsize>(sizeof(float)) * fd);
    os.write(reinterpret_cast<const char*>(r.label.data()),
             static_cast<std::streamsize>(sizeof(float)) * ld);
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

FeatureTable read_feature_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, kFeatMagic)) {
    throw std::runtime_error(path + " is not a feature table");
  }
  const std::uint32_t n = get_u32(is);
  const std::uint32_t fd = get_u32(is);
  const std::uint32_t ld = get_u32(is);
  FeatureTable table;
  for (std::uint32_t i = 0; i < ld; ++i) table.label_names.push_back("label" + std::to_string(i));
  table.rows.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& r = table.rows[i];
    const std::uint32_t id_len = get_u32(is);
    r.id.resize(id_len);
    is.read(r.id.data(), id_len);
    r.feature.resize(fd);
    r.label.resize(ld);
    is.read(reinterpret_cast<char*>(r.feature.data()),
            static_cast<std::streamsize>(sizeof(float)) * fd);
    is.read(reinterpret_cast<char*>(r.label.data()),
            static_cast<std::streamsize>(sizeof(float)) * ld);
    if (!is) throw std::runtime_error("truncated feature table");
  }
  return table;
}

LoadedModel load_query_model(const std::string& ckpt_path) {
  const CheckpointFile ck = read_checkpoint(ckpt_path);
  const auto manifest = nlohmann::json::parse(ck.manifest_json);
  LoadedModel lm{Config::from_json(manifest["config"].dump()), {}};
  lm.model = MocoModel<float>(lm.cfg.model.swin, lm.cfg.moco);
  lm.model.visit([&ck](const std::string& name, nn::Mat<float>& value, nn::Mat<float>&, bool) {
    const auto it = ck.tensors.find("query." + name);
    if (it == ck.tensors.end()) throw std::runtime_error("checkpoint missing tensor query." + name);
    if (it->second.rows() != value.rows() || it->second.cols() != value.cols()) {
      throw std::runtime_error("shape mismatch for tensor query." + name);
    }
    value = it->second;
  });
  return lm;
}

nn::Vec<float> extract_feature(MocoModel<float>& model, const Spectrogram& spec, Preprocessor p,
                               int model_size, int chunk_frames) {
  const int t = spec.t_frames();
  if (chunk_frames <= 0) throw std::invalid_argument("chunk_frames must be positive");
  nn::Vec<float> acc;
  int n_chunks = 0;
  for (int start = 0; start == 0 || start < t; start += chunk_frames) {
    const int len = std::min(chunk_frames, t - start);
    Spectrogram chunk{spec.values.middleCols(start, len), spec.frame_rate};
    const ModelInput input = preprocess(chunk, p, model_size);
    nn::Vec<float> feat = model.forward_raw(input.values, nn::Mode::kEval);
    // Unit-normalize each chunk so probe conditioning does not depend on the
    // encoder's output scale; the clip feature is the mean of unit vectors.
    const float norm = feat.norm();
    if (norm > 0.0f) feat /= norm;
    if (n_chunks == 0) {
      acc = feat;
    } else {
      acc += feat;
    }
    ++n_chunks;
  }
  return acc / static_cast<float>(n_chunks);
}

FeatureTable featurize(const LabeledDataset& ds, const std::vector<int>& row_indices,
                       MocoModel<float>& model, const Config& cfg, int threads,
                       std::vector<std::string>* diagnostics) {
  const Preprocessor p = preprocessor_from_string(cfg.model.preprocessor);
  const int n = static_cast<int>(row_indices.size());
  std::vector<Eigen::VectorXf> feats(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> diags;

  std::vector<MocoModel<float>> workers(std::max(1, threads), model);
#pragma omp parallel for num_threads(std::max(1, threads)) schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    int w = 0;
#ifdef _OPENMP
    w = omp_get_thread_num();
#endif
    const ManifestRow& row = ds.rows[row_indices[i]];
    try {
      const Spectrogram spec = compute_frontend(row.audio_path, cfg.frontend);
      feats[i] = extract_feature(workers[w], spec, p, cfg.model.swin.input_size,
                                 cfg.eval.chunk_frames);
      ok[i] = 1;
    } catch (const std::exception& e) {
#pragma omp critical
      diags.push_back("featurize skipped " + row.id + ": " + e.what());
    }
  }

  FeatureTable table;
  table.task = ds.multi_label ? TaskKind::kMultiLabel : TaskKind::kSingleLabel;
  table.label_names = ds.vocabulary;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    const ManifestRow& row = ds.rows[row_indices[i]];
    Eigen::VectorXf label;
    if (ds.multi_label) {
      label = ds.label_vector(row);
    } else {
      label = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(ds.vocabulary.size()));
      label[ds.label_index(row)] = 1.0f;
    }
    table.rows.push_back({row.id, feats[i], label});
  }
  if (diagnostics) diagnostics->insert(diagnostics->end(), diags.begin(), diags.end());
  return table;
}

LinearProbe train_probe(const FeatureTable& train, const EvalSection& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(train.rows.size());
  const int d = train.feature_dim();
  const int c = train.label_dim();
  if (n == 0 || d == 0 || c == 0) throw std::invalid_argument("empty probe training set");
  if (train.task == TaskKind::kSingleLabel) {
    const auto labels = train.class_labels();
    if (*std::max_element(labels.begin(), labels.end()) ==
        *std::min_element(labels.begin(), labels.end())) {
      throw std::invalid_argument("probe training set has a single class");
    }
  }

  LinearProbe probe;
  probe.task = train.task;
  probe.center_mean = nn::Vec<float>::Zero(d);
  for (int i = 0; i < n; ++i) {
    nn::Vec<float> v = train.rows[i].feature;
    const float norm = v.norm();
    if (norm > 0.0f) v /= norm;
    probe.center_mean += v;
  }
  probe.center_mean /= static_cast<float>(n);

  nn::Mat<float> x(n, d);
  nn::Mat<float> y(n, c);
  for (int i = 0; i < n; ++i) {
    x.row(i) = probe.transform(train.rows[i].feature).transpose();
    y.row(i) = train.rows[i].label.transpose();
  }
  // Zero init: the objective is convex, and a seed-independent start means a
  // deterministic (zero-lr) probe is identical across repeated runs.
  probe.weight = nn::Mat<float>::Zero(c, d);
  Rng rng(seed);
  nn::Mat<float> grad = nn::Mat<float>::Zero(c, d);
  std::vector<ParamRef<float>> refs{{"probe.weight", &probe.weight, &grad, true}};
  AdamW<float> opt(refs);

  const int batch = std::max(1, cfg.probe_batch);
  const long steps_per_epoch = (n + batch - 1) / batch;
  const long total_steps = cfg.probe_epochs * steps_per_epoch;
  const long warmup_steps = cfg.probe_warmup_epochs * steps_per_epoch;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (long epoch = 0; epoch < cfg.probe_epochs; ++epoch) {
    seeded_shuffle(order, rng);
    for (int start = 0; start < n; start += batch) {
      const int b = std::min(batch, n - start);
      grad.setZero();
      for (int i = 0; i < b; ++i) {
        const int row = order[start + i];
        Eigen::VectorXf logits = probe.weight * x.row(row).transpose();
        Eigen::VectorXf dlogits(c);
        if (train.task == TaskKind::kSingleLabel) {
          const float mx = logits.maxCoeff();
          Eigen::VectorXf p = (logits.array() - mx).exp();
          p /= p.sum();
          dlogits = p - y.row(row).transpose();
        } else {
          Eigen::VectorXf p = 1.0f / (1.0f + (-logits.array()).exp());
          dlogits = p - y.row(row).transpose();
        }
        grad.noalias() += (dlogits / static_cast<float>(b)) * x.row(row);
      }
      const double lr = lr_at(step, total_steps, warmup_steps, cfg.probe_lr);
      opt.step(refs, lr, cfg.probe_weight_decay);
      ++step;
    }
  }
  return probe;
}

double top_k_accuracy(const nn::Mat<float>& scores, const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(scores.rows());
  const int c = static_cast<int>(scores.cols());
  if (k < 1 || k > c) throw std::invalid_argument("k out of range");
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("label count mismatch");
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) throw std::invalid_argument("label out of range");
    const float s = scores(i, y);
    // Rank with ties broken toward the lowest class index.
    int rank = 0;
    for (int j = 0; j < c; ++j) {
      if (scores(i, j) > s || (scores(i, j) == s && j < y)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

TagwiseResult roc_auc_tagwise(const nn::Mat<float>& scores, const nn::Mat<float>& labels) {
  const int n = static_cast<int>(scores.rows());
  const int l = static_cast<int>(scores.cols());
  if (labels.rows() != n || labels.cols() != l) throw std::invalid_argument("shape mismatch");
  TagwiseResult res;
  res.per_tag.assign(l, std::numeric_limits<double>::quiet_NaN());
  double sum = 0;
  int included = 0;
  std::vector<int> idx(n);
  for (int t = 0; t < l; ++t) {
    long n_pos = 0;
    for (int i = 0; i < n; ++i) n_pos += labels(i, t) > 0.5f;
    const long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
      res.excluded_tags.push_back(t);
      continue;
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return scores(a, t) < scores(b, t); });
    // Mann-Whitney rank sum with mid-ranks for tied scores.
    double rank_sum_pos = 0;
    int i = 0;
    while (i < n) {
      int j = i;
      while (j < n && scores(idx[j], t) == scores(idx[i], t)) ++j;
      const double mid_rank = 0.5 * ((i + 1) + j);  // 1-based mid rank of the tie group
      for (int k = i; k < j; ++k) {
        if (labels(idx[k], t) > 0.5f) rank_sum_pos += mid_rank;
      }
      i = j;
    }
    const double auc = (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
                       (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    res.per_tag[t] = auc;
    sum += auc;
    ++included;
  }
  if (included == 0) throw std::invalid_argument("no tag has both a positive and a negative");
  res.mean = sum / included;
  return res;
}

TagwiseResult pr_auc_tagwise(const nn::Mat<float>& scores, const nn::Mat<float>& labels) {
  const int n = static_cast<int>(scores.rows());
  const int l = static_cast<int>(scores.cols());
  if (labels.rows() != n || labels.cols() != l) throw std::invalid_argument("shape mismatch");
  TagwiseResult res;
  res.per_tag.assign(l, std::numeric_limits<double>::quiet_NaN());
  double sum = 0;
  int included = 0;
  std::vector<int> idx(n);
  for (int t = 0; t < l; ++t) {
    long n_pos = 0;
    for (int i = 0; i < n; ++i) n_pos += labels(i, t) > 0.5f;
    if (n_pos == 0 || n_pos == n) {
      res.excluded_tags.push_back(t);
      continue;
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return scores(a, t) > scores(b, t); });
    // AP = sum over thresholds of (delta recall) * precision; all rows tied
    // at one score form a single threshold.
    double ap = 0;
    long tp = 0, fp = 0;
    double prev_recall = 0;
    int i = 0;
    while (i < n) {
      int j = i;
      while (j < n && scores(idx[j], t) == scores(idx[i], t)) ++j;
      for (int k = i; k < j; ++k) {
        if (labels(idx[k], t) > 0.5f) {
          ++tp;
        } else {
          ++fp;
        }
      }
      const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += (recall - prev_recall) * precision;
      prev_recall = recall;
      i = j;
    }
    res.per_tag[t] = ap;
    sum += ap;
    ++included;
  }
  if (included == 0) throw std::invalid_argument("no tag has both a positive and a negative");
  res.mean = sum / included;
  return res;
}

namespace {

// Stratified pick: per bucket ceil(fraction * n) members, at least 1, seeded.
std::vector<int> stratified_pick(const std::map<std::string, std::vector<int>>& buckets,
                                 double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in (0, 1]");
  Rng rng(seed);
  std::vector<int> picked;
  for (const auto& [sig, members] : buckets) {
    Rng bucket_rng = rng.split(fnv1a(sig));
    std::vector<int> pool = members;
    seeded_shuffle(pool, bucket_rng);
    const auto want = static_cast<std::size_t>(
        std::max<long>(1, static_cast<long>(std::ceil(fraction * static_cast<double>(pool.size())))));
    pool.resize(std::min(want, pool.size()));
    picked.insert(picked.end(), pool.begin(), pool.end());
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

std::vector<int> subset_rows(const LabeledDataset& ds, const std::vector<int>& train_rows,
                             double fraction, std::uint64_t seed) {
  std::map<std::string, std::vector<int>> buckets;
  for (int r : train_rows) {
    const std::string sig = ds.multi_label ? label_signature(ds.label_vector(ds.rows[r]))
                                           : (ds.rows[r].labels.empty() ? std::string()
                                                                        : ds.rows[r].labels[0]);
    buckets[sig].push_back(r);
  }
  return stratified_pick(buckets, fraction, seed);
}

FeatureTable subset_table(const FeatureTable& table, double fraction, std::uint64_t seed) {
  std::map<std::string, std::vector<int>> buckets;
  for (int i = 0; i < static_cast<int>(table.rows.size()); ++i) {
    buckets[label_signature(table.rows[i].label)].push_back(i);
  }
  const std::vector<int> picked = stratified_pick(buckets, fraction, seed);
  FeatureTable out;
  out.task = table.task;
  out.label_names = table.label_names;
  for (int i : picked) out.rows.push_back(table.rows[i]);
  return out;
}

RunMetrics evaluate_probe(const LinearProbe& probe, const FeatureTable& test,
                          std::vector<int>* excluded) {
  const int n = static_cast<int>(test.rows.size());
  const int d = test.feature_dim();
  const int c = test.label_dim();
  if (n == 0) throw std::invalid_argument("empty evaluation set");
  nn::Mat<float> x(n, d);
  nn::Mat<float> y(n, c);
  for (int i = 0; i < n; ++i) {
    x.row(i) = test.rows[i].feature.transpose();
    y.row(i) = test.rows[i].label.transpose();
  }
  const nn::Mat<float> scores = probe.scores(x);
  RunMetrics m;
  if (test.task == TaskKind::kSingleLabel) {
    const auto labels = test.class_labels();
    m.top1 = top_k_accuracy(scores, labels, 1);
    m.top5 = top_k_accuracy(scores, labels, std::min(5, c));
  } else {
    const TagwiseResult roc = roc_auc_tagwise(scores, y);
    const TagwiseResult pr = pr_auc_tagwise(scores, y);
    m.roc_auc = roc.mean;
    m.pr_auc = pr.mean;
    if (excluded) *excluded = roc.excluded_tags;
  }
  return m;
}

MetricsReport repeated_eval(const FeatureTable& train, const FeatureTable& test,
                            const EvalSection& cfg, int n_repeats, std::uint64_t base_seed) {
  if (n_repeats < 1) throw std::invalid_argument("n_repeats must be at least 1");
  MetricsReport report;
  report.task = train.task;
  std::vector<int> excluded;
  for (int r = 0; r < n_repeats; ++r) {
    const LinearProbe probe = train_probe(train, cfg, base_seed + static_cast<std::uint64_t>(r));
    report.runs.push_back(evaluate_probe(probe, test, &excluded));
  }
  for (int t : excluded) {
    report.excluded_tags.push_back(t < static_cast<int>(test.label_names.size())
                                       ? test.label_names[t]
                                       : std::to_string(t));
  }
  const auto n = static_cast<double>(n_repeats);
  auto stat = [&](double RunMetrics::* field, double& mean_out, double& std_out) {
    double mean = 0;
    for (const auto& run : report.runs) mean += run.*field;
    mean /= n;
    double var = 0;
    for (const auto& run : report.runs) var += (run.*field - mean) * (run.*field - mean);
    mean_out = mean;
    std_out = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  };
  stat(&RunMetrics::top1, report.mean.top1, report.stddev.top1);
  stat(&RunMetrics::top5, report.mean.top5, report.stddev.top5);
  stat(&RunMetrics::roc_auc, report.mean.roc_auc, report.stddev.roc_auc);
  stat(&RunMetrics::pr_auc, report.mean.pr_auc, report.stddev.pr_auc);
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = task == TaskKind::kSingleLabel ? "single_label" : "multi_label";
  auto run_json = [&](const RunMetrics& m) {
    nlohmann::json r;
    if (task == TaskKind::kSingleLabel) {
      r["top1"] = m.top1;
      r["top5"] = m.top5;
    } else {
      r["roc_auc"] = m.roc_auc;
      r["pr_auc"] = m.pr_auc;
    }
    return r;
  };
  j["runs"] = nlohmann::json::array();
  for (const auto& run : runs) j["runs"].push_back(run_json(run));
  j["mean"] = run_json(mean);
  j["std"] = run_json(stddev);
  j["excluded_tags"] = excluded_tags;
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  const bool single = task == TaskKind::kSingleLabel;
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::setw(8) << "run" << std::setw(10) << (single ? "top1" : "roc_auc") << std::setw(10)
     << (single ? "top5" : "pr_auc") << '\n';
  auto line = [&](const std::string& name, const RunMetrics& m) {
    os << std::setw(8) << name << std::setw(10) << (single ? m.top1 : m.roc_auc) << std::setw(10)
       << (single ? m.top5 : m.pr_auc) << '\n';
  };
  for (std::size_t i = 0; i < runs.size(); ++i) line(std::to_string(i), runs[i]);
  line("mean", mean);
  line("std", stddev);
  if (!excluded_tags.empty()) {
    os << "excluded tags:";
    for (const auto& t : excluded_tags) os << ' ' << t;
    os << '\n';
  }
  return os.str();
}

}  // namespace s3t
