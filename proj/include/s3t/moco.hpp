// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "s3t/nn/head.hpp"
#include "s3t/nn/swin.hpp"

namespace s3t {

struct MocoConfig {
  long queue_size = 65536;
  double momentum = 0.999;     // key-encoder EMA rate
  double temperature = 0.2;
  int proj_hidden = 0;  // 0 = match the encoder output width
  int proj_dim = 128;
  bool symmetric = false;  // average the two query/key role assignments

  void validate() const {
    if (queue_size <= 0) throw std::invalid_argument("queue size must be positive");
    if (momentum < 0.0 || momentum > 1.0) throw std::invalid_argument("momentum must be in [0, 1]");
    if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
    if (proj_dim <= 0) throw std::invalid_argument("projection dim must be positive");
  }
};

// Encoder plus projection head; the unit that query and key branches share.
template <typename T>
struct MocoModel {
  nn::SwinEncoder<T> encoder;
  nn::ProjectionHead<T> head;

  MocoModel() = default;
  MocoModel(const nn::SwinConfig& swin, const MocoConfig& moco)
      : encoder(swin),
        head(swin.out_dim(), moco.proj_hidden > 0 ? moco.proj_hidden : swin.out_dim(),
             moco.proj_dim) {}

  void init(std::uint64_t seed) {
    Rng rng(seed);
    visit([&rng](const std::string&, nn::Mat<T>& value, nn::Mat<T>&, bool decay) {
      if (decay) nn::trunc_normal_init(value, rng);
    });
  }

  // Pooled pre-projection representation (the linear-probe feature).
  nn::Vec<T> forward_raw(const nn::Mat<T>& image, nn::Mode mode, Rng* rng = nullptr) {
    return encoder.forward(image, mode, rng);
  }

  // Unit-norm contrastive embedding.
  nn::Vec<T> forward_embed(const nn::Mat<T>& image, nn::Mode mode, Rng* rng = nullptr) {
    const nn::Vec<T> raw = encoder.forward(image, mode, rng);
    return head.forward(raw.transpose()).row(0).transpose();
  }

  void backward_embed(const nn::Vec<T>& d_embed) {
    const nn::Mat<T> d_raw = head.backward(d_embed.transpose());
    encoder.backward(d_raw.row(0).transpose());
  }

  void visit(const nn::ParamVisitor<T>& fn) {
    encoder.visit([&](const std::string& name, nn::Mat<T>& v, nn::Mat<T>& g, bool d) {
      fn("encoder." + name, v, g, d);
    });
    head.visit("head", fn);
  }

  void zero_grad() {
    visit([](const std::string&, nn::Mat<T>&, nn::Mat<T>& g, bool) { g.setZero(); });
  }
};

// Named reference into a model's parameter set.
template <typename T>
struct ParamRef {
  std::string name;
  nn::Mat<T>* value = nullptr;
  nn::Mat<T>* grad = nullptr;
  bool decay = false;
};

template <typename T, typename Module>
std::vector<ParamRef<T>> collect_params(Module& m) {
  std::vector<ParamRef<T>> refs;
  m.visit([&refs](const std::string& name, nn::Mat<T>& v, nn::Mat<T>& g, bool d) {
    refs.push_back({name, &v, &g, d});
  });
  return refs;
}

// theta_k <- m * theta_k + (1 - m) * theta_q, schema-checked.
template <typename T>
void momentum_update(MocoModel<T>& key, MocoModel<T>& query, double m) {
  if (m < 0.0 || m > 1.0) throw std::invalid_argument("momentum must be in [0, 1]");
  auto kp = collect_params<T>(key);
  auto qp = collect_params<T>(query);
  if (kp.size() != qp.size()) throw std::invalid_argument("momentum update: schema mismatch");
  for (std::size_t i = 0; i < kp.size(); ++i) {
    if (kp[i].name != qp[i].name || kp[i].value->rows() != qp[i].value->rows() ||
        kp[i].value->cols() != qp[i].value->cols()) {
      throw std::invalid_argument("momentum update: schema mismatch at " + kp[i].name);
    }
    *kp[i].value = static_cast<T>(m) * *kp[i].value + static_cast<T>(1.0 - m) * *qp[i].value;
  }
}

template <typename T>
struct MoCoState {
  MocoModel<T> query, key;
  nn::Mat<T> queue;  // K x proj_dim, unit-norm rows
  long queue_ptr = 0;
  long keys_seen = 0;  // total keys enqueued; < K means the queue is warm
  MocoConfig cfg;

  MoCoState() = default;
  MoCoState(const nn::SwinConfig& swin, const MocoConfig& moco, std::uint64_t seed)
      : query(swin, moco), key(swin, moco), cfg(moco) {
    moco.validate();
    query.init(seed);
    // Key branch starts as an exact copy of the query branch.
    auto kp = collect_params<T>(key);
    auto qp = collect_params<T>(query);
    for (std::size_t i = 0; i < kp.size(); ++i) *kp[i].value = *qp[i].value;
    init_queue(seed + 1);
  }

  void init_queue(std::uint64_t seed) {
    Rng rng(seed);
    queue.resize(cfg.queue_size, cfg.proj_dim);
    for (long i = 0; i < cfg.queue_size; ++i) {
      for (int j = 0; j < cfg.proj_dim; ++j) queue(i, j) = static_cast<T>(rng.normal());
      queue.row(i) /= queue.row(i).norm();
    }
    queue_ptr = 0;
    keys_seen = 0;
  }

  bool warm() const { return keys_seen < cfg.queue_size; }
};

// Overwrite rows [ptr, ptr+B) with the batch's keys and advance the pointer.
template <typename T>
void enqueue_dequeue(MoCoState<T>& state, const nn::Mat<T>& keys) {
  const long b = keys.rows();
  if (b <= 0 || state.queue.rows() % b != 0) {
    throw std::invalid_argument("batch size must divide the queue size");
  }
  if (keys.cols() != state.queue.cols()) {
    throw std::invalid_argument("key dimension does not match the queue");
  }
  state.queue.middleRows(state.queue_ptr, b) = keys;
  state.queue_ptr = (state.queue_ptr + b) % state.queue.rows();
  state.keys_seen += b;
}

}  // namespace s3t
