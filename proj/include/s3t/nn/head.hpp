// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "s3t/nn/core.hpp"

namespace s3t::nn {

// Two fully-connected layers with one nonlinearity, then L2 normalization.
template <typename T>
class ProjectionHead {
 public:
  enum class Activation { kRelu, kIdentity };

  ProjectionHead() = default;
  ProjectionHead(int in, int hidden, int out, Activation act = Activation::kRelu,
                 bool use_bias = true)
      : act_(act), fc1(in, hidden, use_bias), fc2(hidden, out, use_bias) {}

  void init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
  }

  // raw (1 x in) -> unit-norm embedding (1 x out).
  Mat<T> forward(const Mat<T>& raw) {
    Mat<T> z = fc1.forward(raw);
    if (act_ == Activation::kRelu) z = relu_.forward(z);
    z = fc2.forward(z);
    const T nrm = z.row(0).norm();
    if (!(nrm > T(0)) || !std::isfinite(static_cast<double>(nrm))) {
      throw std::runtime_error("projection produced a degenerate (zero or non-finite) embedding");
    }
    norm_cache_ = nrm;
    v_cache_ = z / nrm;
    return v_cache_;
  }

  Mat<T> backward(const Mat<T>& dv) {
    // d(z/|z|) = (dv - v (v . dv)) / |z|
    const T dot = v_cache_.row(0).dot(dv.row(0));
    Mat<T> dz = (dv - dot * v_cache_) / norm_cache_;
    dz = fc2.backward(dz);
    if (act_ == Activation::kRelu) dz = relu_.backward(dz);
    return fc1.backward(dz);
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fc1.visit(prefix + ".fc1", fn);
    fc2.visit(prefix + ".fc2", fn);
  }

  Linear<T> fc1, fc2;

 private:
  Activation act_ = Activation::kRelu;
  Relu<T> relu_;
  Mat<T> v_cache_;
  T norm_cache_ = T(1);
};

// Temperature-scaled softmax contrastive loss over one positive and a queue
// of negatives. Gradients flow to the query and the positive key only; the
// queue is a constant.
template <typename T>
struct InfoNceResult {
  T loss = T(0);
  Vec<T> logits;  // (K+1), positive first
  Vec<T> d_query, d_key;
};

template <typename T>
InfoNceResult<T> info_nce(const Vec<T>& q, const Vec<T>& k_pos, const Mat<T>& queue, T tau) {
  if (!(tau > T(0))) throw std::invalid_argument("temperature must be positive");
  const auto k = queue.rows();
  InfoNceResult<T> r;
  r.logits.resize(k + 1);
  r.logits(0) = q.dot(k_pos) / tau;
  if (k > 0) r.logits.tail(k) = queue * q / tau;

  const T m = r.logits.maxCoeff();
  Vec<T> p = (r.logits.array() - m).exp();
  const T z = p.sum();
  r.loss = -(r.logits(0) - m - std::log(z));
  p /= z;

  // d loss / d logits = p - onehot(0)
  r.d_query = (p(0) - T(1)) / tau * k_pos;
  r.d_key = (p(0) - T(1)) / tau * q;
  if (k > 0) r.d_query.noalias() += queue.transpose() * p.tail(k) / tau;
  return r;
}

}  // namespace s3t::nn
