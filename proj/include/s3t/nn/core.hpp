// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "s3t/rng.hpp"

namespace s3t::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Visitor over named parameters. `decay` marks tensors subject to weight
// decay (weight matrices; biases, norm scales and position tables are not).
template <typename T>
using ParamVisitor = std::function<void(const std::string& name, Mat<T>& value, Mat<T>& grad, bool decay)>;

template <typename T>
void trunc_normal_init(Mat<T>& m, Rng& rng, double sigma = 0.02) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = static_cast<T>(rng.truncated_normal(sigma));
    }
  }
}

// Fully connected layer, tokens as rows.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, bool use_bias = true) : use_bias_(use_bias) {
    weight = Mat<T>::Zero(in, out);
    grad_weight = Mat<T>::Zero(in, out);
    if (use_bias_) {
      bias = Mat<T>::Zero(1, out);
      grad_bias = Mat<T>::Zero(1, out);
    }
  }

  void init(Rng& rng) {
    trunc_normal_init(weight, rng);
    if (use_bias_) bias.setZero();
  }

  Mat<T> forward(const Mat<T>& x) {
    x_cache_ = x;
    Mat<T> y = x * weight;
    if (use_bias_) y.rowwise() += bias.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    grad_weight.noalias() += x_cache_.transpose() * dy;
    if (use_bias_) grad_bias.row(0) += dy.colwise().sum();
    return dy * weight.transpose();
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".weight", weight, grad_weight, true);
    if (use_bias_) fn(prefix + ".bias", bias, grad_bias, false);
  }

  bool has_bias() const { return use_bias_; }

  Mat<T> weight, bias;
  Mat<T> grad_weight, grad_bias;

 private:
  bool use_bias_ = true;
  Mat<T> x_cache_;
};

// Row-wise layer normalization.
template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int dim) {
    gamma = Mat<T>::Ones(1, dim);
    beta = Mat<T>::Zero(1, dim);
    grad_gamma = Mat<T>::Zero(1, dim);
    grad_beta = Mat<T>::Zero(1, dim);
  }

  Mat<T> forward(const Mat<T>& x) {
    const auto n = x.rows();
    const auto c = x.cols();
    xhat_.resize(n, c);
    rstd_.resize(n);
    Mat<T> y(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mu = x.row(i).mean();
      const T var = (x.row(i).array() - mu).square().mean();
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(kEps));
      rstd_(i) = rstd;
      xhat_.row(i) = (x.row(i).array() - mu) * rstd;
      y.row(i) = xhat_.row(i).array() * gamma.row(0).array() + beta.row(0).array();
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const auto n = dy.rows();
    const auto c = dy.cols();
    Mat<T> dx(n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
      grad_gamma.row(0).array() += dy.row(i).array() * xhat_.row(i).array();
      grad_beta.row(0) += dy.row(i);
      const Eigen::Array<T, 1, Eigen::Dynamic> g = dy.row(i).array() * gamma.row(0).array();
      const T gm = g.mean();
      const T gx = (g * xhat_.row(i).array()).mean();
      dx.row(i) = rstd_(i) * (g - gm - xhat_.row(i).array() * gx);
    }
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".gamma", gamma, grad_gamma, false);
    fn(prefix + ".beta", beta, grad_beta, false);
  }

  Mat<T> gamma, beta;
  Mat<T> grad_gamma, grad_beta;

 private:
  static constexpr double kEps = 1e-5;
  Mat<T> xhat_;
  Vec<T> rstd_;
};

// Exact (erf) GELU.
template <typename T>
class Gelu {
 public:
  Mat<T> forward(const Mat<T>& x) {
    x_cache_ = x;
    return x.unaryExpr([](T v) {
      return static_cast<T>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
    });
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx = x_cache_.unaryExpr([](T v) {
      constexpr double kInvSqrt2Pi = 0.39894228040143267794;
      const double x = static_cast<double>(v);
      return static_cast<T>(0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) +
                            x * kInvSqrt2Pi * std::exp(-0.5 * x * x));
    });
    return dx.cwiseProduct(dy);
  }

 private:
  Mat<T> x_cache_;
};

template <typename T>
class Relu {
 public:
  Mat<T> forward(const Mat<T>& x) {
    x_cache_ = x;
    return x.cwiseMax(T(0));
  }
  Mat<T> backward(const Mat<T>& dy) {
    return (x_cache_.array() > T(0)).template cast<T>().matrix().cwiseProduct(dy);
  }

 private:
  Mat<T> x_cache_;
};

// Two-layer GELU MLP used inside transformer blocks.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(int dim, int hidden) : fc1(dim, hidden), fc2(hidden, dim) {}

  void init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
  }

  Mat<T> forward(const Mat<T>& x) { return fc2.forward(act_.forward(fc1.forward(x))); }
  Mat<T> backward(const Mat<T>& dy) { return fc1.backward(act_.backward(fc2.backward(dy))); }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fc1.visit(prefix + ".fc1", fn);
    fc2.visit(prefix + ".fc2", fn);
  }

  Linear<T> fc1, fc2;

 private:
  Gelu<T> act_;
};

}  // namespace s3t::nn
