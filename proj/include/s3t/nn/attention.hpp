// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <limits>
#include <vector>

#include "s3t/nn/core.hpp"

namespace s3t::nn {

// Token-grid helpers. Grids are (H*W) x C matrices, tokens in row-major
// spatial order.

// Cyclic roll by (dy, dx): output token (i, j) takes input token
// ((i + dy) mod H, (j + dx) mod W).
template <typename T>
Mat<T> roll_grid(const Mat<T>& x, int h, int w, int dy, int dx) {
  Mat<T> y(x.rows(), x.cols());
  for (int i = 0; i < h; ++i) {
    const int si = ((i + dy) % h + h) % h;
    for (int j = 0; j < w; ++j) {
      const int sj = ((j + dx) % w + w) % w;
      y.row(i * w + j) = x.row(si * w + sj);
    }
  }
  return y;
}

// Scatter grid rows into stacked windows: window (wi, wj), token (a, b)
// maps to stacked row (wi*(W/win) + wj)*win*win + a*win + b.
template <typename T>
Mat<T> window_partition(const Mat<T>& x, int h, int w, int win) {
  const int nwx = w / win;
  Mat<T> s(x.rows(), x.cols());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int wi = i / win, wj = j / win;
      const int a = i % win, b = j % win;
      s.row(((wi * nwx + wj) * win + a) * win + b) = x.row(i * w + j);
    }
  }
  return s;
}

template <typename T>
Mat<T> window_unpartition(const Mat<T>& s, int h, int w, int win) {
  const int nwx = w / win;
  Mat<T> x(s.rows(), s.cols());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int wi = i / win, wj = j / win;
      const int a = i % win, b = j % win;
      x.row(i * w + j) = s.row(((wi * nwx + wj) * win + a) * win + b);
    }
  }
  return x;
}

// Relative position index for a win x win window: entry (i, j) addresses a
// row of the (2*win-1)^2 bias table.
inline std::vector<int> relative_position_index(int win) {
  const int n = win * win;
  std::vector<int> idx(n * n);
  for (int i = 0; i < n; ++i) {
    const int yi = i / win, xi = i % win;
    for (int j = 0; j < n; ++j) {
      const int yj = j / win, xj = j % win;
      const int dy = yi - yj + win - 1;
      const int dx = xi - xj + win - 1;
      idx[i * n + j] = dy * (2 * win - 1) + dx;
    }
  }
  return idx;
}

// Region ids for the shifted pass, in rolled coordinates: tokens whose
// pre-roll content came from different image slices must not attend to each
// other. Follows the 3x3 slice construction of shifted window attention.
inline std::vector<int> shift_region_ids(int h, int w, int win, int shift) {
  std::vector<int> ids(h * w);
  auto region = [&](int v, int n) { return v < n - win ? 0 : (v < n - shift ? 1 : 2); };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      ids[i * w + j] = region(i, h) * 3 + region(j, w);
    }
  }
  return ids;
}

// Multi-head attention within non-overlapping windows, with learned
// relative position bias; optionally the shifted variant with its
// cross-region mask.
template <typename T>
class WindowAttention {
 public:
  WindowAttention() = default;
  WindowAttention(int dim, int heads, int win)
      : dim_(dim), heads_(heads), win_(win), qkv(dim, 3 * dim), proj(dim, dim) {
    if (dim % heads != 0) throw std::invalid_argument("attention dim must divide by heads");
    const int span = (2 * win - 1) * (2 * win - 1);
    bias_table = Mat<T>::Zero(span, heads);
    grad_bias_table = Mat<T>::Zero(span, heads);
    rel_index_ = relative_position_index(win);
  }

  void init(Rng& rng) {
    qkv.init(rng);
    proj.init(rng);
    bias_table.setZero();
  }

  Mat<T> forward(const Mat<T>& x, int h, int w, bool shifted) {
    if (h % win_ != 0 || w % win_ != 0) {
      throw std::invalid_argument("token grid not divisible by window size");
    }
    h_ = h;
    w_ = w;
    shifted_ = shifted && win_ > 1;
    const int shift = win_ / 2;
    const int n = win_ * win_;
    const int nw = (h / win_) * (w / win_);
    const int d = dim_ / heads_;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

    Mat<T> xs = shifted_ ? roll_grid(x, h, w, shift, shift) : x;
    Mat<T> stacked = window_partition(xs, h, w, win_);
    qkv_out_ = qkv.forward(stacked);

    std::vector<int> region;
    if (shifted_) {
      region = shift_region_ids(h, w, win_, shift);
      region_windows_ = window_partition_ids(region, h, w, win_);
    }

    attn_.assign(nw, std::vector<Mat<T>>(heads_));
    Mat<T> out(stacked.rows(), dim_);
    for (int wi = 0; wi < nw; ++wi) {
      for (int he = 0; he < heads_; ++he) {
        const auto q = qkv_out_.block(wi * n, he * d, n, d);
        const auto k = qkv_out_.block(wi * n, dim_ + he * d, n, d);
        const auto v = qkv_out_.block(wi * n, 2 * dim_ + he * d, n, d);
        Mat<T> logits = q * k.transpose() * scale;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            logits(i, j) += bias_table(rel_index_[i * n + j], he);
          }
        }
        if (shifted_) {
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
              if (region_windows_[wi * n + i] != region_windows_[wi * n + j]) {
                logits(i, j) = -std::numeric_limits<T>::infinity();
              }
            }
          }
        }
        Mat<T>& a = attn_[wi][he];
        a.resize(n, n);
        for (int i = 0; i < n; ++i) {
          const T m = logits.row(i).maxCoeff();
          a.row(i) = (logits.row(i).array() - m).exp();
          if (shifted_) {
            // Eigen's vectorized exp clamps -inf to a finite minimum, which
            // leaves denormals where the mask demands exact zeros.
            for (int j = 0; j < n; ++j) {
              if (region_windows_[wi * n + i] != region_windows_[wi * n + j]) a(i, j) = T(0);
            }
          }
          a.row(i) /= a.row(i).sum();
        }
        out.block(wi * n, he * d, n, d).noalias() = a * v;
      }
    }
    Mat<T> projected = proj.forward(out);
    Mat<T> y = window_unpartition(projected, h, w, win_);
    return shifted_ ? roll_grid(y, h, w, -shift, -shift) : y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    const int shift = win_ / 2;
    const int n = win_ * win_;
    const int nw = (h_ / win_) * (w_ / win_);
    const int d = dim_ / heads_;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

    Mat<T> dys = shifted_ ? roll_grid(dy, h_, w_, shift, shift) : dy;
    Mat<T> d_projected = window_partition(dys, h_, w_, win_);
    Mat<T> d_out = proj.backward(d_projected);

    Mat<T> d_qkv = Mat<T>::Zero(d_out.rows(), 3 * dim_);
    for (int wi = 0; wi < nw; ++wi) {
      for (int he = 0; he < heads_; ++he) {
        const auto q = qkv_out_.block(wi * n, he * d, n, d);
        const auto k = qkv_out_.block(wi * n, dim_ + he * d, n, d);
        const auto v = qkv_out_.block(wi * n, 2 * dim_ + he * d, n, d);
        const Mat<T>& a = attn_[wi][he];
        const auto d_o = d_out.block(wi * n, he * d, n, d);

        Mat<T> da = d_o * v.transpose();
        d_qkv.block(wi * n, 2 * dim_ + he * d, n, d).noalias() = a.transpose() * d_o;

        Mat<T> dlogits(n, n);
        for (int i = 0; i < n; ++i) {
          const T dot = a.row(i).dot(da.row(i));
          dlogits.row(i) = (a.row(i).array() * (da.row(i).array() - dot)).matrix();
        }
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            grad_bias_table(rel_index_[i * n + j], he) += dlogits(i, j);
          }
        }
        d_qkv.block(wi * n, he * d, n, d).noalias() = dlogits * k * scale;
        d_qkv.block(wi * n, dim_ + he * d, n, d).noalias() = dlogits.transpose() * q * scale;
      }
    }
    Mat<T> dx = window_unpartition(qkv.backward(d_qkv), h_, w_, win_);
    return shifted_ ? roll_grid(dx, h_, w_, -shift, -shift) : dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    qkv.visit(prefix + ".qkv", fn);
    proj.visit(prefix + ".proj", fn);
    fn(prefix + ".rel_bias", bias_table, grad_bias_table, false);
  }

  // Attention probabilities of the last forward, [window][head], for tests.
  const std::vector<std::vector<Mat<T>>>& last_attention() const { return attn_; }

  Linear<T> qkv, proj;
  Mat<T> bias_table, grad_bias_table;

 private:
  static std::vector<int> window_partition_ids(const std::vector<int>& ids, int h, int w, int win) {
    const int nwx = w / win;
    std::vector<int> out(ids.size());
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        out[((i / win * nwx + j / win) * win + i % win) * win + j % win] = ids[i * w + j];
      }
    }
    return out;
  }

  int dim_ = 0, heads_ = 0, win_ = 0;
  int h_ = 0, w_ = 0;
  bool shifted_ = false;
  std::vector<int> rel_index_;
  std::vector<int> region_windows_;
  Mat<T> qkv_out_;
  std::vector<std::vector<Mat<T>>> attn_;
};

}  // namespace s3t::nn
