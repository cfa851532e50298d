// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "s3t/nn/attention.hpp"
#include "s3t/nn/core.hpp"

namespace s3t::nn {

// Hierarchical windowed-attention encoder configuration. Defaults are the
// full-scale tiny-variant settings; tests and the desk preset shrink them.
struct SwinConfig {
  int input_size = 256;
  int patch_size = 4;
  int embed_dim = 96;
  std::vector<int> depths{2, 2, 6, 2};
  std::vector<int> heads{3, 6, 12, 24};
  int window = 8;
  double mlp_ratio = 4.0;
  double drop_path_max = 0.1;

  int stages() const { return static_cast<int>(depths.size()); }
  int out_dim() const { return embed_dim << (stages() - 1); }

  void validate() const {
    if (depths.empty() || depths.size() != heads.size()) {
      throw std::invalid_argument("depths and heads must be non-empty and equal length");
    }
    if (input_size % patch_size != 0) {
      throw std::invalid_argument("input size must divide by patch size");
    }
    if (embed_dim % heads[0] != 0) {
      throw std::invalid_argument("embed dim must divide by first-stage head count");
    }
    int grid = input_size / patch_size;
    for (int s = 0; s < stages(); ++s) {
      if (grid % window != 0) {
        throw std::invalid_argument("token grid must divide by window at every stage");
      }
      const int dim = embed_dim << s;
      if (dim % heads[s] != 0) throw std::invalid_argument("stage dim must divide by heads");
      if (s + 1 < stages()) grid /= 2;
    }
  }
};

enum class Mode { kTrain, kEval };

// Non-overlapping patch projection plus layer norm. Single input channel.
template <typename T>
class PatchEmbed {
 public:
  PatchEmbed() = default;
  PatchEmbed(int patch, int embed) : patch_(patch), proj(patch * patch, embed), norm(embed) {}

  void init(Rng& rng) { proj.init(rng); }

  Mat<T> forward(const Mat<T>& image) {
    const int s = static_cast<int>(image.rows());
    if (image.cols() != s || s % patch_ != 0) {
      throw std::invalid_argument("patch embedding expects a square image divisible by patch");
    }
    const int g = s / patch_;
    Mat<T> patches(g * g, patch_ * patch_);
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        for (int a = 0; a < patch_; ++a) {
          for (int b = 0; b < patch_; ++b) {
            patches(i * g + j, a * patch_ + b) = image(i * patch_ + a, j * patch_ + b);
          }
        }
      }
    }
    return norm.forward(proj.forward(patches));
  }

  // Parameter gradients only; the image is a leaf.
  void backward(const Mat<T>& dy) { proj.backward(norm.backward(dy)); }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    proj.visit(prefix + ".proj", fn);
    norm.visit(prefix + ".norm", fn);
  }

  Linear<T> proj;
  LayerNorm<T> norm;

 private:
  int patch_ = 0;
};

// 2x2 neighborhood concatenation, norm, projection to double width.
template <typename T>
class PatchMerge {
 public:
  PatchMerge() = default;
  explicit PatchMerge(int dim) : norm(4 * dim), reduction(4 * dim, 2 * dim, /*use_bias=*/false) {}

  void init(Rng& rng) { reduction.init(rng); }

  Mat<T> forward(const Mat<T>& x, int h, int w) {
    if (h % 2 != 0 || w % 2 != 0) {
      throw std::invalid_argument("patch merging needs even grid dimensions");
    }
    h_ = h;
    w_ = w;
    const int c = static_cast<int>(x.cols());
    Mat<T> gathered((h / 2) * (w / 2), 4 * c);
    for (int i = 0; i < h / 2; ++i) {
      for (int j = 0; j < w / 2; ++j) {
        const int r = i * (w / 2) + j;
        gathered.block(r, 0 * c, 1, c) = x.row((2 * i) * w + 2 * j);
        gathered.block(r, 1 * c, 1, c) = x.row((2 * i + 1) * w + 2 * j);
        gathered.block(r, 2 * c, 1, c) = x.row((2 * i) * w + 2 * j + 1);
        gathered.block(r, 3 * c, 1, c) = x.row((2 * i + 1) * w + 2 * j + 1);
      }
    }
    return reduction.forward(norm.forward(gathered));
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> d_gathered = norm.backward(reduction.backward(dy));
    const int c = static_cast<int>(d_gathered.cols()) / 4;
    Mat<T> dx(h_ * w_, c);
    for (int i = 0; i < h_ / 2; ++i) {
      for (int j = 0; j < w_ / 2; ++j) {
        const int r = i * (w_ / 2) + j;
        dx.row((2 * i) * w_ + 2 * j) = d_gathered.block(r, 0 * c, 1, c);
        dx.row((2 * i + 1) * w_ + 2 * j) = d_gathered.block(r, 1 * c, 1, c);
        dx.row((2 * i) * w_ + 2 * j + 1) = d_gathered.block(r, 2 * c, 1, c);
        dx.row((2 * i + 1) * w_ + 2 * j + 1) = d_gathered.block(r, 3 * c, 1, c);
      }
    }
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    norm.visit(prefix + ".norm", fn);
    reduction.visit(prefix + ".reduction", fn);
  }

  LayerNorm<T> norm;
  Linear<T> reduction;

 private:
  int h_ = 0, w_ = 0;
};

// Pre-norm attention + pre-norm MLP, both residual, each branch under
// per-sample stochastic depth during training.
template <typename T>
class SwinBlock {
 public:
  SwinBlock() = default;
  SwinBlock(int dim, int heads, int win, double mlp_ratio, bool shifted, double drop_path)
      : shifted_(shifted),
        drop_path_(drop_path),
        norm1(dim),
        attn(dim, heads, win),
        norm2(dim),
        mlp(dim, static_cast<int>(dim * mlp_ratio)) {}

  void init(Rng& rng) {
    attn.init(rng);
    mlp.init(rng);
  }

  Mat<T> forward(const Mat<T>& x, int h, int w, Mode mode, Rng* rng) {
    scale1_ = branch_scale(mode, rng);
    Mat<T> x1 = x;
    if (scale1_ != T(0)) {
      x1 += scale1_ * attn.forward(norm1.forward(x), h, w, shifted_);
    }
    scale2_ = branch_scale(mode, rng);
    Mat<T> y = x1;
    if (scale2_ != T(0)) {
      y += scale2_ * mlp.forward(norm2.forward(x1));
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& dy) {
    Mat<T> dx1 = dy;
    if (scale2_ != T(0)) {
      dx1 += scale2_ * norm2.backward(mlp.backward(dy));
    }
    Mat<T> dx = dx1;
    if (scale1_ != T(0)) {
      dx += scale1_ * norm1.backward(attn.backward(dx1));
    }
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    norm1.visit(prefix + ".norm1", fn);
    attn.visit(prefix + ".attn", fn);
    norm2.visit(prefix + ".norm2", fn);
    mlp.visit(prefix + ".mlp", fn);
  }

  bool shifted() const { return shifted_; }
  double drop_path_rate() const { return drop_path_; }

  LayerNorm<T> norm1, norm2;
  WindowAttention<T> attn;
  Mlp<T> mlp;

 private:
  T branch_scale(Mode mode, Rng* rng) {
    if (mode == Mode::kEval || drop_path_ <= 0.0) return T(1);
    if (rng == nullptr) throw std::invalid_argument("training-mode forward needs an rng for drop path");
    if (rng->uniform() < drop_path_) return T(0);
    return static_cast<T>(1.0 / (1.0 - drop_path_));
  }

  bool shifted_ = false;
  double drop_path_ = 0.0;
  T scale1_ = T(1), scale2_ = T(1);
};

// Full encoder: patch embedding, staged blocks with merging, final norm,
// mean pooling over the last grid.
template <typename T>
class SwinEncoder {
 public:
  SwinEncoder() = default;
  explicit SwinEncoder(const SwinConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    embed = PatchEmbed<T>(cfg.patch_size, cfg.embed_dim);

    int total_blocks = 0;
    for (int d : cfg.depths) total_blocks += d;
    int block_index = 0;
    for (int s = 0; s < cfg.stages(); ++s) {
      const int dim = cfg.embed_dim << s;
      std::vector<SwinBlock<T>> blocks;
      for (int b = 0; b < cfg.depths[s]; ++b) {
        // Alternate unshifted / shifted; drop-path rates sweep 0 -> max.
        const double rate = total_blocks > 1
                                ? cfg.drop_path_max * block_index / (total_blocks - 1)
                                : 0.0;
        blocks.emplace_back(dim, cfg.heads[s], cfg.window, cfg.mlp_ratio, b % 2 == 1, rate);
        ++block_index;
      }
      stages.push_back(std::move(blocks));
      if (s + 1 < cfg.stages()) merges.emplace_back(dim);
    }
    norm = LayerNorm<T>(cfg.out_dim());
  }

  void init(std::uint64_t seed) {
    Rng rng(seed);
    visit([&rng](const std::string&, Mat<T>& value, Mat<T>&, bool decay) {
      if (decay) {
        trunc_normal_init(value, rng);
      }
      // Non-decay tensors keep their construction values
      // (zero biases and tables, unit norm scales).
    });
  }

  Vec<T> forward(const Mat<T>& image, Mode mode, Rng* rng = nullptr) {
    Mat<T> tokens = embed.forward(image);
    int grid = cfg_.input_size / cfg_.patch_size;
    for (int s = 0; s < cfg_.stages(); ++s) {
      for (auto& block : stages[s]) {
        tokens = block.forward(tokens, grid, grid, mode, rng);
      }
      if (s + 1 < cfg_.stages()) {
        tokens = merges[s].forward(tokens, grid, grid);
        grid /= 2;
      }
    }
    last_grid_ = grid;
    tokens = norm.forward(tokens);
    return tokens.colwise().mean().transpose();
  }

  // Gradient of a scalar loss w.r.t. the pooled feature; accumulates into
  // parameter grads.
  void backward(const Vec<T>& dfeat) {
    const int n = last_grid_ * last_grid_;
    Mat<T> d_tokens(n, dfeat.size());
    for (int i = 0; i < n; ++i) d_tokens.row(i) = dfeat.transpose() / static_cast<T>(n);
    d_tokens = norm.backward(d_tokens);
    for (int s = cfg_.stages() - 1; s >= 0; --s) {
      if (s + 1 < cfg_.stages()) d_tokens = merges[s].backward(d_tokens);
      for (auto it = stages[s].rbegin(); it != stages[s].rend(); ++it) {
        d_tokens = it->backward(d_tokens);
      }
    }
    embed.backward(d_tokens);
  }

  void visit(const ParamVisitor<T>& fn) {
    embed.visit("embed", fn);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      for (std::size_t b = 0; b < stages[s].size(); ++b) {
        stages[s][b].visit("stage" + std::to_string(s) + ".block" + std::to_string(b), fn);
      }
      if (s < merges.size()) merges[s].visit("stage" + std::to_string(s) + ".merge", fn);
    }
    norm.visit("norm", fn);
  }

  void zero_grad() {
    visit([](const std::string&, Mat<T>&, Mat<T>& grad, bool) { grad.setZero(); });
  }

  const SwinConfig& config() const { return cfg_; }

  PatchEmbed<T> embed;
  std::vector<std::vector<SwinBlock<T>>> stages;
  std::vector<PatchMerge<T>> merges;
  LayerNorm<T> norm;

 private:
  SwinConfig cfg_;
  int last_grid_ = 0;
};

}  // namespace s3t::nn
