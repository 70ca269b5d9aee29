#pragma once

#include <array>
#include <string>
#include <vector>

#include "saido/numcore.hpp"

// Frozen random-projection backbone, per-scene low-rank adapters, the shared
// binary head, losses, and hand-derived analytic gradients.

namespace saido {

// Fixed feature map h = P^T x with P in R^{d_raw x d_feat}, entries drawn
// N(0, 1/d_raw) from the run seed. Immutable after construction.
class FrozenBackbone {
 public:
  FrozenBackbone(std::size_t d_raw, std::size_t d_feat, std::uint64_t seed);

  Vec features(const Vec& x_raw) const;
  std::size_t d_raw() const { return projection_.rows; }
  std::size_t d_feat() const { return projection_.cols; }
  std::uint64_t seed() const { return seed_; }

 private:
  Mat projection_;  // d_raw x d_feat
  std::uint64_t seed_;
};

// Low-rank expert adapter. Applied additively on the backbone feature:
// v = h + B A h. B starts at zero so a fresh adapter is exactly transparent.
struct LoraAdapter {
  Mat A;  // r x d_feat, init N(0, 1/r)
  Mat B;  // d_feat x r, init 0

  LoraAdapter() = default;
  LoraAdapter(std::size_t rank, std::size_t d_feat, SeededRng::Stream init);
  std::size_t rank() const { return A.rows; }
};

// Binary real/fake head, shared across all experts.
struct ClassifierHead {
  Mat W;  // 2 x d_feat
  Vec b;  // length 2

  ClassifierHead() = default;
  ClassifierHead(std::size_t d_feat, SeededRng::Stream init);
};

// Frozen text-side embedding: a unit vector that is a pure function of the
// composed prompt string (hash-seeded), standing in for a frozen text encoder.
struct PromptEmbedding {
  std::string text;
  Vec u;  // d_feat, unit norm

  static PromptEmbedding from_text(const std::string& text, std::size_t d_feat);
};

struct LossBreakdown {
  double contrastive = 0.0;
  double ce = 0.0;
  double lambda = 0.0;
  double total = 0.0;  // contrastive + lambda * ce, exactly
};

// Gradients of the total loss w.r.t. every trainable block.
struct GradientSet {
  Mat dA;
  Mat dB;
  Mat dW;
  Vec db;

  static GradientSet zeros_like(const LoraAdapter& a, const ClassifierHead& h);
};

struct ForwardResult {
  Vec v;                         // adapted feature
  std::array<double, 2> logits;
  int prediction;                // argmax, ties to class 0 (real)
};

ForwardResult forward(const Vec& x_raw, const LoraAdapter& expert,
                      const FrozenBackbone& backbone, const ClassifierHead& head);

// Symmetric InfoNCE over matched (image feature, prompt) rows:
// (L_{v->u} + L_{u->v}) / 2 with in-batch negatives.
double contrastive_loss(const std::vector<Vec>& V, const std::vector<Vec>& U);

double ce_loss(const std::array<double, 2>& logits, int y);

struct Batch {
  std::vector<Vec> x_raw;
  std::vector<int> y;               // 0 real, 1 fake
  std::vector<Vec> prompt_u;        // matched prompt embedding per sample
};

LossBreakdown total_loss(const Batch& batch, const LoraAdapter& expert,
                         const FrozenBackbone& backbone, const ClassifierHead& head,
                         double lambda);

// Analytic gradients of total_loss w.r.t. A, B, W, b (backbone and prompts
// are frozen). CE is the batch mean; contrastive carries its own 1/B.
GradientSet gradients(const Batch& batch, const LoraAdapter& expert,
                      const FrozenBackbone& backbone, const ClassifierHead& head,
                      double lambda, LossBreakdown* loss_out = nullptr);

// Per-sample gradient of the log-likelihood log p(y|x) (CE only, negated);
// feeds the Fisher importance accumulator.
GradientSet loglik_gradient(const Vec& x_raw, int y, const LoraAdapter& expert,
                            const FrozenBackbone& backbone, const ClassifierHead& head);

// Plain SGD with momentum over the four trainable blocks. Buffers are reset
// at task boundaries by constructing a fresh optimizer.
class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(LoraAdapter& expert, ClassifierHead& head, const GradientSet& g);

 private:
  void apply(std::vector<double>& param, std::vector<double>& buf,
             const std::vector<double>& grad);

  double lr_;
  double momentum_;
  GradientSet buf_;
  bool init_ = false;
};

}  // namespace saido
