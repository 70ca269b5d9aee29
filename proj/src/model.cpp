#include "saido/model.hpp"

#include <cmath>
#include <stdexcept>

namespace saido {

FrozenBackbone::FrozenBackbone(std::size_t d_raw, std::size_t d_feat, std::uint64_t seed)
    : projection_(d_raw, d_feat), seed_(seed) {
  auto s = SeededRng(seed).stream("backbone");
  const double std = std::sqrt(1.0 / static_cast<double>(d_raw));
  for (double& e : projection_.data) e = std * s.gaussian();
}

Vec FrozenBackbone::features(const Vec& x_raw) const {
  return matvec_t(projection_, x_raw);
}

LoraAdapter::LoraAdapter(std::size_t rank, std::size_t d_feat, SeededRng::Stream init)
    : A(rank, d_feat), B(d_feat, rank) {
  if (rank < 1) throw std::invalid_argument("adapter rank must be >= 1");
  const double std = std::sqrt(1.0 / static_cast<double>(rank));
  for (double& e : A.data) e = std * init.gaussian();
  // B stays zero: a fresh adapter contributes nothing
}

ClassifierHead::ClassifierHead(std::size_t d_feat, SeededRng::Stream init)
    : W(2, d_feat), b(2, 0.0) {
  const double std = std::sqrt(1.0 / static_cast<double>(d_feat));
  for (double& e : W.data) e = std * init.gaussian();
}

PromptEmbedding PromptEmbedding::from_text(const std::string& text, std::size_t d_feat) {
  PromptEmbedding p;
  p.text = text;
  auto s = SeededRng(fnv1a64(text)).stream("prompt");
  p.u.resize(d_feat);
  for (double& e : p.u) e = s.gaussian();
  double n = norm2(p.u);
  if (n < 1e-12) {
    p.u.assign(d_feat, 0.0);
    p.u[0] = 1.0;
  } else {
    for (double& e : p.u) e /= n;
  }
  return p;
}

GradientSet GradientSet::zeros_like(const LoraAdapter& a, const ClassifierHead& h) {
  GradientSet g;
  g.dA = Mat(a.A.rows, a.A.cols);
  g.dB = Mat(a.B.rows, a.B.cols);
  g.dW = Mat(h.W.rows, h.W.cols);
  g.db = Vec(h.b.size(), 0.0);
  return g;
}

namespace {

Vec adapted_feature(const Vec& h, const LoraAdapter& expert, Vec* a_out) {
  Vec a = matvec(expert.A, h);
  Vec v = matvec(expert.B, a);
  for (std::size_t i = 0; i < h.size(); ++i) v[i] += h[i];
  if (a_out) *a_out = std::move(a);
  return v;
}

std::array<double, 2> head_logits(const Vec& v, const ClassifierHead& head) {
  Vec l = matvec(head.W, v);
  return {l[0] + head.b[0], l[1] + head.b[1]};
}

std::array<double, 2> softmax2(const std::array<double, 2>& l) {
  double mx = std::max(l[0], l[1]);
  double e0 = std::exp(l[0] - mx), e1 = std::exp(l[1] - mx);
  double s = e0 + e1;
  return {e0 / s, e1 / s};
}

}  // namespace

ForwardResult forward(const Vec& x_raw, const LoraAdapter& expert,
                      const FrozenBackbone& backbone, const ClassifierHead& head) {
  Vec h = backbone.features(x_raw);
  ForwardResult r;
  r.v = adapted_feature(h, expert, nullptr);
  r.logits = head_logits(r.v, head);
  r.prediction = (r.logits[1] > r.logits[0]) ? 1 : 0;  // tie -> real
  return r;
}

double contrastive_loss(const std::vector<Vec>& V, const std::vector<Vec>& U) {
  if (V.empty()) throw std::invalid_argument("contrastive_loss: empty batch");
  if (V.size() != U.size())
    throw std::invalid_argument("contrastive_loss: batch size mismatch");
  const std::size_t B = V.size();
  double l_vu = 0.0, l_uv = 0.0;
  Vec row(B), col(B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      row[j] = dot(V[i], U[j]);
      col[j] = dot(U[i], V[j]);
    }
    l_vu += log_sum_exp(row) - row[i];
    l_uv += log_sum_exp(col) - col[i];
  }
  return (l_vu + l_uv) / (2.0 * static_cast<double>(B));
}

double ce_loss(const std::array<double, 2>& logits, int y) {
  Vec l{logits[0], logits[1]};
  return log_sum_exp(l) - logits[static_cast<std::size_t>(y)];
}

LossBreakdown total_loss(const Batch& batch, const LoraAdapter& expert,
                         const FrozenBackbone& backbone, const ClassifierHead& head,
                         double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (batch.x_raw.empty()) throw std::invalid_argument("total_loss: empty batch");
  const std::size_t B = batch.x_raw.size();
  std::vector<Vec> V(B);
  double ce = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    Vec h = backbone.features(batch.x_raw[i]);
    V[i] = adapted_feature(h, expert, nullptr);
    ce += ce_loss(head_logits(V[i], head), batch.y[i]);
  }
  ce /= static_cast<double>(B);
  LossBreakdown out;
  out.contrastive = contrastive_loss(V, batch.prompt_u);
  out.ce = ce;
  out.lambda = lambda;
  out.total = out.contrastive + lambda * out.ce;
  return out;
}

GradientSet gradients(const Batch& batch, const LoraAdapter& expert,
                      const FrozenBackbone& backbone, const ClassifierHead& head,
                      double lambda, LossBreakdown* loss_out) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  const std::size_t B = batch.x_raw.size();
  if (B == 0) throw std::invalid_argument("gradients: empty batch");
  if (batch.y.size() != B || batch.prompt_u.size() != B)
    throw std::invalid_argument("gradients: ragged batch");

  std::vector<Vec> H(B), Avals(B), V(B);
  std::vector<std::array<double, 2>> P(B);
  double ce = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    H[i] = backbone.features(batch.x_raw[i]);
    V[i] = adapted_feature(H[i], expert, &Avals[i]);
    auto logits = head_logits(V[i], head);
    P[i] = softmax2(logits);
    ce += ce_loss(logits, batch.y[i]);
  }
  ce /= static_cast<double>(B);

  // contrastive: S[i][j] = v_i . u_j; row softmax serves v->u, column softmax
  // serves u->v
  Mat S(B, B);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) S(i, j) = dot(V[i], batch.prompt_u[j]);
  Mat R(B, B), C(B, B);  // R: softmax of rows of S; C: softmax of columns
  double l_vu = 0.0, l_uv = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    Vec row(B), col(B);
    for (std::size_t j = 0; j < B; ++j) {
      row[j] = S(i, j);
      col[j] = S(j, i);
    }
    Vec sr = softmax(row), sc = softmax(col);
    for (std::size_t j = 0; j < B; ++j) {
      R(i, j) = sr[j];
      C(j, i) = sc[j];
    }
    l_vu += log_sum_exp(row) - row[i];
    l_uv += log_sum_exp(col) - col[i];
  }
  const double inv2B = 1.0 / (2.0 * static_cast<double>(B));
  double contrastive = (l_vu + l_uv) * inv2B;

  GradientSet g = GradientSet::zeros_like(expert, head);
  const double invB = 1.0 / static_cast<double>(B);
  for (std::size_t i = 0; i < B; ++i) {
    // dL/dv_i
    Vec dv(V[i].size(), 0.0);
    // CE through the head
    std::array<double, 2> delta{P[i][0], P[i][1]};
    delta[static_cast<std::size_t>(batch.y[i])] -= 1.0;
    delta[0] *= lambda * invB;
    delta[1] *= lambda * invB;
    for (std::size_t k = 0; k < 2; ++k) {
      g.db[k] += delta[k];
      for (std::size_t j = 0; j < V[i].size(); ++j) {
        g.dW(k, j) += delta[k] * V[i][j];
        dv[j] += delta[k] * head.W(k, j);
      }
    }
    // contrastive through S row i
    for (std::size_t j = 0; j < B; ++j) {
      double gij = inv2B * (R(i, j) + C(i, j) - (i == j ? 2.0 : 0.0));
      for (std::size_t t = 0; t < dv.size(); ++t) dv[t] += gij * batch.prompt_u[j][t];
    }
    // through v = h + B a
    for (std::size_t t = 0; t < dv.size(); ++t)
      for (std::size_t r = 0; r < Avals[i].size(); ++r)
        g.dB(t, r) += dv[t] * Avals[i][r];
    Vec da(Avals[i].size(), 0.0);
    for (std::size_t t = 0; t < dv.size(); ++t)
      for (std::size_t r = 0; r < da.size(); ++r) da[r] += expert.B(t, r) * dv[t];
    for (std::size_t r = 0; r < da.size(); ++r)
      for (std::size_t t = 0; t < H[i].size(); ++t) g.dA(r, t) += da[r] * H[i][t];
  }

  if (loss_out) {
    loss_out->contrastive = contrastive;
    loss_out->ce = ce;
    loss_out->lambda = lambda;
    loss_out->total = contrastive + lambda * ce;
  }
  return g;
}

GradientSet loglik_gradient(const Vec& x_raw, int y, const LoraAdapter& expert,
                            const FrozenBackbone& backbone, const ClassifierHead& head) {
  Vec h = backbone.features(x_raw);
  Vec a;
  Vec v = adapted_feature(h, expert, &a);
  auto p = softmax2(head_logits(v, head));
  // d log p(y|x) / dlogits = onehot(y) - p
  std::array<double, 2> delta{-p[0], -p[1]};
  delta[static_cast<std::size_t>(y)] += 1.0;

  GradientSet g = GradientSet::zeros_like(expert, head);
  Vec dv(v.size(), 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    g.db[k] = delta[k];
    for (std::size_t j = 0; j < v.size(); ++j) {
      g.dW(k, j) = delta[k] * v[j];
      dv[j] += delta[k] * head.W(k, j);
    }
  }
  for (std::size_t t = 0; t < dv.size(); ++t)
    for (std::size_t r = 0; r < a.size(); ++r) g.dB(t, r) = dv[t] * a[r];
  Vec da(a.size(), 0.0);
  for (std::size_t t = 0; t < dv.size(); ++t)
    for (std::size_t r = 0; r < a.size(); ++r) da[r] += expert.B(t, r) * dv[t];
  for (std::size_t r = 0; r < da.size(); ++r)
    for (std::size_t t = 0; t < h.size(); ++t) g.dA(r, t) = da[r] * h[t];
  return g;
}

void SgdMomentum::apply(std::vector<double>& param, std::vector<double>& buf,
                        const std::vector<double>& grad) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    buf[i] = momentum_ * buf[i] + grad[i];
    param[i] -= lr_ * buf[i];
  }
}

void SgdMomentum::step(LoraAdapter& expert, ClassifierHead& head, const GradientSet& g) {
  if (!init_) {
    buf_ = GradientSet::zeros_like(expert, head);
    init_ = true;
  }
  apply(expert.A.data, buf_.dA.data, g.dA.data);
  apply(expert.B.data, buf_.dB.data, g.dB.data);
  apply(head.W.data, buf_.dW.data, g.dW.data);
  apply(head.b, buf_.db, g.db);
}

}  // namespace saido
