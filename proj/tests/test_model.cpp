#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "saido/model.hpp"

using namespace saido;

namespace {

Batch random_batch(std::size_t B, std::size_t d_raw, std::size_t d_feat, std::uint64_t seed) {
  SeededRng rng(seed);
  Batch b;
  for (std::size_t i = 0; i < B; ++i) {
    auto s = rng.stream("batch", i);
    Vec x(d_raw);
    for (double& v : x) v = s.gaussian();
    b.x_raw.push_back(std::move(x));
    b.y.push_back(static_cast<int>(i % 2));
    Vec u(d_feat);
    for (double& v : u) v = s.gaussian();
    double n = norm2(u);
    for (double& v : u) v /= n;
    b.prompt_u.push_back(std::move(u));
  }
  return b;
}

// central finite differences over every trainable entry
void check_gradients_fd(const Batch& batch, LoraAdapter expert, const FrozenBackbone& backbone,
                        ClassifierHead head, double lambda, double rel_tol) {
  GradientSet g = gradients(batch, expert, backbone, head, lambda);
  const double h = 1e-4;
  auto fd_check = [&](std::vector<double>& param, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      double orig = param[i];
      param[i] = orig + h;
      double up = total_loss(batch, expert, backbone, head, lambda).total;
      param[i] = orig - h;
      double dn = total_loss(batch, expert, backbone, head, lambda).total;
      param[i] = orig;
      double fd = (up - dn) / (2 * h);
      double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
      CHECK(std::abs(fd - analytic[i]) / denom < rel_tol);
    }
  };
  fd_check(expert.A.data, g.dA.data);
  fd_check(expert.B.data, g.dB.data);
  fd_check(head.W.data, g.dW.data);
  fd_check(head.b, g.db);
}

}  // namespace

TEST_CASE("fresh adapter is transparent") {
  FrozenBackbone backbone(8, 6, 11);
  LoraAdapter adapter(2, 6, SeededRng(11).stream("adapter", 0));
  ClassifierHead head(6, SeededRng(11).stream("head"));
  SeededRng rng(3);
  auto s = rng.stream("x");
  Vec x(8);
  for (double& v : x) v = s.gaussian();
  ForwardResult fr = forward(x, adapter, backbone, head);
  Vec bare = backbone.features(x);
  for (std::size_t i = 0; i < bare.size(); ++i)
    CHECK(std::abs(fr.v[i] - bare[i]) <= 1e-12);
}

TEST_CASE("zero input with zero bias predicts class 0 on the tie") {
  FrozenBackbone backbone(8, 6, 11);
  LoraAdapter adapter(2, 6, SeededRng(11).stream("adapter", 0));
  ClassifierHead head(6, SeededRng(11).stream("head"));
  head.b = {0.0, 0.0};
  Vec x(8, 0.0);
  ForwardResult fr = forward(x, adapter, backbone, head);
  CHECK(fr.logits[0] == 0.0);
  CHECK(fr.logits[1] == 0.0);
  CHECK(fr.prediction == 0);
}

TEST_CASE("adapter with BA = I doubles the backbone feature") {
  const std::size_t d = 4;
  FrozenBackbone backbone(6, d, 21);
  LoraAdapter adapter(d, d, SeededRng(21).stream("adapter", 0));
  // A = I, B = I so BA = I
  adapter.A = Mat(d, d);
  adapter.B = Mat(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    adapter.A(i, i) = 1.0;
    adapter.B(i, i) = 1.0;
  }
  ClassifierHead head(d, SeededRng(21).stream("head"));
  auto s = SeededRng(9).stream("x");
  Vec x(6);
  for (double& v : x) v = s.gaussian();
  ForwardResult fr = forward(x, adapter, backbone, head);
  Vec h = backbone.features(x);
  for (std::size_t i = 0; i < d; ++i) CHECK(fr.v[i] == doctest::Approx(2.0 * h[i]).epsilon(1e-12));
}

TEST_CASE("contrastive loss closed forms") {
  // singleton batch: softmax over one element
  CHECK(contrastive_loss({{0.3, 0.7}}, {{1.0, 0.0}}) == doctest::Approx(0.0));

  // orthonormal matched pairs
  std::vector<Vec> v{{1, 0}, {0, 1}};
  double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  CHECK(contrastive_loss(v, v) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(contrastive_loss(v, v) == doctest::Approx(0.31326).epsilon(1e-4));

  // all four vectors identical: uniform softmax over 2
  std::vector<Vec> same{{0.5, 0.5}, {0.5, 0.5}};
  CHECK(contrastive_loss(same, same) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(contrastive_loss({}, {}), std::invalid_argument);
}

TEST_CASE("contrastive loss is symmetric in V and U") {
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = rng.stream("sym", static_cast<std::uint64_t>(trial));
    std::size_t B = 2 + s.next_u64() % 4, d = 3;
    std::vector<Vec> V, U;
    for (std::size_t i = 0; i < B; ++i) {
      Vec a(d), b(d);
      for (double& x : a) x = s.gaussian();
      for (double& x : b) x = s.gaussian();
      V.push_back(a);
      U.push_back(b);
    }
    CHECK(contrastive_loss(V, U) == doctest::Approx(contrastive_loss(U, V)).epsilon(1e-12));
    CHECK(contrastive_loss(V, U) >= 0.0);
  }
}

TEST_CASE("cross-entropy closed forms") {
  CHECK(ce_loss({100.0, 0.0}, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ce_loss({0.0, 0.0}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ce_loss({0.0, 0.0}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ce_loss({std::log(3.0), 0.0}, 0) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("total loss composition") {
  FrozenBackbone backbone(8, 6, 31);
  LoraAdapter adapter(2, 6, SeededRng(31).stream("adapter", 0));
  ClassifierHead head(6, SeededRng(31).stream("head"));
  Batch batch = random_batch(4, 8, 6, 99);

  LossBreakdown zero = total_loss(batch, adapter, backbone, head, 0.0);
  CHECK(zero.total == zero.contrastive);

  LossBreakdown one = total_loss(batch, adapter, backbone, head, 1.0);
  CHECK(one.total == doctest::Approx(one.contrastive + one.ce).epsilon(1e-12));
  CHECK(one.contrastive >= 0.0);
  CHECK(one.ce >= 0.0);

  // parts recomputed independently
  std::vector<Vec> V;
  double ce = 0.0;
  for (std::size_t i = 0; i < batch.x_raw.size(); ++i) {
    ForwardResult fr = forward(batch.x_raw[i], adapter, backbone, head);
    V.push_back(fr.v);
    ce += ce_loss(fr.logits, batch.y[i]);
  }
  ce /= static_cast<double>(batch.x_raw.size());
  double con = contrastive_loss(V, batch.prompt_u);
  CHECK(one.total == doctest::Approx(con + ce).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::uint64_t seed = 1000 + trial;
    FrozenBackbone backbone(8, 6, seed);
    LoraAdapter adapter(2, 6, SeededRng(seed).stream("adapter", 0));
    ClassifierHead head(6, SeededRng(seed).stream("head"));
    // move B off zero so its gradient path is exercised
    auto s = SeededRng(seed).stream("bwarm");
    for (double& v : adapter.B.data) v = 0.3 * s.gaussian();
    Batch batch = random_batch(3, 8, 6, seed * 7 + 1);
    double lambda = (trial % 3 == 0) ? 0.0 : 1.0;
    check_gradients_fd(batch, adapter, backbone, head, lambda, 1e-3);
  }
}

TEST_CASE("head bias gradient vanishes when lambda is zero") {
  FrozenBackbone backbone(8, 6, 41);
  LoraAdapter adapter(2, 6, SeededRng(41).stream("adapter", 0));
  ClassifierHead head(6, SeededRng(41).stream("head"));
  Batch batch = random_batch(3, 8, 6, 5);
  GradientSet g = gradients(batch, adapter, backbone, head, 0.0);
  for (double v : g.db) CHECK(v == 0.0);
}

TEST_CASE("gradient descent reaches a near-stationary point on a separable toy batch") {
  FrozenBackbone backbone(6, 4, 51);
  LoraAdapter adapter(2, 4, SeededRng(51).stream("adapter", 0));
  ClassifierHead head(4, SeededRng(51).stream("head"));
  Batch batch;
  batch.x_raw = {{4, 0, 0, 0, 0, 0}, {-4, 0, 0, 0, 0, 0}};
  batch.y = {0, 1};
  Vec u0 = PromptEmbedding::from_text("a | scene: s | real", 4).u;
  Vec u1 = PromptEmbedding::from_text("a | scene: s | fake", 4).u;
  batch.prompt_u = {u0, u1};

  SgdMomentum opt(0.05, 0.9);
  for (int step = 0; step < 8000; ++step) {
    GradientSet g = gradients(batch, adapter, backbone, head, 1.0);
    opt.step(adapter, head, g);
  }
  GradientSet g = gradients(batch, adapter, backbone, head, 1.0);
  double norm_sq = 0.0;
  for (double v : g.dA.data) norm_sq += v * v;
  for (double v : g.dB.data) norm_sq += v * v;
  for (double v : g.dW.data) norm_sq += v * v;
  for (double v : g.db) norm_sq += v * v;
  CHECK(std::sqrt(norm_sq) < 1e-5);
}

TEST_CASE("prompt embeddings are deterministic unit vectors") {
  auto p1 = PromptEmbedding::from_text("a dog photo | scene: Animal | real", 16);
  auto p2 = PromptEmbedding::from_text("a dog photo | scene: Animal | real", 16);
  CHECK(p1.u == p2.u);
  CHECK(norm2(p1.u) == doctest::Approx(1.0).epsilon(1e-9));
  auto p3 = PromptEmbedding::from_text("a dog photo | scene: Animal | fake", 16);
  CHECK(p1.u != p3.u);
}
