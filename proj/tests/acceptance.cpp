// Acceptance gate: every release criterion, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "saido/harness.hpp"

using namespace saido;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  if (ok) {
    std::cout << "PASS  " << name << "\n";
  } else {
    std::cout << "FAIL  " << name << (detail.empty() ? "" : "  (" + detail + ")") << "\n";
    ++g_failures;
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// ---- gradient correctness -------------------------------------------------

bool gradient_check() {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::uint64_t seed = 4000 + trial;
    FrozenBackbone backbone(8, 6, seed);
    LoraAdapter adapter(2, 6, SeededRng(seed).stream("adapter", 0));
    ClassifierHead head(6, SeededRng(seed).stream("head"));
    auto warm = SeededRng(seed).stream("bwarm");
    for (double& v : adapter.B.data) v = 0.3 * warm.gaussian();

    SeededRng rng(seed * 3 + 1);
    Batch batch;
    for (std::size_t i = 0; i < 3; ++i) {
      auto s = rng.stream("batch", i);
      Vec x(8), u(6);
      for (double& v : x) v = s.gaussian();
      for (double& v : u) v = s.gaussian();
      double n = norm2(u);
      for (double& v : u) v /= n;
      batch.x_raw.push_back(x);
      batch.y.push_back(static_cast<int>(i % 2));
      batch.prompt_u.push_back(u);
    }
    double lambda = (trial % 2 == 0) ? 1.0 : 0.5;
    GradientSet g = gradients(batch, adapter, backbone, head, lambda);
    const double h = 1e-4;
    auto fd_ok = [&](std::vector<double>& param, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        double orig = param[i];
        param[i] = orig + h;
        double up = total_loss(batch, adapter, backbone, head, lambda).total;
        param[i] = orig - h;
        double dn = total_loss(batch, adapter, backbone, head, lambda).total;
        param[i] = orig;
        double fd = (up - dn) / (2 * h);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        if (std::abs(fd - analytic[i]) / denom >= 1e-3) return false;
      }
      return true;
    };
    if (!fd_ok(adapter.A.data, g.dA.data)) return false;
    if (!fd_ok(adapter.B.data, g.dB.data)) return false;
    if (!fd_ok(head.W.data, g.dW.data)) return false;
    if (!fd_ok(head.b, g.db)) return false;
  }
  return true;
}

// ---- projection invariants ------------------------------------------------

bool projection_invariants() {
  SeededRng rng(901);
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = rng.stream("proj", static_cast<std::uint64_t>(trial));
    std::size_t n = 2 + s.next_u64() % 24;
    Vec g(n), ref(n);
    for (double& v : g) v = s.gaussian();
    for (double& v : ref) v = s.gaussian();
    auto [gp, go] = project(g, ref);
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(gp[i] + go[i] - g[i]) > 1e-12) return false;
    double denom = norm2(go) * norm2(ref);
    if (denom > 0.0 && std::abs(dot(go, ref)) / denom >= 1e-9) return false;
  }
  return true;
}

// ---- fisher oracle --------------------------------------------------------

bool fisher_oracle() {
  FrozenBackbone backbone(4, 3, 17);
  LoraAdapter adapter(2, 3, SeededRng(17).stream("adapter", 0));
  ClassifierHead head(3, SeededRng(17).stream("head"));
  ImportanceState st(adapter, head);
  SeededRng rng(902);
  auto s = rng.stream("fisher");
  const char* scenes[3] = {"sa", "sb", "sc"};

  struct Sample {
    GradientSet g;
    int c;
    std::string scene;
  };
  std::vector<Sample> samples;
  for (int i = 0; i < 50; ++i) {
    GradientSet g = GradientSet::zeros_like(adapter, head);
    for (double& v : g.dA.data) v = s.gaussian();
    for (double& v : g.dB.data) v = s.gaussian();
    for (double& v : g.dW.data) v = s.gaussian();
    for (double& v : g.db) v = s.gaussian();
    samples.push_back({g, static_cast<int>(s.next_u64() % 2),
                       scenes[static_cast<std::size_t>(s.next_u64() % 3)]});
    st.accumulate_fisher(samples.back().g, samples.back().c, samples.back().scene);
  }
  for (Block b : kBlocks) {
    for (int c = 0; c < 2; ++c) {
      std::size_t n = flatten(samples[0].g, b).size();
      Vec expect(n, 0.0);
      std::size_t n_scenes = 0;
      for (const char* scene : scenes) {
        Vec scene_sum(n, 0.0);
        std::size_t count = 0;
        for (const auto& smp : samples) {
          if (smp.scene != scene || smp.c != c) continue;
          Vec flat = flatten(smp.g, b);
          for (std::size_t i = 0; i < n; ++i) scene_sum[i] += flat[i] * flat[i];
          ++count;
        }
        if (count == 0) continue;
        ++n_scenes;
        for (std::size_t i = 0; i < n; ++i)
          expect[i] += scene_sum[i] / static_cast<double>(count);
      }
      if (n_scenes == 0) continue;
      for (double& v : expect) v /= static_cast<double>(n_scenes);
      Vec got = st.current_importance(b, c);
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(got[i] - expect[i]) > 1e-12) return false;
    }
  }
  return true;
}

// ---- mask cardinality -----------------------------------------------------

bool mask_cardinality() {
  SeededRng rng(903);
  const double alphas[4] = {0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    auto s = rng.stream("mask", static_cast<std::uint64_t>(trial));
    std::size_t n = 1 + s.next_u64() % 64;
    Vec imp(n);
    for (double& v : imp) v = std::abs(s.gaussian());
    for (double alpha : alphas) {
      auto mask = compute_mask(imp, alpha);
      std::size_t ones = 0;
      for (auto m : mask) ones += m;
      // independent ceil: smallest integer >= alpha * n
      std::size_t want = 0;
      while (static_cast<double>(want) < alpha * static_cast<double>(n) - 1e-9) ++want;
      if (ones != want) return false;
    }
  }
  return true;
}

// ---- orthogonal-update theorem -------------------------------------------

bool orthogonal_update_theorem() {
  SeededRng rng(904);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = rng.stream("ortho", static_cast<std::uint64_t>(trial));
    const std::size_t n = 8;
    Mat E(n, n);
    for (double& v : E.data) v = s.gaussian();
    std::vector<Vec> X;
    for (int i = 0; i < 3; ++i) {
      Vec x(n);
      for (double& v : x) v = s.gaussian();
      X.push_back(x);
    }
    std::vector<Vec> basis;
    for (const Vec& x : X) {
      Vec r = x;
      for (const Vec& b : basis) {
        double c = dot(r, b);
        for (std::size_t i = 0; i < n; ++i) r[i] -= c * b[i];
      }
      double nr = norm2(r);
      if (nr > 1e-12) {
        for (double& v : r) v /= nr;
        basis.push_back(r);
      }
    }
    Mat delta(n, n);
    for (std::size_t row = 0; row < n; ++row) {
      Vec d(n);
      for (double& v : d) v = s.gaussian();
      for (const Vec& b : basis) {
        double c = dot(d, b);
        for (std::size_t i = 0; i < n; ++i) d[i] -= c * b[i];
      }
      for (std::size_t i = 0; i < n; ++i) delta(row, i) = d[i];
    }
    double e_norm = 0.0;
    for (double v : E.data) e_norm += v * v;
    e_norm = std::sqrt(e_norm);
    for (const Vec& x : X) {
      Vec before = matvec(E, x);
      Mat updated = E;
      for (std::size_t i = 0; i < updated.data.size(); ++i) updated.data[i] += delta.data[i];
      Vec after = matvec(updated, x);
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff += (after[i] - before[i]) * (after[i] - before[i]);
      if (std::sqrt(diff) > 1e-9 * e_norm * norm2(x)) return false;
    }
  }
  return true;
}

// ---- degenerate control/scale contracts -----------------------------------

bool factor_contracts() {
  SeededRng rng(905);
  auto s = rng.stream("factors");
  for (int i = 0; i < 500; ++i) {
    auto [q0, q1] = control_factors(std::abs(s.gaussian()), std::abs(s.gaussian()));
    if (q0 + q1 != 1.0) return false;
  }
  auto [z0, z1] = control_factors(0.0, 0.0);
  if (z0 != 0.5 || z1 != 0.5) return false;
  if (scale_factor(0.0, 2.0) != 1.0) return false;
  double prev = 2.0;
  for (int i = 0; i <= 10; ++i) {
    double u = scale_factor(i / 10.0, 1.5);
    if (!(u < prev)) return false;
    prev = u;
  }
  return true;
}

// ---- continual benchmarks -------------------------------------------------

struct BenchResult {
  double af = 0.0;
  double new_acc = 0.0;
  double final_aa = 0.0;
  double seconds = 0.0;
};

BenchResult run_bench(RunConfig cfg) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport rep = run_protocol(cfg);
  BenchResult r;
  std::size_t K = rep.sessions.size();
  r.af = rep.matrix.af(K);
  r.new_acc = rep.matrix.new_acc(K);
  r.final_aa = rep.matrix.aa(K);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

bool e2e_benchmark(std::string& detail) {
  std::vector<double> af_idom, af_naive, newacc_idom, aa_idom, aa_naive;
  double worst_sec = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig on = make_reference_config(seed);
    RunConfig off = on;
    off.idom_on = false;
    BenchResult ri = run_bench(on);
    BenchResult rn = run_bench(off);
    worst_sec = std::max({worst_sec, ri.seconds, rn.seconds});
    af_idom.push_back(ri.af);
    af_naive.push_back(rn.af);
    newacc_idom.push_back(ri.new_acc);
    aa_idom.push_back(ri.final_aa);
    aa_naive.push_back(rn.final_aa);
  }
  double m_af_i = median(af_idom), m_af_n = median(af_naive);
  double m_new = median(newacc_idom);
  double m_aa_i = median(aa_idom), m_aa_n = median(aa_naive);
  detail = "AF idom=" + fmt(m_af_i) + " naive=" + fmt(m_af_n) + ", New.ACC=" + fmt(m_new) +
           ", AA idom=" + fmt(m_aa_i) + " naive=" + fmt(m_aa_n) +
           ", slowest run " + fmt(worst_sec) + "s";
  return m_af_i <= 0.5 * m_af_n && m_new >= 0.90 && m_aa_i > m_aa_n && worst_sec < 60.0;
}

bool saem_ablation(std::string& detail) {
  std::vector<double> aa_on, aa_off;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig on = make_scene_shift_config(seed);
    RunConfig off = on;
    off.saem_on = false;
    aa_on.push_back(run_bench(on).final_aa);
    aa_off.push_back(run_bench(off).final_aa);
  }
  double m_on = median(aa_on), m_off = median(aa_off);
  detail = "AA saem=" + fmt(m_on) + " single-expert=" + fmt(m_off);
  return m_on >= m_off;
}

// ---- scene stabilization --------------------------------------------------

bool scene_stabilization() {
  const Vec centroids[3] = {{0, 0, 0}, {40, 0, 0}, {0, 40, 0}};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SceneLibrary lib(10.0, 1.0);
    SeededRng rng(seed);
    auto s = rng.stream("cluster");
    std::size_t size_at_half = 0;
    for (int i = 0; i < 2000; ++i) {
      const Vec& c = centroids[static_cast<std::size_t>(s.next_u64() % 3)];
      Vec x{c[0] + s.gaussian(), c[1] + s.gaussian(), c[2] + s.gaussian()};
      lib.assign_and_update(x);
      if (i == 999) size_at_half = lib.size();
    }
    if (lib.size() != 3 || size_at_half != 3) return false;
  }
  return true;
}

// ---- metrics oracle -------------------------------------------------------

bool metrics_oracle() {
  AccuracyMatrix m1;
  m1.record(1, 1, 1.0);
  m1.record(2, 1, 0.8);
  m1.record(2, 2, 1.0);
  if (std::abs(m1.aa(2) - 0.9) > 1e-12) return false;
  if (std::abs(m1.af(2) - 0.2) > 1e-12) return false;

  AccuracyMatrix m2;
  m2.record(1, 1, 1.0);
  m2.record(2, 1, 1.0);
  m2.record(2, 2, 1.0);
  m2.record(3, 1, 0.5);
  m2.record(3, 2, 1.0);
  m2.record(3, 3, 1.0);
  if (std::abs(m2.af(3) - 0.25) > 1e-12) return false;

  AccuracyMatrix m3;
  m3.record(1, 1, 1.0);
  m3.record(2, 1, 0.2);
  m3.record(2, 2, 0.9);
  if (std::abs(m3.new_acc(2) - 0.95) > 1e-12) return false;
  return true;
}

// ---- determinism ----------------------------------------------------------

bool determinism() {
  RunConfig cfg = make_reference_config(1);
  fs::path d1 = fs::temp_directory_path() / "saido_accept_det1";
  fs::path d2 = fs::temp_directory_path() / "saido_accept_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  emit_report(run_protocol(cfg), d1.string());
  emit_report(run_protocol(cfg), d2.string());
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  bool ok = slurp(d1 / "matrix.csv") == slurp(d2 / "matrix.csv") &&
            !slurp(d1 / "matrix.csv").empty();
  fs::remove_all(d1);
  fs::remove_all(d2);
  return ok;
}

}  // namespace

int main() {
  {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = gradient_check();
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report("gradient-correctness (20 finite-difference instances, <5s)", ok && sec < 5.0,
           ok ? "took " + fmt(sec) + "s" : "mismatch");
  }
  report("projection-invariants (1000 random pairs)", projection_invariants());
  report("fisher-oracle (3 scenes, 50 samples, 1e-12)", fisher_oracle());
  report("mask-cardinality (100 arrays x 4 alphas)", mask_cardinality());
  report("orthogonal-update-theorem (50 random 8x8 instances)", orthogonal_update_theorem());
  report("factor-contracts (q0+q1=1, u(0)=1, u decreasing)", factor_contracts());
  {
    std::string detail;
    bool ok = e2e_benchmark(detail);
    report("end-to-end-benchmark (5 seeds, AF halved, New.ACC >= 0.90, AA ordering)", ok, detail);
  }
  {
    std::string detail;
    bool ok = saem_ablation(detail);
    report("saem-ablation (scene-shift benchmark, 5 seeds)", ok, detail);
  }
  report("scene-stabilization (3 clusters, 5 seeds, 2000 samples)", scene_stabilization());
  report("metrics-oracle (worked matrices)", metrics_oracle());
  report("determinism (byte-identical matrix.csv)", determinism());

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
