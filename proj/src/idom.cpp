#include "saido/idom.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace saido {

std::pair<Vec, Vec> project(const Vec& g, const Vec& g_ref) {
  if (g.size() != g_ref.size()) throw std::invalid_argument("project: dimension mismatch");
  double ref_sq = dot(g_ref, g_ref);
  if (std::sqrt(ref_sq) <= 1e-12) return {Vec(g.size(), 0.0), g};
  double coef = dot(g, g_ref) / ref_sq;
  Vec g_p(g.size()), g_o(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g_p[i] = coef * g_ref[i];
    g_o[i] = g[i] - g_p[i];
  }
  return {std::move(g_p), std::move(g_o)};
}

std::pair<double, double> control_factors(double i_hist_real, double i_hist_fake) {
  if (i_hist_real < 0.0 || i_hist_fake < 0.0)
    throw std::invalid_argument("control_factors: negative importance");
  double sum = i_hist_real + i_hist_fake;
  if (sum == 0.0) return {0.5, 0.5};
  double q0 = i_hist_real / sum;
  return {q0, 1.0 - q0};
}

double scale_factor(double i_norm, double e) {
  if (!(i_norm >= 0.0 && i_norm <= 1.0))
    throw std::invalid_argument("scale_factor: i_norm outside [0,1]");
  if (e < 0.0) throw std::invalid_argument("scale_factor: e must be >= 0");
  return 1.0 / (1.0 + e * i_norm);
}

std::vector<std::uint8_t> compute_mask(const Vec& importance, double alpha) {
  return top_mask(importance, alpha);
}

Vec transform_block(const Vec& g, const Vec& g_ref, const Vec& i_hist_real,
                    const Vec& i_hist_fake, const std::vector<std::uint8_t>& m_bar,
                    const IdomConfig& cfg) {
  const std::size_t n = g.size();
  if (i_hist_real.size() != n || i_hist_fake.size() != n || m_bar.size() != n)
    throw std::invalid_argument("transform_block: shape mismatch");
  auto [g_p, g_o] = project(g, g_ref);

  // min-max normalized combined historical importance; constant blocks map to 0
  Vec combined(n);
  for (std::size_t i = 0; i < n; ++i) combined[i] = i_hist_real[i] + i_hist_fake[i];
  double lo = *std::min_element(combined.begin(), combined.end());
  double hi = *std::max_element(combined.begin(), combined.end());
  double range = hi - lo;

  Vec w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (m_bar[i]) {
      auto [q0, q1] = control_factors(i_hist_real[i], i_hist_fake[i]);
      double g_tilde = q0 * g_p[i] + q1 * g_o[i];
      double i_norm = (range > 0.0) ? (combined[i] - lo) / range : 0.0;
      w[i] = scale_factor(i_norm, cfg.e) * g_tilde;
    } else {
      w[i] = g[i];
    }
  }
  return w;
}

BlockState::BlockState(std::size_t n)
    : size(n),
      i_hist{Vec(n, 0.0), Vec(n, 0.0)},
      m_bar(n, 0),
      epoch_grad_sum(n, 0.0) {}

ImportanceState::ImportanceState(const LoraAdapter& adapter, const ClassifierHead& head) {
  blocks_[static_cast<int>(Block::A)] = BlockState(adapter.A.size());
  blocks_[static_cast<int>(Block::B)] = BlockState(adapter.B.size());
  blocks_[static_cast<int>(Block::W)] = BlockState(head.W.size());
  blocks_[static_cast<int>(Block::Bias)] = BlockState(head.b.size());
}

Vec flatten(const GradientSet& g, Block b) {
  switch (b) {
    case Block::A: return g.dA.data;
    case Block::B: return g.dB.data;
    case Block::W: return g.dW.data;
    case Block::Bias: return g.db;
  }
  throw std::logic_error("flatten: bad block");
}

void ImportanceState::accumulate_fisher(const GradientSet& sample_grad, int c,
                                        const std::string& scene) {
  if (c != 0 && c != 1) throw std::invalid_argument("accumulate_fisher: class must be 0/1");
  for (Block b : kBlocks) {
    Vec flat = flatten(sample_grad, b);
    check_finite(flat, "fisher gradient");
    BlockState& bs = mutable_block(b);
    if (flat.size() != bs.size) throw std::invalid_argument("accumulate_fisher: shape mismatch");
    auto& acc = bs.fisher[scene][static_cast<std::size_t>(c)];
    if (acc.sum_sq.empty()) acc.sum_sq.assign(bs.size, 0.0);
    for (std::size_t i = 0; i < flat.size(); ++i) acc.sum_sq[i] += flat[i] * flat[i];
    acc.count += 1;
  }
}

void ImportanceState::record_epoch_gradient(const GradientSet& batch_grad) {
  for (Block b : kBlocks) {
    Vec flat = flatten(batch_grad, b);
    BlockState& bs = mutable_block(b);
    if (flat.size() != bs.size)
      throw std::invalid_argument("record_epoch_gradient: shape mismatch");
    for (std::size_t i = 0; i < flat.size(); ++i) bs.epoch_grad_sum[i] += flat[i];
    bs.epoch_grad_count += 1;
  }
}

Vec ImportanceState::current_importance(Block b, int c) const {
  const BlockState& bs = block(b);
  Vec out(bs.size, 0.0);
  std::size_t scenes = 0;
  for (const auto& [scene, accs] : bs.fisher) {
    const auto& acc = accs[static_cast<std::size_t>(c)];
    if (acc.count == 0) continue;
    ++scenes;
    double inv = 1.0 / static_cast<double>(acc.count);
    for (std::size_t i = 0; i < bs.size; ++i) out[i] += acc.sum_sq[i] * inv;
  }
  if (scenes > 0) {
    double inv = 1.0 / static_cast<double>(scenes);
    for (double& v : out) v *= inv;
  }
  return out;
}

bool ImportanceState::finalize_task(double alpha) {
  bool any_data = false;
  for (Block b : kBlocks)
    if (block(b).epoch_grad_count > 0 || !block(b).fisher.empty()) any_data = true;
  if (!any_data) throw std::runtime_error("finalize_task called before any training");

  bool degenerate = false;
  for (Block b : kBlocks) {
    BlockState& bs = mutable_block(b);
    for (int c = 0; c < 2; ++c) {
      bool observed = false;
      for (const auto& [scene, accs] : bs.fisher)
        if (accs[static_cast<std::size_t>(c)].count > 0) observed = true;
      if (!observed) continue;
      Vec imp = current_importance(b, c);
      bool all_zero = std::all_of(imp.begin(), imp.end(), [](double v) { return v == 0.0; });
      if (all_zero) degenerate = true;
      auto mask = compute_mask(imp, alpha);
      for (std::size_t i = 0; i < bs.size; ++i)
        bs.m_bar[i] = bs.m_bar[i] | mask[i];
      for (std::size_t i = 0; i < bs.size; ++i)
        bs.i_hist[static_cast<std::size_t>(c)][i] += imp[i];
    }
    if (bs.epoch_grad_count == 0)
      throw std::runtime_error("finalize_task: no final-epoch gradients recorded");
    Vec g_task(bs.size);
    double inv = 1.0 / static_cast<double>(bs.epoch_grad_count);
    for (std::size_t i = 0; i < bs.size; ++i) g_task[i] = bs.epoch_grad_sum[i] * inv;
    if (!bs.has_g_ref) {
      bs.g_ref = std::move(g_task);
      bs.has_g_ref = true;
    } else {
      double t = static_cast<double>(tasks_seen_);
      for (std::size_t i = 0; i < bs.size; ++i)
        bs.g_ref[i] = (t * bs.g_ref[i] + g_task[i]) / (t + 1.0);
    }
    bs.fisher.clear();
    bs.epoch_grad_sum.assign(bs.size, 0.0);
    bs.epoch_grad_count = 0;
  }
  tasks_seen_ += 1;
  return degenerate;
}

GradientSet ImportanceState::transform(const GradientSet& g, const IdomConfig& cfg) const {
  if (tasks_seen_ == 0) return g;  // first task trains unconstrained
  GradientSet out = g;
  for (Block b : kBlocks) {
    const BlockState& bs = block(b);
    Vec w = transform_block(flatten(g, b), bs.g_ref, bs.i_hist[0], bs.i_hist[1], bs.m_bar, cfg);
    switch (b) {
      case Block::A: out.dA.data = std::move(w); break;
      case Block::B: out.dB.data = std::move(w); break;
      case Block::W: out.dW.data = std::move(w); break;
      case Block::Bias: out.db = std::move(w); break;
    }
  }
  return out;
}

void ImportanceState::save(std::ostream& os) const {
  os << "idom-state tasks_seen " << tasks_seen_ << "\n";
  for (Block b : kBlocks) {
    const BlockState& bs = block(b);
    os << "block " << static_cast<int>(b) << " size " << bs.size << " has_g_ref "
       << (bs.has_g_ref ? 1 : 0) << "\n";
    for (int c = 0; c < 2; ++c) {
      os << "i_hist" << c;
      for (double v : bs.i_hist[static_cast<std::size_t>(c)]) os << " " << format_double(v);
      os << "\n";
    }
    os << "m_bar";
    for (auto m : bs.m_bar) os << " " << static_cast<int>(m);
    os << "\n";
    os << "g_ref";
    if (bs.has_g_ref)
      for (double v : bs.g_ref) os << " " << format_double(v);
    os << "\n";
  }
}

ImportanceState ImportanceState::load(std::istream& is) {
  ImportanceState st;
  std::string line, tok;
  if (!std::getline(is, line)) throw std::runtime_error("idom state: truncated");
  {
    std::istringstream ls(line);
    std::string k;
    ls >> tok >> k >> st.tasks_seen_;
    if (tok != "idom-state" || k != "tasks_seen") throw std::runtime_error("idom state: bad header");
  }
  for (Block b : kBlocks) {
    if (!std::getline(is, line)) throw std::runtime_error("idom state: truncated");
    std::istringstream ls(line);
    int blk = -1, has_ref = 0;
    std::size_t size = 0;
    std::string k1, k2, k3;
    ls >> k1 >> blk >> k2 >> size >> k3 >> has_ref;
    if (k1 != "block" || blk != static_cast<int>(b) || k2 != "size" || k3 != "has_g_ref")
      throw std::runtime_error("idom state: bad block header");
    BlockState bs(size);
    for (int c = 0; c < 2; ++c) {
      if (!std::getline(is, line)) throw std::runtime_error("idom state: truncated");
      std::istringstream vs(line);
      vs >> tok;
      bs.i_hist[static_cast<std::size_t>(c)].clear();
      while (vs >> tok) bs.i_hist[static_cast<std::size_t>(c)].push_back(parse_double(tok));
      if (bs.i_hist[static_cast<std::size_t>(c)].size() != size)
        throw std::runtime_error("idom state: i_hist size mismatch");
    }
    if (!std::getline(is, line)) throw std::runtime_error("idom state: truncated");
    {
      std::istringstream vs(line);
      vs >> tok;
      bs.m_bar.clear();
      int m;
      while (vs >> m) bs.m_bar.push_back(static_cast<std::uint8_t>(m));
      if (bs.m_bar.size() != size) throw std::runtime_error("idom state: m_bar size mismatch");
    }
    if (!std::getline(is, line)) throw std::runtime_error("idom state: truncated");
    {
      std::istringstream vs(line);
      vs >> tok;
      bs.g_ref.clear();
      while (vs >> tok) bs.g_ref.push_back(parse_double(tok));
      bs.has_g_ref = has_ref != 0;
      if (bs.has_g_ref && bs.g_ref.size() != size)
        throw std::runtime_error("idom state: g_ref size mismatch");
    }
    st.blocks_[static_cast<int>(b)] = std::move(bs);
  }
  return st;
}

}  // namespace saido
