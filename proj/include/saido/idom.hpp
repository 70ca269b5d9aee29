#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "saido/model.hpp"
#include "saido/numcore.hpp"

// Importance-guided dynamic optimization: diagonal Fisher importance per
// class, core/non-core masking by top-alpha selection, projection of the
// current gradient onto the stored old-task direction, and the combined
// per-entry update. One state per expert, covering blocks A, B, W, b.

namespace saido {

struct IdomConfig {
  double alpha = 0.75;  // core-mask quantile
  double e = 1.0;       // suppression strength of the scaling function
};

// Decomposes g into the component parallel to g_ref and the remainder.
// Returns (0, g) when ||g_ref|| <= 1e-12.
std::pair<Vec, Vec> project(const Vec& g, const Vec& g_ref);

// Convex weights from the historical real/fake importance pair; (0.5, 0.5)
// when both are zero.
std::pair<double, double> control_factors(double i_hist_real, double i_hist_fake);

// u = 1 / (1 + e * i_norm), i_norm in [0,1].
double scale_factor(double i_norm, double e);

// Binary core mask with exactly ceil(alpha * N) ones.
std::vector<std::uint8_t> compute_mask(const Vec& importance, double alpha);

// Combined per-entry update on one flattened block (projection, control
// factors, scaling, and the core/non-core split).
Vec transform_block(const Vec& g, const Vec& g_ref, const Vec& i_hist_real,
                    const Vec& i_hist_fake, const std::vector<std::uint8_t>& m_bar,
                    const IdomConfig& cfg);

enum class Block : int { A = 0, B = 1, W = 2, Bias = 3 };
inline constexpr std::array<Block, 4> kBlocks{Block::A, Block::B, Block::W, Block::Bias};

struct BlockState {
  std::size_t size = 0;
  // per (scene token, class): running sum of squared gradients + sample count
  struct FisherAcc {
    Vec sum_sq;
    std::size_t count = 0;
  };
  std::map<std::string, std::array<FisherAcc, 2>> fisher;
  std::array<Vec, 2> i_hist;       // accumulated importance per class
  std::vector<std::uint8_t> m_bar; // combined core mask across tasks/classes
  Vec g_ref;                       // running mean of per-task final-epoch gradients
  bool has_g_ref = false;
  Vec epoch_grad_sum;              // final-epoch batch-gradient accumulator
  std::size_t epoch_grad_count = 0;

  BlockState() = default;
  explicit BlockState(std::size_t n);
};

class ImportanceState {
 public:
  ImportanceState() = default;
  ImportanceState(const LoraAdapter& adapter, const ClassifierHead& head);

  // Adds one sample's squared log-likelihood gradient into the (scene, class)
  // accumulator.
  void accumulate_fisher(const GradientSet& sample_grad, int c, const std::string& scene);

  // Records one final-epoch batch gradient of the total loss; their mean
  // becomes this task's contribution to g_ref.
  void record_epoch_gradient(const GradientSet& batch_grad);

  // Two-level mean of squared gradients: per (scene, class) sample mean,
  // then mean over the scenes observed for that class.
  Vec current_importance(Block block, int c) const;

  // Task-boundary step: per-class masks are OR-ed into the combined mask,
  // importances accumulate into history, g_ref becomes the running mean of
  // per-task final-epoch gradients, and the per-task accumulators reset.
  // Returns true when some observed class had an all-zero importance block
  // (callers log this). Throws when called before any training.
  bool finalize_task(double alpha);

  // The combined update: pass-through before the first finalize, otherwise
  // transform_block on every flattened block.
  GradientSet transform(const GradientSet& g, const IdomConfig& cfg) const;

  std::size_t tasks_seen() const { return tasks_seen_; }
  const BlockState& block(Block b) const { return blocks_[static_cast<int>(b)]; }

  // Persists everything transform depends on (history, mask, g_ref,
  // tasks_seen). Mid-task accumulators are transient; checkpoints are taken
  // at task boundaries where they are empty.
  void save(std::ostream& os) const;
  static ImportanceState load(std::istream& is);

 private:
  BlockState& mutable_block(Block b) { return blocks_[static_cast<int>(b)]; }
  std::array<BlockState, 4> blocks_{};
  std::size_t tasks_seen_ = 0;
};

Vec flatten(const GradientSet& g, Block b);

}  // namespace saido
