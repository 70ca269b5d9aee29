#pragma once

#include <optional>
#include <vector>

// Continual-learning metrics over the lower-triangular session-by-task
// accuracy matrix. Sessions and tasks are 1-based.

namespace saido {

class AccuracyMatrix {
 public:
  // Stores accuracy on task j after session k (j <= k). Duplicate or
  // out-of-range entries are errors.
  void record(std::size_t k, std::size_t j, double acc);

  double at(std::size_t k, std::size_t j) const;
  bool has(std::size_t k, std::size_t j) const;
  std::size_t sessions() const { return rows_.size(); }

  // Average accuracy after session k: mean of row k.
  double aa(std::size_t k) const;

  // Average forgetting after session k (k >= 2): mean over past tasks of
  // best-historical accuracy minus current accuracy. Signed.
  double af(std::size_t k) const;

  // Plasticity: mean of the diagonal over sessions 1..K.
  double new_acc(std::size_t K) const;

 private:
  const std::optional<double>& cell(std::size_t k, std::size_t j) const;
  std::vector<std::vector<std::optional<double>>> rows_;
};

}  // namespace saido
