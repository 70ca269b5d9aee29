#include "saido/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace saido {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

void AccuracyMatrix::record(std::size_t k, std::size_t j, double acc) {
  if (k < 1 || j < 1) fail("accuracy matrix: sessions and tasks are 1-based");
  if (j > k) fail("accuracy matrix: cannot record future task " + std::to_string(j) +
                  " at session " + std::to_string(k));
  if (!(acc >= 0.0 && acc <= 1.0)) fail("accuracy matrix: accuracy outside [0,1]");
  if (rows_.size() < k) rows_.resize(k);
  auto& row = rows_[k - 1];
  if (row.size() < j) row.resize(j);
  if (row[j - 1].has_value())
    fail("accuracy matrix: duplicate entry (" + std::to_string(k) + "," + std::to_string(j) + ")");
  row[j - 1] = acc;
}

const std::optional<double>& AccuracyMatrix::cell(std::size_t k, std::size_t j) const {
  static const std::optional<double> none;
  if (k < 1 || k > rows_.size()) return none;
  const auto& row = rows_[k - 1];
  if (j < 1 || j > row.size()) return none;
  return row[j - 1];
}

bool AccuracyMatrix::has(std::size_t k, std::size_t j) const { return cell(k, j).has_value(); }

double AccuracyMatrix::at(std::size_t k, std::size_t j) const {
  const auto& c = cell(k, j);
  if (!c) fail("accuracy matrix: missing entry (" + std::to_string(k) + "," + std::to_string(j) + ")");
  return *c;
}

double AccuracyMatrix::aa(std::size_t k) const {
  if (k < 1) fail("aa: session must be >= 1");
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    if (!has(k, j)) fail("aa: row " + std::to_string(k) + " incomplete");
    sum += at(k, j);
  }
  return sum / static_cast<double>(k);
}

double AccuracyMatrix::af(std::size_t k) const {
  if (k < 2) fail("af: needs at least two sessions");
  double sum = 0.0;
  for (std::size_t j = 1; j < k; ++j) {
    double best = 0.0;
    for (std::size_t t = j; t < k; ++t) {
      if (!has(t, j)) fail("af: row " + std::to_string(t) + " incomplete");
      best = std::max(best, at(t, j));
    }
    if (!has(k, j)) fail("af: row " + std::to_string(k) + " incomplete");
    sum += best - at(k, j);
  }
  return sum / static_cast<double>(k - 1);
}

double AccuracyMatrix::new_acc(std::size_t K) const {
  if (K < 1) fail("new_acc: needs at least one session");
  double sum = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    if (!has(k, k)) fail("new_acc: diagonal incomplete at " + std::to_string(k));
    sum += at(k, k);
  }
  return sum / static_cast<double>(K);
}

}  // namespace saido
