#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "saido/metrics.hpp"
#include "saido/numcore.hpp"

using namespace saido;

namespace {

AccuracyMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  AccuracyMatrix m;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < rows[k].size(); ++j)
      m.record(k + 1, j + 1, rows[k][j]);
  return m;
}

}  // namespace

TEST_CASE("record and read back") {
  AccuracyMatrix m;
  m.record(1, 1, 0.99);
  CHECK(m.at(1, 1) == 0.99);
  CHECK(m.has(1, 1));
  CHECK(!m.has(2, 1));
  CHECK(m.sessions() == 1);

  CHECK_THROWS_AS(m.record(1, 2, 0.5), std::invalid_argument);  // future task
  CHECK_THROWS_AS(m.record(1, 1, 0.5), std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(m.record(0, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(m.record(2, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(m.record(2, 1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(m.record(2, 1, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(m.at(3, 1), std::invalid_argument);
}

TEST_CASE("average accuracy") {
  AccuracyMatrix m = from_rows({{1.0}, {0.8, 1.0}});
  CHECK(m.aa(2) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(m.aa(1) == 1.0);

  AccuracyMatrix c = from_rows({{0.7}, {0.7, 0.7}, {0.7, 0.7, 0.7}});
  for (std::size_t k = 1; k <= 3; ++k) CHECK(c.aa(k) == doctest::Approx(0.7).epsilon(1e-15));

  AccuracyMatrix incomplete;
  incomplete.record(2, 2, 0.5);
  CHECK_THROWS_AS(incomplete.aa(2), std::invalid_argument);
}

TEST_CASE("average forgetting") {
  AccuracyMatrix m = from_rows({{1.0}, {0.8, 1.0}});
  CHECK(m.af(2) == doctest::Approx(0.2).epsilon(1e-15));

  AccuracyMatrix m3 = from_rows({{1.0}, {1.0, 1.0}, {0.5, 1.0, 1.0}});
  CHECK(m3.af(3) == doctest::Approx(0.25).epsilon(1e-15));

  // non-decreasing per-task accuracies never show positive forgetting
  AccuracyMatrix up = from_rows({{0.6}, {0.7, 0.8}, {0.9, 0.85, 0.95}});
  CHECK(up.af(2) <= 0.0);
  CHECK(up.af(3) <= 0.0);

  CHECK_THROWS_AS(m.af(1), std::invalid_argument);
  AccuracyMatrix incomplete = from_rows({{1.0}});
  incomplete.record(2, 2, 0.9);
  CHECK_THROWS_AS(incomplete.af(2), std::invalid_argument);
}

TEST_CASE("forgetting compares against the historical maximum") {
  // task 1 peaks at session 2, not on the diagonal
  AccuracyMatrix m = from_rows({{0.6}, {0.9, 1.0}, {0.7, 1.0, 1.0}});
  CHECK(m.af(3) == doctest::Approx((0.9 - 0.7) / 2.0).epsilon(1e-12));
}

TEST_CASE("plasticity") {
  AccuracyMatrix m = from_rows({{1.0}, {0.2, 0.9}});
  CHECK(m.new_acc(2) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(m.new_acc(1) == 1.0);

  AccuracyMatrix c = from_rows({{0.8}, {0.1, 0.8}, {0.1, 0.1, 0.8}});
  CHECK(c.new_acc(3) == doctest::Approx(0.8).epsilon(1e-15));

  AccuracyMatrix incomplete = from_rows({{1.0}});
  CHECK_THROWS_AS(incomplete.new_acc(2), std::invalid_argument);
}

TEST_CASE("metric ranges on random matrices") {
  SeededRng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = rng.stream("mat", static_cast<std::uint64_t>(trial));
    std::size_t K = 2 + s.next_u64() % 6;
    AccuracyMatrix m;
    for (std::size_t k = 1; k <= K; ++k)
      for (std::size_t j = 1; j <= k; ++j) m.record(k, j, s.uniform());
    for (std::size_t k = 1; k <= K; ++k) {
      CHECK(m.aa(k) >= 0.0);
      CHECK(m.aa(k) <= 1.0);
      CHECK(m.new_acc(k) >= 0.0);
      CHECK(m.new_acc(k) <= 1.0);
      if (k >= 2) {
        CHECK(m.af(k) >= -1.0);
        CHECK(m.af(k) <= 1.0);
      }
    }
  }
}

TEST_CASE("row mean formula reproduces a reported-style aggregate") {
  // a final row averaging to 0.9561 must report AA exactly there
  AccuracyMatrix m = from_rows({{0.97}, {0.9561, 0.97}, {0.9400, 0.9561, 0.9722}});
  double expect = (0.9400 + 0.9561 + 0.9722) / 3.0;
  CHECK(m.aa(3) == doctest::Approx(expect).epsilon(1e-15));
  AccuracyMatrix flat = from_rows({{0.9561}, {0.9561, 0.9561}});
  CHECK(flat.aa(2) == doctest::Approx(0.9561).epsilon(1e-15));
}
