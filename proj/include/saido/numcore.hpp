#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Dense linear algebra, seeded randomness, and scalar utilities shared by the
// whole framework. Everything here is deterministic: no global RNG state, and
// the PRNG output is fully specified (mt19937_64 + explicit Box-Muller), so
// runs reproduce bit-for-bit across platforms (xoshiro256++ + explicit
// Box-Muller, no library distributions).

namespace saido {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return data.size(); }
};

// Splittable seeded RNG. Substreams are keyed by (purpose tag, index) so that
// independent parts of a run draw from independent, reorderable streams.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  class Stream {
   public:
    explicit Stream(std::uint64_t state);
    std::uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    // standard normal via Box-Muller (two uniforms per draw, no cached spare)
    double gaussian();

   private:
    std::uint64_t s_[4];
  };

  Stream stream(std::string_view tag, std::uint64_t index = 0) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// 64-bit FNV-1a, used to derive stream keys and prompt seeds from strings.
std::uint64_t fnv1a64(std::string_view s);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
// y = M x  (x has M.cols entries, result has M.rows)
Vec matvec(const Mat& m, const Vec& x);
// y = M^T x  (x has M.rows entries, result has M.cols)
Vec matvec_t(const Mat& m, const Vec& x);
// a b^T
Mat outer(const Vec& a, const Vec& b);

Vec softmax(const Vec& logits);
double log_sum_exp(const Vec& logits);

// Number of entries selected by the "top alpha fraction" rule: ceil(alpha*N),
// with a small tolerance so alpha*N values that are integers up to rounding
// do not spill over.
std::size_t top_count(std::size_t n, double alpha);

// Threshold t equal to the m-th largest value, m = top_count(n, alpha).
// Returns +inf when m = 0. Throws on empty input or alpha outside [0,1].
double quantile_threshold(const Vec& values, double alpha);

// Binary mask with exactly top_count(n, alpha) ones. Ties are resolved by
// ascending-index order in the sorted sequence, so among equal values the
// higher indices are selected first and the cardinality is exact.
std::vector<std::uint8_t> top_mask(const Vec& values, double alpha);

void check_finite(const Vec& v, const char* what);

// Human-shortest decimal that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace saido
