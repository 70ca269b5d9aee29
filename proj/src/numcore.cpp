#include "saido/numcore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace saido {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SeededRng::Stream::Stream(std::uint64_t state) {
  for (auto& w : s_) w = splitmix64(state);
}

std::uint64_t SeededRng::Stream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::Stream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::Stream::gaussian() {
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SeededRng::Stream SeededRng::stream(std::string_view tag, std::uint64_t index) const {
  std::uint64_t key = seed_;
  key ^= rotl(fnv1a64(tag), 17);
  key ^= rotl(index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL, 31);
  return Stream(key);
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec matvec(const Mat& m, const Vec& x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_t(const Mat& m, const Vec& x) {
  if (x.size() != m.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += m(i, j) * x[i];
  return y;
}

Mat outer(const Vec& a, const Vec& b) {
  Mat m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

double log_sum_exp(const Vec& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return mx + std::log(s);
}

Vec softmax(const Vec& logits) {
  check_finite(logits, "softmax input");
  double mx = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

std::size_t top_count(std::size_t n, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0,1]");
  double t = alpha * static_cast<double>(n);
  double r = std::round(t);
  if (std::abs(t - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(t));
}

double quantile_threshold(const Vec& values, double alpha) {
  if (values.empty()) throw std::invalid_argument("empty importance set");
  std::size_t m = top_count(values.size(), alpha);
  if (m == 0) return std::numeric_limits<double>::infinity();
  Vec sorted = values;
  std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end(),
                   std::greater<double>());
  return sorted[m - 1];
}

std::vector<std::uint8_t> top_mask(const Vec& values, double alpha) {
  if (values.empty()) throw std::invalid_argument("empty importance set");
  std::size_t n = values.size();
  std::size_t m = top_count(n, alpha);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // ascending by value; equal values keep ascending index order, so the top-m
  // tail prefers higher indices among ties
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = n - m; i < n; ++i) mask[idx[i]] = 1;
  return mask;
}

void check_finite(const Vec& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite ") + what);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad float: " + std::string(s));
  return v;
}

}  // namespace saido
