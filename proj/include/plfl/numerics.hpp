#pragma once

// Minimal dense linear algebra, elementwise kernels and a seeded RNG.
// Everything is double precision; no broadcasting, shape mismatches throw.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plfl {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("shape mismatch: " + what);
}

using Vector = std::vector<double>;

/// Read-only row-major view over matrix storage owned elsewhere.
struct ConstMatrixView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Mutable row-major view.
struct MatrixView {
  std::span<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double& operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  operator ConstMatrixView() const { return {values, rows, cols}; }
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    require_shape(values_.size() == rows_ * cols_, "matrix storage does not match rows*cols");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  ConstMatrixView view() const { return {values_, rows_, cols_}; }
  MatrixView view() { return {values_, rows_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// out += W x
inline void matvec_accumulate(ConstMatrixView w, std::span<const double> x, std::span<double> out) {
  require_shape(w.cols == x.size(), "matvec: W.cols != x.len");
  require_shape(w.rows == out.size(), "matvec: W.rows != out.len");
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.values.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

// out += W^T y
inline void matvec_transposed_accumulate(ConstMatrixView w, std::span<const double> y,
                                         std::span<double> out) {
  require_shape(w.rows == y.size(), "matvec^T: W.rows != y.len");
  require_shape(w.cols == out.size(), "matvec^T: W.cols != out.len");
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = w.values.data() + r * w.cols;
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += row[c] * yr;
  }
}

// G += y x^T
inline void outer_accumulate(std::span<const double> y, std::span<const double> x, MatrixView g) {
  require_shape(g.rows == y.size() && g.cols == x.size(), "outer: G is not |y| x |x|");
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* row = g.values.data() + r * g.cols;
    for (std::size_t c = 0; c < g.cols; ++c) row[c] += yr * x[c];
  }
}

inline Vector matvec(ConstMatrixView w, std::span<const double> x) {
  Vector out(w.rows, 0.0);
  matvec_accumulate(w, x, out);
  return out;
}

inline Vector matvec(const Matrix& w, std::span<const double> x) { return matvec(w.view(), x); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double sign(double z) { return static_cast<double>((z > 0.0) - (z < 0.0)); }

enum class ElementOp { sigmoid, tanh, mul, add, sub, square, sqrt, max, sign, abs };

inline bool is_binary(ElementOp op) {
  return op == ElementOp::mul || op == ElementOp::add || op == ElementOp::sub || op == ElementOp::max;
}

inline Vector elementwise(ElementOp op, std::span<const double> a) {
  if (is_binary(op)) throw std::invalid_argument("elementwise: binary op given one operand");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    switch (op) {
      case ElementOp::sigmoid: out[i] = sigmoid(x); break;
      case ElementOp::tanh: out[i] = std::tanh(x); break;
      case ElementOp::square: out[i] = x * x; break;
      case ElementOp::sqrt: out[i] = std::sqrt(x); break;
      case ElementOp::sign: out[i] = sign(x); break;
      case ElementOp::abs: out[i] = std::abs(x); break;
      default: break;
    }
  }
  return out;
}

inline Vector elementwise(ElementOp op, std::span<const double> a, std::span<const double> b) {
  if (!is_binary(op)) throw std::invalid_argument("elementwise: unary op given two operands");
  require_shape(a.size() == b.size(), "elementwise operands differ in length");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    switch (op) {
      case ElementOp::mul: out[i] = a[i] * b[i]; break;
      case ElementOp::add: out[i] = a[i] + b[i]; break;
      case ElementOp::sub: out[i] = a[i] - b[i]; break;
      case ElementOp::max: out[i] = a[i] < b[i] ? b[i] : a[i]; break;
      default: break;
    }
  }
  return out;
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

/// Seeded MT19937-64 stream. The engine's output sequence is fixed by the
/// standard; the conversions to doubles and indices are done here rather
/// than through <random> distributions, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: requires lo < hi");
    const double u = lo + (hi - lo) * uniform01();
    return u < hi ? u : lo;
  }

  /// Uniform integer on [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (no caching, two draws per call).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

inline Vector sample_uniform(Rng& rng, double lo, double hi, std::size_t n) {
  if (!(lo < hi)) throw std::invalid_argument("sample_uniform: requires lo < hi");
  Vector out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

inline Matrix sample_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, sample_uniform(rng, lo, hi, rows * cols));
}

}  // namespace plfl
