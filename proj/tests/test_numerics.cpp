#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "plfl/numerics.hpp"
#include "plfl/param_vector.hpp"

using namespace plfl;

TEST(Matvec, IdentityReturnsInput) {
  const Vector x{1, 2, 3};
  EXPECT_EQ(matvec(Matrix::identity(3), x), x);
}

TEST(Matvec, ZeroMatrixGivesZeros) {
  EXPECT_EQ(matvec(Matrix(2, 3), Vector{4, -5, 6}), (Vector{0, 0}));
}

TEST(Matvec, HandMultiplication) {
  const Matrix w(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(matvec(w, Vector{1, 1}), (Vector{3, 7}));
}

TEST(Matvec, ShapeMismatchThrows) {
  EXPECT_THROW(matvec(Matrix(2, 3), Vector{1, 2}), ShapeError);
}

TEST(Matvec, TransposedAndOuterAgreeWithLoops) {
  Rng rng(5);
  const Matrix w = sample_uniform(rng, -1, 1, 3, 4);
  const Vector y = sample_uniform(rng, -1, 1, 3);
  const Vector x = sample_uniform(rng, -1, 1, 4);
  Vector wt_y(4, 0.0);
  matvec_transposed_accumulate(w.view(), y, wt_y);
  Matrix g(3, 4);
  outer_accumulate(y, x, g.view());
  for (std::size_t c = 0; c < 4; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      acc += w(r, c) * y[r];
      EXPECT_DOUBLE_EQ(g(r, c), y[r] * x[c]);
    }
    EXPECT_NEAR(wt_y[c], acc, 1e-15);
  }
}

TEST(Elementwise, UnaryExamples) {
  EXPECT_EQ(elementwise(ElementOp::sigmoid, Vector{0.0}), (Vector{0.5}));
  EXPECT_EQ(elementwise(ElementOp::tanh, Vector{0.0}), (Vector{0.0}));
  EXPECT_EQ(elementwise(ElementOp::sign, Vector{-2, 0, 3}), (Vector{-1, 0, 1}));
  EXPECT_EQ(elementwise(ElementOp::abs, Vector{-2, 3}), (Vector{2, 3}));
  EXPECT_EQ(elementwise(ElementOp::square, Vector{-3}), (Vector{9}));
  EXPECT_EQ(elementwise(ElementOp::sqrt, Vector{16}), (Vector{4}));
}

TEST(Elementwise, BinaryExamples) {
  EXPECT_EQ(elementwise(ElementOp::max, Vector{1, 5}, Vector{4, 2}), (Vector{4, 5}));
  EXPECT_EQ(elementwise(ElementOp::mul, Vector{2, 3}, Vector{4, 5}), (Vector{8, 15}));
  EXPECT_EQ(elementwise(ElementOp::add, Vector{2, 3}, Vector{4, 5}), (Vector{6, 8}));
  EXPECT_EQ(elementwise(ElementOp::sub, Vector{2, 3}, Vector{4, 5}), (Vector{-2, -2}));
}

TEST(Elementwise, ErrorsOnShapeOrArity) {
  EXPECT_THROW(elementwise(ElementOp::add, Vector{1, 2}, Vector{1}), ShapeError);
  EXPECT_THROW(elementwise(ElementOp::add, Vector{1}), std::invalid_argument);
  EXPECT_THROW(elementwise(ElementOp::tanh, Vector{1}, Vector{1}), std::invalid_argument);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-16);
  EXPECT_NEAR(sigmoid(-2.0), 1.0 / (1.0 + std::exp(2.0)), 1e-16);
}

TEST(SampleUniform, SameSeedSameValues) {
  Rng a(42), b(42);
  EXPECT_EQ(sample_uniform(a, -1, 1, 2), sample_uniform(b, -1, 1, 2));
}

TEST(SampleUniform, NarrowRangeContained) {
  Rng rng(1);
  const double hi = 1.0;
  const double lo = std::nextafter(hi, 0.0) - 1e-12;
  for (double v : sample_uniform(rng, lo, hi, 1000)) {
    EXPECT_GE(v, lo);
    EXPECT_LT(v, hi);
  }
}

TEST(SampleUniform, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  const auto x = sample_uniform(a, 0, 1, 16);
  const auto y = sample_uniform(b, 0, 1, 16);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NE(x[i], y[i]) << i;
}

TEST(SampleUniform, RejectsEmptyRange) {
  Rng rng(0);
  EXPECT_THROW(sample_uniform(rng, 1.0, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(sample_uniform(rng, 2.0, 1.0, 2, 2), std::invalid_argument);
}

TEST(Rng, KnownEngineOutput) {
  // 10000th output of a default-seeded mt19937_64 is fixed by the C++ standard.
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, BelowAndShuffleArePermutations) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 10u);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.01);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(7, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
}

namespace {
std::vector<GroupSpec> two_groups() { return {{"a", 2, 2}, {"b", 3, 1}}; }
}  // namespace

TEST(ParamVector, FlattenUnflattenIdentity) {
  ParamVector p(two_groups());
  for (std::size_t i = 0; i < p.size(); ++i) p.flat()[i] = static_cast<double>(i) * 0.5;
  const std::vector<double> flat(p.flat().begin(), p.flat().end());
  EXPECT_EQ(ParamVector::unflatten(two_groups(), flat), p);
  EXPECT_EQ(p.group("b")[0], 2.0);
}

TEST(ParamVector, ArithmeticRequiresSameSchema) {
  ParamVector a(two_groups(), 1.0);
  ParamVector b(two_groups(), 2.0);
  a += b;
  EXPECT_EQ(a.flat()[6], 3.0);
  a -= b;
  a *= 4.0;
  EXPECT_EQ(a.flat()[0], 4.0);
  a.axpy(0.5, b);
  EXPECT_EQ(a.flat()[0], 5.0);
  ParamVector c({{"a", 2, 2}, {"b", 1, 3}});
  EXPECT_THROW(a += c, ShapeError);
}

TEST(ParamVector, UnknownGroupAndBadStorage) {
  ParamVector p(two_groups());
  EXPECT_THROW(p.index_of("nope"), std::invalid_argument);
  EXPECT_THROW(ParamVector::unflatten(two_groups(), std::vector<double>(3)), ShapeError);
}
