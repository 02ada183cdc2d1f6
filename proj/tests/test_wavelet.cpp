#include "coreg/error.hpp"
#include "coreg/rng.hpp"
#include "coreg/wavelet.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace coreg {
namespace {

Vector random_vector(Index n, std::uint64_t seed) {
  const CounterRng rng(seed, 7);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

class WaveletSizes : public ::testing::TestWithParam<Index> {};

TEST_P(WaveletSizes, PerfectReconstructionAndParseval) {
  const Index n = GetParam();
  WaveletBasis basis(n);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const Vector g = random_vector(n, 2 * k), h = random_vector(n, 2 * k + 1);
    const CoefficientVector cg = basis.analyze(g), ch = basis.analyze(h);
    EXPECT_LE((basis.synthesize(ch) - h).norm(), 1e-10 * h.norm());
    EXPECT_NEAR(ch.values.norm(), h.norm(), 1e-10 * h.norm());
    EXPECT_NEAR(cg.values.dot(ch.values), g.dot(h), 1e-10 * g.norm() * h.norm());
  }
}

INSTANTIATE_TEST_SUITE_P(Sizes, WaveletSizes, ::testing::Values(8, 64, 256, 1024));

TEST(Wavelet, FilterOrthonormality) {
  const auto& h = WaveletBasis::lowpass();
  EXPECT_NEAR(h[0] * h[0] + h[1] * h[1] + h[2] * h[2] + h[3] * h[3], 1.0, 1e-14);
  EXPECT_NEAR(h[0] * h[2] + h[1] * h[3], 0.0, 1e-14);
  EXPECT_NEAR(h[0] + h[1] + h[2] + h[3], std::sqrt(2.0), 1e-14);
  const auto g = WaveletBasis::highpass();
  EXPECT_NEAR(g[0] + g[1] + g[2] + g[3], 0.0, 1e-14);
  EXPECT_NEAR(0 * g[0] + 1 * g[1] + 2 * g[2] + 3 * g[3], 0.0, 1e-14);
}

TEST(Wavelet, AffineDetailsVanishOneLevel) {
  const Index n = 32;
  WaveletBasis one(n, 1);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = 0.7 * i - 2.0;
  const Vector c = one.analyze(x).values;
  // Mallat order: one level gives n/2 approximation then n/2 details.
  // Detail k uses x[2k..2k+3]; only the last one wraps around.
  for (Index k = 0; k + 1 < n / 2; ++k) EXPECT_LE(std::abs(c[n / 2 + k]), 1e-12) << k;
  EXPECT_GT(std::abs(c[n - 1]), 1e-3);
}

TEST(Wavelet, ZeroInZeroOut) {
  WaveletBasis basis(16);
  EXPECT_EQ(basis.analyze(Vector::Zero(16)).values.norm(), 0.0);
  EXPECT_EQ(basis.synthesize(CoefficientVector{Vector::Zero(16)}).norm(), 0.0);
}

TEST(Wavelet, AtomRoundTrip) {
  WaveletBasis basis(64);
  for (Index l = 0; l < 64; ++l) {
    const Vector c = basis.analyze(basis.atom(l)).values;
    EXPECT_LE((c - Vector::Unit(64, l)).norm(), 1e-10);
  }
}

TEST(Wavelet, CoarsestScalingIsConstant) {
  WaveletBasis basis(16);
  const Vector phi0 = basis.atom(0);
  EXPECT_LE((phi0.array() - phi0[0]).abs().maxCoeff(), 1e-14);
  EXPECT_NEAR(std::abs(phi0[0]), 0.25, 1e-14);
}

TEST(Wavelet, RejectsNonPowerOfTwo) {
  EXPECT_THROW(WaveletBasis(12), Error);
  EXPECT_THROW(WaveletBasis(0), Error);
  EXPECT_NO_THROW(WaveletBasis(1));
}

TEST(Wavelet, DimensionCheck) {
  WaveletBasis basis(8);
  EXPECT_THROW(basis.analyze(Vector::Zero(4)), DimensionError);
}

TEST(Wavelet, Descriptor) {
  EXPECT_EQ(WaveletBasis(64).descriptor(), "db2(n=64,levels=6,boundary=periodic)");
}

TEST(Support, ThresholdRule) {
  CoefficientVector c{Vector::Zero(5)};
  c.values << 1.0, 1e-13, 0.0, -2.0, 1e-11;
  EXPECT_EQ(support(c), (IndexSet{0, 3, 4}));
  EXPECT_TRUE(support(CoefficientVector{Vector::Zero(5)}).empty());
}

TEST(Project, Basics) {
  const Vector v = random_vector(16, 3);
  CoefficientVector c{v};
  IndexSet all(16);
  for (Index i = 0; i < 16; ++i) all[i] = i;
  EXPECT_EQ(project(c, all).values, v);
  EXPECT_EQ(project(c, {}).values.norm(), 0.0);
  const IndexSet omega = {1, 4, 9};
  const IndexSet rest = complement(omega, 16);
  EXPECT_NEAR(v.squaredNorm(),
              project(c, omega).values.squaredNorm() + project(c, rest).values.squaredNorm(), 1e-12);
}

}  // namespace
}  // namespace coreg
