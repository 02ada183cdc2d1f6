#include "coreg/error.hpp"
#include "coreg/regularizers.hpp"
#include "coreg/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

namespace coreg {
namespace {

Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  const CounterRng rng(seed, 5);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

// min over a grid of ½(g − c)² + w|g|, step 1e-4.
double grid_prox(double c, double w) {
  const double step = 1e-4;
  const double lo = c - w - 1.0, hi = c + w + 1.0;
  double best_g = lo, best = INFINITY;
  for (double g = lo; g <= hi; g += step) {
    const double f = 0.5 * (g - c) * (g - c) + w * std::abs(g);
    if (f < best) {
      best = f;
      best_g = g;
    }
  }
  return best_g;
}

struct Fixture : ::testing::Test {
  std::shared_ptr<const WaveletBasis> basis = std::make_shared<WaveletBasis>(8);
  Vector atom_combo(std::initializer_list<std::pair<Index, double>> terms) const {
    CoefficientVector c{Vector::Zero(8)};
    for (auto [l, v] : terms) c.values[l] = v;
    return basis->synthesize(c);
  }
};

using WeightedL1Test = Fixture;

TEST_F(WeightedL1Test, Eval) {
  WeightedL1 f(basis);
  EXPECT_EQ(f.eval(Vector::Zero(8)), 0.0);
  EXPECT_NEAR(f.eval(atom_combo({{0, 1.0}, {3, -2.0}})), 3.0, 1e-12);
  Vector kappa = Vector::Ones(8);
  kappa[0] = 2.0;
  WeightedL1 g(basis, kappa);
  EXPECT_NEAR(g.eval(atom_combo({{0, 1.0}})), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.lower_bound(), 1.0);
}

TEST_F(WeightedL1Test, RejectsBadWeights) {
  Vector kappa = Vector::Ones(8);
  kappa[2] = 0.0;
  EXPECT_THROW(WeightedL1(basis, kappa), Error);
  EXPECT_THROW(WeightedL1(basis, Vector::Ones(4)), Error);
}

TEST_F(WeightedL1Test, ProxExamples) {
  WeightedL1 f(basis);
  EXPECT_EQ(f.prox(Vector::Zero(8), 1.0).norm(), 0.0);
  // Grid oracle gives 2 for soft(3, 1); frozen.
  EXPECT_NEAR(grid_prox(3.0, 1.0), 2.0, 1e-4);
  EXPECT_LE((f.prox(atom_combo({{0, 3.0}}), 1.0) - atom_combo({{0, 2.0}})).norm(), 1e-12);
  Vector kappa = Vector::Ones(8);
  kappa[0] = 2.0;
  WeightedL1 g(basis, kappa);
  EXPECT_NEAR(grid_prox(1.5, 2.0), 0.0, 1e-4);
  EXPECT_LE(g.prox(atom_combo({{0, 1.5}}), 1.0).norm(), 1e-12);
}

TEST_F(WeightedL1Test, ProxMatchesGridSearch) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    const CounterRng rng(k, 77);
    Vector kappa(8);
    for (Index i = 0; i < 8; ++i) kappa[i] = 0.2 + 2.0 * rng.uniform(static_cast<std::uint64_t>(i));
    WeightedL1 f(basis, kappa);
    const double t = 0.1 + rng.uniform(100);
    const Vector c = random_vector(8, 1000 + k, 2.0);
    const Vector p = f.prox_coefficients(c, t);
    for (Index i = 0; i < 8; ++i) {
      const double w = t * kappa[i];
      const double g = grid_prox(c[i], w);
      EXPECT_NEAR(p[i], g, 1e-4);
      const double fp = 0.5 * (p[i] - c[i]) * (p[i] - c[i]) + w * std::abs(p[i]);
      const double fg = 0.5 * (g - c[i]) * (g - c[i]) + w * std::abs(g);
      EXPECT_LE(fp, fg + 1e-12);
    }
    // prox in signal space agrees with the coefficient form
    const Vector h = basis->synthesize(CoefficientVector{c});
    EXPECT_LE((basis->analyze(f.prox(h, t)).values - p).norm(), 1e-12);
  }
}

TEST_F(WeightedL1Test, ProxNonexpansive) {
  WeightedL1 f(basis);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const Vector a = random_vector(8, 2 * k), b = random_vector(8, 2 * k + 1);
    EXPECT_LE((f.prox(a, 0.7) - f.prox(b, 0.7)).norm(), (a - b).norm() + 1e-12);
  }
}

TEST(QuadraticPenalty, Basics) {
  QuadraticPenalty r;
  Vector x(2);
  x << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(r.eval(x), 12.5);
  EXPECT_EQ(r.gradient(x), x);
  EXPECT_LE((r.prox(x, 1.0) - x / 2.0).norm(), 0.0);
}

TEST(SoftThreshold, PerEntry) {
  Vector v(3), t(3);
  v << 3.0, -0.5, -2.0;
  t << 1.0, 1.0, 0.5;
  const Vector s = soft_threshold(v, t);
  EXPECT_DOUBLE_EQ(s[0], 2.0);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
  EXPECT_DOUBLE_EQ(s[2], -1.5);
}

using SubgradientTest = Fixture;

TEST_F(SubgradientTest, CanonicalSingleAtom) {
  WeightedL1 f(basis);
  const Subgradient eta = canonical_subgradient(f, atom_combo({{1, 1.0}}));
  EXPECT_LE((eta.eta.values - Vector::Unit(8, 1)).norm(), 1e-12);
  EXPECT_EQ(eta.omega, (IndexSet{1}));
  EXPECT_DOUBLE_EQ(eta.margin, 1.0);
}

TEST_F(SubgradientTest, CanonicalWithFill) {
  WeightedL1 f(basis);
  Vector fill = Vector::Zero(8);
  fill[1] = 0.3;
  const Subgradient eta = canonical_subgradient(f, atom_combo({{0, 1.0}, {2, -1.0}}), fill);
  EXPECT_EQ(eta.omega, (IndexSet{0, 2}));
  EXPECT_NEAR(eta.margin, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(eta.eta.values[2], -1.0);
}

TEST_F(SubgradientTest, CanonicalErrors) {
  WeightedL1 f(basis);
  Vector fill = Vector::Zero(8);
  fill[1] = 1.5;
  EXPECT_THROW(canonical_subgradient(f, atom_combo({{0, 1.0}}), fill), Error);
  // saturating every index gives an empty complement and an infinite margin
  const Subgradient full = canonical_subgradient(f, atom_combo({{0, 1.0}}), Vector::Ones(8));
  EXPECT_EQ(full.omega.size(), 8u);
  EXPECT_TRUE(std::isinf(full.margin));
}

TEST_F(SubgradientTest, SubgradientInequalityAndHomogeneity) {
  WeightedL1 f(basis);
  const Vector h_star = atom_combo({{0, 1.3}, {2, -0.6}, {5, 2.0}});
  const Vector fill = random_vector(8, 3).cwiseMax(-0.9).cwiseMin(0.9);
  const Subgradient eta = canonical_subgradient(f, h_star, fill);
  const Vector eta_h = basis->synthesize(eta.eta);
  EXPECT_NEAR(eta_h.dot(h_star), f.eval(h_star), 1e-12);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vector h = random_vector(8, 100 + k, 2.0);
    EXPECT_GE(f.eval(h), f.eval(h_star) + eta_h.dot(h - h_star) - 1e-12);
  }
}

TEST_F(SubgradientTest, BregmanExamples) {
  WeightedL1 f(basis);
  const Vector h_star = atom_combo({{0, 1.0}});
  const Subgradient eta = canonical_subgradient(f, h_star);
  EXPECT_NEAR(bregman_l1(f, eta, h_star, h_star), 0.0, 1e-14);
  EXPECT_NEAR(bregman_l1(f, eta, -h_star, h_star), 2.0, 1e-12);
  // η not in the subdifferential at h⋆
  EXPECT_THROW(bregman_l1(f, eta, h_star, atom_combo({{0, -1.0}})), Error);
}

TEST_F(SubgradientTest, BregmanLowerBound) {
  auto big = std::make_shared<WaveletBasis>(32);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const CounterRng rng(k, 31);
    Vector kappa(32);
    for (Index i = 0; i < 32; ++i) kappa[i] = 0.5 + rng.uniform(static_cast<std::uint64_t>(i));
    WeightedL1 f(big, kappa);
    CoefficientVector cs{Vector::Zero(32)};
    for (int j = 0; j < 4; ++j) cs.values[rng.bits(100 + j) % 32] = rng.normal(200 + j);
    const Vector h_star = big->synthesize(cs);
    Vector fill(32);
    for (Index i = 0; i < 32; ++i) fill[i] = kappa[i] * (2.0 * rng.uniform(300 + i) - 1.0) * 0.95;
    const Subgradient eta = canonical_subgradient(f, h_star, fill);
    const Vector h = random_vector(32, 500 + k);
    const Vector ch = big->analyze(h).values;
    double tail = 0.0;
    for (Index l : complement(eta.omega, 32)) tail += std::abs(ch[l]);
    EXPECT_GE(bregman_l1(f, eta, h, h_star), eta.margin * tail - 1e-12);
    EXPECT_GE(bregman_l1(f, eta, h, h_star), 0.0);
  }
}

TEST(BregmanQuadratic, Examples) {
  Vector x(2), xs = Vector::Zero(2);
  x << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(bregman_quadratic(x, xs), 1.0);
  EXPECT_EQ(bregman_quadratic(x, x), 0.0);
  QuadraticPenalty r;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Vector a = random_vector(6, 2 * k), b = random_vector(6, 2 * k + 1);
    const double generic = r.eval(a) - r.eval(b) - b.dot(a - b);
    EXPECT_NEAR(bregman_quadratic(a, b), generic, 1e-12 * std::max(1.0, a.squaredNorm()));
  }
}

}  // namespace
}  // namespace coreg
