#include "coreg/certificates.hpp"
#include "coreg/error.hpp"
#include "coreg/experiments.hpp"
#include "coreg/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

namespace coreg {
namespace {

Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  const CounterRng rng(seed, 21);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

struct Identity : ::testing::Test {
  static constexpr Index n = 8;
  std::shared_ptr<const WaveletBasis> basis = std::make_shared<WaveletBasis>(n);
  MapPtr id = std::make_shared<IdentityMap>(n);
  WeightedL1 l1{basis};
};

TEST_F(Identity, InjectivityAnyOmega) {
  for (const IndexSet& omega : {IndexSet{0}, IndexSet{1, 4, 7}, IndexSet{0, 1, 2, 3, 4, 5, 6, 7}}) {
    const InjectivityReport r = check_restricted_injectivity(id, l1, omega);
    EXPECT_NEAR(r.sigma_min, 1.0, 1e-12);
    EXPECT_NEAR(r.a_omega_inv_norm, 1.0, 1e-12);
    EXPECT_TRUE(r.injective);
  }
}

TEST_F(Identity, EmptyOmega) {
  const InjectivityReport r = check_restricted_injectivity(id, l1, {});
  EXPECT_TRUE(r.injective);
  EXPECT_EQ(r.a_omega_inv_norm, 0.0);
}

TEST_F(Identity, RelaxedOneSparse) {
  const Vector x_star = basis->atom(0);
  const SourceCertificateRelaxed c = find_certificate_relaxed(id, id, l1, x_star);
  EXPECT_TRUE(c.valid);
  EXPECT_LE((c.u - x_star).norm(), 1e-12);
  EXPECT_LE((c.v - 2.0 * x_star).norm(), 1e-12);
  EXPECT_NEAR(c.saturation_margin, 1.0, 1e-12);
  EXPECT_EQ(c.eta.omega, (IndexSet{0}));
  EXPECT_TRUE(c.strictly_complementary);
}

TEST_F(Identity, StrictOneSparse) {
  const Vector x_star = basis->atom(0);
  const SourceCertificateStrict c = find_certificate_strict(id, id, l1, x_star);
  EXPECT_TRUE(c.valid);
  EXPECT_LE((c.nu - 2.0 * x_star).norm(), 1e-12);
  EXPECT_EQ(c.xi, x_star);
  EXPECT_LE(c.split_residual, 1e-12);
}

TEST_F(Identity, ZeroTarget) {
  const SourceCertificateRelaxed r = find_certificate_relaxed(id, id, l1, Vector::Zero(n));
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.v.norm(), 0.0);
  EXPECT_TRUE(r.support.empty());
  const SourceCertificateStrict s = find_certificate_strict(id, id, l1, Vector::Zero(n));
  EXPECT_TRUE(s.valid);
  EXPECT_EQ(s.nu.norm(), 0.0);
}

TEST(Injectivity, DuplicateColumns) {
  // A = D Φ, so A φ_λ is column λ of D.
  const Index n = 8;
  auto basis = std::make_shared<WaveletBasis>(n);
  Matrix d(4, n);
  for (Index j = 0; j < n; ++j) d.col(j) = random_vector(4, j);
  d.col(5) = d.col(2);
  Matrix phi(n, n);
  for (Index j = 0; j < n; ++j) phi.col(j) = basis->analyze(Vector::Unit(n, j)).values;
  auto a = std::make_shared<DenseMap>(d * phi);
  WeightedL1 l1(basis);
  const InjectivityReport r = check_restricted_injectivity(a, l1, {2, 5});
  EXPECT_LE(r.sigma_min, 1e-12);
  EXPECT_FALSE(r.injective);
  EXPECT_TRUE(check_restricted_injectivity(a, l1, {2, 3}).injective);
}

TEST(Injectivity, MoreIndicesThanRows) {
  auto basis = std::make_shared<WaveletBasis>(16);
  auto a = std::make_shared<BernoulliSensing>(3, 16, 1);
  const InjectivityReport r = check_restricted_injectivity(a, WeightedL1(basis), {0, 1, 2, 3});
  EXPECT_FALSE(r.injective);
}

TEST(RateConstants, UnitExample) {
  const RateConstants k = RateConstants::compute(1.0, 1.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(k.c, 2.0);
  EXPECT_DOUBLE_EQ(k.d, 8.0);
}

TEST(RateConstants, GrowWithC) {
  double last_c = 0.0;
  for (double big_c : {1.0, 10.0, 100.0}) {
    const RateConstants k = RateConstants::compute(big_c, 1.5, 0.3, 2.0, 0.7);
    EXPECT_GT(k.c, last_c);
    last_c = k.c;
  }
}

TEST(RateConstants, Errors) {
  EXPECT_THROW(RateConstants::compute(0.0, 1.0, 1.0, 1.0, 1.0), Error);
  EXPECT_THROW(RateConstants::compute(1.0, 1.0, 0.0, 1.0, 1.0), Error);
}

TEST(RateConstants, RecomputableFromCertificate) {
  const Instance inst = make_instance(InstanceSpec{64, 48, 4, 7, 1.0});
  const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
  ASSERT_TRUE(cert.valid);
  const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.eta.omega);
  const RateConstants k = rate_constants_relaxed(cert, inj, 2.0, inj.a_norm);
  const double s = std::sqrt(cert.u.squaredNorm() + cert.v.squaredNorm());
  const double c = (1 + 2.0 * s) * (1 + 2.0 * s) / 4.0;
  const double d = 2 * inj.a_omega_inv_norm * (1 + 2.0 * s) +
                   (1 + inj.a_omega_inv_norm * inj.a_norm) / cert.eta.margin * c;
  EXPECT_NEAR(k.c, c, 1e-12 * c);
  EXPECT_NEAR(k.d, d, 1e-12 * d);
  const RateConstants again = RateConstants::compute(k.big_c, k.source_norm, k.m_eta, k.a_norm, k.a_inv_norm);
  EXPECT_EQ(again.c, k.c);
  EXPECT_EQ(again.d, k.d);

  SourceCertificateRelaxed bad = cert;
  bad.valid = false;
  EXPECT_THROW(rate_constants_relaxed(bad, inj, 1.0, inj.a_norm), Error);
}

TEST(Certificates, StrictSplitRecomputed) {
  int valid = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index n = 16;
    auto basis = std::make_shared<WaveletBasis>(n);
    Matrix am(12, n);
    for (Index j = 0; j < n; ++j) am.col(j) = random_vector(12, 100 * seed + j);
    auto a = std::make_shared<DenseMap>(am);
    auto w = std::make_shared<IntegrationOp>(n, 1.0);
    WeightedL1 l1(basis);
    CoefficientVector c{Vector::Zero(n)};
    c.values[seed % 4] = 1.0;
    c.values[4 + seed % 3] = -0.7;
    const Vector x_star = w->apply_inverse(basis->synthesize(c));
    const SourceCertificateStrict cert = find_certificate_strict(w, a, l1, x_star);
    if (!cert.valid) continue;
    ++valid;
    const Matrix wm = materialize(*w);
    Matrix phi_t(n, n);
    for (Index j = 0; j < n; ++j) phi_t.col(j) = basis->atom(j);
    const Vector r = wm.transpose() * am.transpose() * cert.nu - x_star -
                     wm.transpose() * phi_t * cert.eta.eta.values;
    EXPECT_LE(r.norm(), 1e-8);
    for (Index l : cert.support) EXPECT_NEAR(cert.eta.eta.values[l], c.values[l] > 0 ? 1.0 : -1.0, 1e-8);
    EXPECT_LE(cert.eta.eta.values.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
  EXPECT_GT(valid, 0);
}

TEST(Certificates, TooManySupportIndicesIsInvalid) {
  const Instance inst = make_instance(InstanceSpec{64, 4, 8, 3, 1.0});
  const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
  EXPECT_FALSE(cert.valid);
  const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.support);
  EXPECT_FALSE(inj.injective);
}

TEST(Certificates, KeyValueRoundTrip) {
  const Instance inst = make_instance(InstanceSpec{64, 48, 4, 7, 1.0});
  const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
  const KeyValues kv = cert.to_key_values();
  const auto parsed = parse_key_values(format_key_values(kv, "# "), "# ");
  ASSERT_EQ(parsed.size(), kv.size());
  for (const auto& [k, v] : kv) EXPECT_EQ(parsed.at(k), v);
}

TEST(VariationalBounds, ScalarHandComputed) {
  auto id = std::make_shared<IdentityMap>(1);
  ProductMap m(id, id);
  Vector sol(2), source(2), y(1);
  sol << 2.0 / 3.0, 4.0 / 3.0;
  source << 1.0, 2.0;
  y << 3.0;
  const VariationalBoundReport r = check_variational_bounds(m, source, sol, (Vector(2) << 0.0, 3.0).finished(),
                                                            0.5, 1.0, 0.1);
  EXPECT_NEAR(r.residual_lhs, std::sqrt(29.0) / 3.0, 1e-12);
  EXPECT_NEAR(r.residual_rhs, 0.5 + 2.0 * std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(r.bregman_rhs, (0.5 + std::sqrt(5.0)) * (0.5 + std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_TRUE(r.residual_pass);
  EXPECT_TRUE(r.bregman_pass);
}

TEST(VariationalBounds, ExactSolutionZeroNoise) {
  auto id = std::make_shared<IdentityMap>(2);
  ProductMap m(id, id);
  const Vector x = random_vector(2, 3);
  Vector sol(4), data(4);
  sol << x, x;
  data << Vector::Zero(2), x;
  const auto r = check_variational_bounds(m, Vector::Zero(4), sol, data, 0.0, 1e-8, 0.0);
  EXPECT_TRUE(r.residual_pass);
  EXPECT_TRUE(r.bregman_pass);
  EXPECT_EQ(r.residual_lhs, 0.0);
}

TEST(NormBound, Examples) {
  const Index n = 8;
  auto basis = std::make_shared<WaveletBasis>(n);
  MapPtr id = std::make_shared<IdentityMap>(n);
  WeightedL1 l1(basis);
  const IndexSet omega = {0, 2};
  const Vector h_star = basis->atom(0) - basis->atom(2);
  const auto inj = check_restricted_injectivity(id, l1, omega);
  const NormBoundReport same = check_norm_bound(id, l1, omega, h_star, h_star, inj);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_LE(same.rhs_l1, 1e-14);
  const NormBoundReport off = check_norm_bound(id, l1, omega, h_star + basis->atom(5), h_star, inj);
  EXPECT_NEAR(off.lhs, 1.0, 1e-12);
  EXPECT_NEAR(off.rhs_l1, 3.0, 1e-12);
  EXPECT_TRUE(off.l1_pass);
  EXPECT_THROW(check_norm_bound(id, l1, {0}, h_star, h_star, check_restricted_injectivity(id, l1, {0})), Error);
}

TEST(NormBound, RandomBernoulli) {
  const Index n = 32;
  auto basis = std::make_shared<WaveletBasis>(n);
  WeightedL1 l1(basis);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const CounterRng rng(k, 3);
    MapPtr a = std::make_shared<BernoulliSensing>(16, n, 1000 + k);
    IndexSet omega;
    for (int j = 0; j < 4; ++j) omega.push_back(static_cast<Index>(rng.bits(j) % n));
    omega = normalize_index_set(omega, n);
    CoefficientVector cs{Vector::Zero(n)};
    for (Index l : omega) cs.values[l] = rng.normal(10 + l);
    const Vector h_star = basis->synthesize(cs);
    const Vector h = h_star + random_vector(n, 500 + k, 0.3);
    const auto inj = check_restricted_injectivity(a, l1, omega);
    ASSERT_TRUE(inj.injective);
    Vector fill(n);
    for (Index i = 0; i < n; ++i) fill[i] = 0.9 * (2.0 * rng.uniform(100 + i) - 1.0);
    for (Index l : omega) fill[l] = cs.values[l] > 0 ? 1.0 : -1.0;
    const Subgradient eta = make_subgradient(l1, fill);
    ASSERT_EQ(eta.omega, omega);
    const NormBoundReport r = check_norm_bound(a, l1, omega, h, h_star, inj, &eta);
    EXPECT_TRUE(r.l1_pass) << r.lhs << " " << r.rhs_l1;
    EXPECT_TRUE(r.bregman_pass) << r.lhs << " " << r.rhs_bregman;
  }
}

// Valid certificate ⇒ linear rate on the seeded N=64, m=32 phantom.
TEST(Certificates, ValidityMatchesObservedRate) {
  const Instance inst = make_instance(InstanceSpec{64, 32, 4, 11, 1.0});
  const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
  const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.valid ? cert.eta.omega : cert.support);
  SweepConfig cfg;
  cfg.deltas = log_grid(1e-5, 1e-2, 5);
  const SweepResult res = run_sweep(cfg, inst);
  if (cert.valid && inj.injective && cert.strictly_complementary) {
    EXPECT_GE(res.fit.slope, 0.85);
  } else {
    RecordProperty("monitor_slope", std::to_string(res.fit.slope));
  }
}

}  // namespace
}  // namespace coreg
