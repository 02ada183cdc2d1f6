#include "coreg/error.hpp"
#include "coreg/experiments.hpp"
#include "coreg/text.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace coreg {
namespace {

TEST(Phantom, Empty) {
  WaveletBasis basis(64);
  IntegrationOp w(64, 1.0);
  const Phantom p = make_phantom(64, 0, 1, basis, w);
  EXPECT_EQ(p.x_star.norm(), 0.0);
  EXPECT_EQ(p.h_star.norm(), 0.0);
}

TEST(Phantom, RoundTripAndSparsity) {
  for (Index n : {64, 256}) {
    WaveletBasis basis(n);
    IntegrationOp w(n, 1.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Phantom p = make_phantom(n, n / 8, seed, basis, w);
      EXPECT_LE((w.apply(p.x_star) - p.h_star).norm(), 1e-12 * std::max(1.0, p.h_star.norm()));
      const IndexSet supp = support(basis.analyze(p.h_star));
      EXPECT_EQ(static_cast<Index>(supp.size()), n / 8);
      EXPECT_EQ(supp, p.support);
      for (Index l : supp) {
        EXPECT_LT(l, n / 4);
        const double c = std::abs(basis.analyze(p.h_star).values[l]);
        EXPECT_GE(c, 0.5 - 1e-12);
        EXPECT_LE(c, 1.5 + 1e-12);
      }
    }
  }
}

TEST(Phantom, Errors) {
  WaveletBasis basis(64);
  IntegrationOp w(64, 1.0);
  EXPECT_THROW(make_phantom(64, 9, 1, basis, w), Error);
  BernoulliSensing not_invertible(64, 64, 1);
  EXPECT_THROW(make_phantom(64, 2, 1, basis, not_invertible), Error);
  EXPECT_NO_THROW(make_phantom(64, 2, 1, basis, IdentityMap(64)));
}

TEST(Noise, ExactLevel) {
  const Vector y = Vector::LinSpaced(20, -1.0, 1.0);
  EXPECT_EQ(add_noise(y, 0.0, 3), y);
  const Vector yd = add_noise(y, 1e-5, 3);
  EXPECT_NEAR((yd - y).norm(), 1e-5, 1e-12);
  EXPECT_EQ(add_noise(y, 1e-5, 3), yd);
  EXPECT_NE(add_noise(y, 1e-5, 4), yd);
  EXPECT_THROW(add_noise(y, -1.0, 3), Error);
}

TEST(Grid, Default) {
  const auto d = default_deltas();
  ASSERT_EQ(d.size(), 7u);
  EXPECT_EQ(d.front(), 1e-2);
  EXPECT_EQ(d.back(), 1e-5);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_NEAR(std::log10(d[i - 1] / d[i]), 0.5, 1e-12);
}

TEST(Fit, PerfectLine) {
  std::vector<double> x = {1e-2, 1e-3, 1e-4}, y = {3e-2, 3e-3, 3e-4};
  const RateFit f = fit_rate(x, y);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_EQ(f.points_used, 3);
}

TEST(Fit, DropsTinyErrors) {
  const RateFit f = fit_rate({1e-2, 1e-3, 1e-4}, {1e-2, 1e-3, 1e-15});
  EXPECT_EQ(f.points_used, 2);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
}

TEST(Fit, MediansAcrossTrials) {
  std::vector<SweepRecord> recs;
  for (double d : {1e-2, 1e-3}) {
    for (double factor : {1.0, 2.0, 100.0}) {
      SweepRecord r;
      r.delta = d;
      r.err_h = factor * d;
      recs.push_back(r);
    }
  }
  const RateFit f = fit_records(recs);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(2.0), 1e-12);
}

TEST(SweepConfig, Validation) {
  SweepConfig c;
  c.deltas = {1e-3, 1e-2};
  EXPECT_THROW(c.validate(), Error);
  c.deltas = {1e-2, 0.0};
  EXPECT_THROW(c.validate(), Error);
  c.deltas = {1e-2};
  c.trials = 0;
  EXPECT_THROW(c.validate(), Error);
}

struct SmallSweep : ::testing::Test {
  Instance inst = make_instance(InstanceSpec{64, 48, 4, 7, 1.0});
  SweepConfig cfg = [] {
    SweepConfig c;
    c.deltas = log_grid(1e-4, 1e-2, 3);
    c.trials = 2;
    return c;
  }();
};

TEST_F(SmallSweep, OrderingAndJobsIndependence) {
  const SweepResult a = run_sweep(cfg, inst);
  cfg.jobs = 3;
  const SweepResult b = run_sweep(cfg, inst);
  ASSERT_EQ(a.records.size(), 6u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].delta, cfg.deltas[i / 2]);
    EXPECT_EQ(a.records[i].trial, static_cast<int>(i % 2));
    EXPECT_TRUE(same_fields(a.records[i], b.records[i]));
  }
  EXPECT_EQ(csv_text(a), csv_text(b));
}

TEST_F(SmallSweep, CsvRoundTripAndSchema) {
  const SweepResult a = run_sweep(cfg, inst);
  const std::string text = csv_text(a);
  const SweepResult back = parse_csv(text);
  ASSERT_EQ(back.records.size(), a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_TRUE(same_fields(a.records[i], back.records[i]));
  EXPECT_EQ(back.metadata, a.metadata);
  std::istringstream is(text);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    EXPECT_EQ(text::split(line, ',').size(), static_cast<std::size_t>(kCsvColumns));
    ++rows;
  }
  EXPECT_EQ(rows, 7);
  EXPECT_NE(text.find("# noise_seed=7\n"), std::string::npos);
  EXPECT_NE(text.find("# C=1\n"), std::string::npos);
  EXPECT_NE(text.find("# phantom_seed=7\n"), std::string::npos);
  EXPECT_NE(text.find("# fit.slope=" + text::format_double(a.fit.slope) + "\n"), std::string::npos);
}

TEST_F(SmallSweep, MonotoneMedians) {
  cfg.deltas = default_deltas();
  cfg.trials = 3;
  const SweepResult r = run_sweep(cfg, inst);
  std::vector<double> med;
  for (std::size_t i = 0; i < r.records.size(); i += 3) {
    std::vector<double> g = {r.records[i].err_h, r.records[i + 1].err_h, r.records[i + 2].err_h};
    std::sort(g.begin(), g.end());
    med.push_back(g[1]);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < med.size(); ++i) inversions += med[i] > med[i - 1];
  EXPECT_LE(inversions, 1);
}

TEST_F(SmallSweep, BoundsAndTinyNoise) {
  const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
  ASSERT_TRUE(cert.valid);
  const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.eta.omega);
  const SweepBounds bounds{rate_constants_relaxed(cert, inj, 1.0, inj.a_norm), cert.to_key_values()};
  cfg.deltas = {1e-2, 1e-12};
  cfg.trials = 1;
  const SweepResult r = run_sweep(cfg, inst, &bounds);
  for (const auto& rec : r.records) {
    EXPECT_TRUE(std::isfinite(rec.bound_c_rhs));
    EXPECT_EQ(rec.pass_c, 1);
    EXPECT_EQ(rec.pass_d, 1);
    EXPECT_EQ(rec.pass_d == 1, BoundSlack{}.holds(rec.err_h, rec.bound_d_rhs));
  }
  EXPECT_LE(r.records.back().err_h, 1e-6);
  EXPECT_NE(csv_text(r).find("# cert.valid=1"), std::string::npos);
}

TEST_F(SmallSweep, SvgWritten) {
  const SweepResult r = run_sweep(cfg, inst);
  std::ostringstream os;
  emit_svg(r, os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("<circle"), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(Csv, EmptyAndBadInput) {
  SweepResult empty;
  std::ostringstream os;
  EXPECT_THROW(emit_csv(empty, os), Error);
  EXPECT_THROW(parse_csv("delta,alpha\n1,2\n"), Error);
  EXPECT_THROW(write_csv(SweepResult{{SweepRecord{}}, {}, {}}, "/nonexistent-dir/x.csv"), Error);
}

}  // namespace
}  // namespace coreg
