#pragma once

#include "coreg/certificates.hpp"
#include "coreg/linear_map.hpp"
#include "coreg/solvers.hpp"
#include "coreg/wavelet.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace coreg {

/// Target signal x⋆ with h⋆ = W x⋆ sparse in the wavelet basis.
struct Phantom {
  Vector x_star;
  Vector h_star;
  Index sparsity = 0;
  std::uint64_t seed = 0;
  IndexSet support;
};

// Support indices are drawn from the coarsest quarter of the coefficient
// vector, coefficients are ±U[0.5, 1.5]. W must be an IntegrationOp or the
// identity so that x⋆ = W⁻¹h⋆ is exact.
Phantom make_phantom(Index n, Index sparsity, std::uint64_t seed, const WaveletBasis& basis,
                     const LinearMap& w);

// y⋆ + δ g/‖g‖ with g seeded standard normal.
Vector add_noise(const Vector& y_star, double delta, std::uint64_t seed);

// `count` log-spaced points from hi down to lo.
std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> default_deltas();

/// The numerical-differentiation instance: W = integration, A = Bernoulli,
/// db2 basis with κ ≡ 1.
struct InstanceSpec {
  Index n = 256;
  Index m = 128;
  Index sparsity = 8;
  std::uint64_t seed = 7;
  double w_scale = 1.0;
};

struct Instance {
  InstanceSpec spec;
  MapPtr w;
  MapPtr a;
  std::shared_ptr<const WaveletBasis> basis;
  WeightedL1 l1;
  Phantom phantom;
  Vector y_star;

  RelaxedProblem relaxed(const Vector& y_delta, double alpha) const;
  StrictProblem strict(const Vector& y_delta, double alpha) const;
};

Instance make_instance(const InstanceSpec& spec);
// Any W/A pair; the phantom still requires an invertible W as above.
Instance make_instance(MapPtr w, MapPtr a, std::shared_ptr<const WaveletBasis> basis,
                       Index sparsity, std::uint64_t seed);

struct SweepConfig {
  std::vector<double> deltas = default_deltas();
  double big_c = 1.0;
  Model model = Model::relaxed;
  int trials = 1;
  std::uint64_t noise_seed = 7;
  SolverConfig solver;
  int jobs = 1;

  void validate() const;
};

std::uint64_t trial_seed(std::uint64_t noise_seed, int trial);

// Rate constants to evaluate c·δ and d·δ per record, with a summary for the
// CSV header.
struct SweepBounds {
  RateConstants constants;
  KeyValues summary;
};

struct SweepRecord {
  double delta = 0.0;
  double alpha = 0.0;
  double bregman_x = 0.0;
  double err_h = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double bound_c_rhs = 0.0;  // NaN without bounds
  double bound_d_rhs = 0.0;
  int pass_c = -1;           // 1 pass, 0 violation, -1 not evaluated
  int pass_d = -1;

  // Not part of the CSV rows.
  int trial = 0;
  bool converged = true;
  double wall_time = 0.0;
};

bool same_fields(const SweepRecord& a, const SweepRecord& b);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
};

// Least squares on (log x, log y); pairs with y ≤ 1e-14 are dropped.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);
// Median err_h per δ, then fit_rate.
RateFit fit_records(const std::vector<SweepRecord>& records);

struct SweepResult {
  std::vector<SweepRecord> records;
  RateFit fit;
  KeyValues metadata;

  bool all_converged() const;
};

// Records are ordered by δ descending, then trial ascending, for any jobs.
SweepResult run_sweep(const SweepConfig& cfg, const Instance& inst,
                      const SweepBounds* bounds = nullptr);

inline constexpr int kCsvColumns = 10;
const std::vector<std::string>& csv_columns();

void emit_csv(const SweepResult& result, std::ostream& os);
std::string csv_text(const SweepResult& result);
void write_csv(const SweepResult& result, const std::string& path);
SweepResult parse_csv(const std::string& text);

// FNV-1a of the CSV text.
std::string determinism_hash(const std::string& csv);

void emit_svg(const SweepResult& result, std::ostream& os);
void write_svg(const SweepResult& result, const std::string& path);

}  // namespace coreg
