#pragma once

#include "coreg/linear_map.hpp"
#include "coreg/regularizers.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

namespace coreg {

enum class Model { relaxed, strict };

const char* to_string(Model model);
Model parse_model(const std::string& s);

// Shared data of both co-regularization functionals: W: X → H, A: H → Y,
// data y^δ ∈ Y, weight α, weighted ℓ¹ on H and R = ‖·‖²/2 on X.
struct CoRegData {
  MapPtr w;
  MapPtr a;
  Vector y_delta;
  double alpha = 1.0;
  WeightedL1 l1;
  QuadraticPenalty r;

  // Throws on incompatible dimensions or α ≤ 0.
  void validate() const;
};

// B(x, h) = ½‖Wx − h‖² + ½‖Ah − y^δ‖² + α(R(x) + ‖h‖_{1,κ}).
struct RelaxedProblem : CoRegData {};

// A(x) = ½‖AWx − y^δ‖² + α(R(x) + ‖Wx‖_{1,κ}).
struct StrictProblem : CoRegData {};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double fpr = 0.0;  // absolute ‖z_{k+1} − z_k‖ (DR) or max relative residual (ADMM)
  double primal_res = 0.0;
  double dual_res = 0.0;
};

using TraceSink = std::function<void(const TraceRow&)>;

// Streams "iter,objective,fpr,primal_res,dual_res" rows, header first.
TraceSink csv_trace_sink(std::ostream& os);

struct SolverConfig {
  int max_iters = 20000;
  double tol = 1e-10;         // relative iterate change (DR) / relative residuals (ADMM), scaled by min(1, prox threshold)
  double gamma = 1.0;         // DR step
  double lambda_relax = 1.0;  // DR relaxation, in (0, 2)
  double rho = 1.0;           // ADMM penalty
  std::uint64_t seed = 0;     // 0: zero initialization, otherwise seeded Gaussian start
  // Active-set refinement of the splitting iterate, accepted only when the
  // optimality conditions verify. Attempted every polish_interval iterations.
  bool polish = true;
  int polish_interval = 250;
  Index dense_limit = 512;    // dense Cholesky up to this signal dimension, CG above
  double cg_tol = 1e-12;
  TraceSink trace;
  int trace_every = 1;

  void validate() const;
  std::string describe() const;
};

struct SolveResult {
  Vector x;
  Vector h;   // relaxed: h iterate; strict: exactly sparse h from the last h-update
  Vector wx;  // W x
  double objective = 0.0;
  int iterations = 0;
  double fixed_point_residual = 0.0;
  double primal_residual = 0.0;  // ADMM ‖Wx − h‖; DR ‖Wx − h‖ defect
  double dual_residual = 0.0;
  bool converged = false;
  bool polished = false;
  double wall_time = 0.0;
};

double objective_relaxed(const RelaxedProblem& p, const Vector& x, const Vector& h);
double objective_strict(const StrictProblem& p, const Vector& x);

// Douglas-Rachford on z = (x, h) with f(z) = ½‖M z − (0, y^δ)‖² and
// g(z) = α(R(x) + ‖h‖_{1,κ}); returns prox_{γf}(z) at termination.
SolveResult solve_relaxed(const RelaxedProblem& p, const SolverConfig& cfg = {});

// ADMM on min ½‖AWx − y^δ‖² + α‖x‖²/2 + α‖h‖_{1,κ} subject to Wx = h.
SolveResult solve_strict(const StrictProblem& p, const SolverConfig& cfg = {});

// High-accuracy run of the matching method (500k iterations, tol 1e-14).
// Requires n ≤ 256. A result that did not converge keeps converged = false.
SolveResult reference_solve(const RelaxedProblem& p, const SolverConfig& cfg = {});
SolveResult reference_solve(const StrictProblem& p, const SolverConfig& cfg = {});

SolverConfig reference_config(SolverConfig base);

}  // namespace coreg
