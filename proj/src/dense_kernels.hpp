#pragma once

// Internal numerical kernels shared by the solvers and certificate engine.

#include "coreg/types.hpp"

#include <functional>

namespace coreg::detail {

// Conjugate gradient for an SPD operator. Returns the iteration count; throws
// SolverError with the final residual when tol is not reached.
int conjugate_gradient(const std::function<Vector(const Vector&)>& op, const Vector& rhs,
                       Vector& x, double tol, int max_iters);

/// Active-set solve of min ½zᵀHz − qᵀz + Σ w_j|z_j| for dense PSD H.
///
/// Coordinates with w_j = 0 are smooth. The start support/sign pattern is
/// read off z (exact zeros mean inactive); each round solves the reduced
/// stationarity system and updates the pattern from sign flips and
/// subgradient violations. Succeeds only if the final point satisfies the
/// full optimality conditions.
struct PolishResult {
  Vector z;
  bool certified = false;
  double violation = 0.0;
};

PolishResult active_set_polish(const Matrix& H, const Vector& q, const Vector& w, const Vector& z0,
                               int max_rounds = 40);

double lasso_objective(const Matrix& H, const Vector& q, const Vector& w, const Vector& z);

}  // namespace coreg::detail
