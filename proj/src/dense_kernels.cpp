#include "dense_kernels.hpp"

#include "coreg/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <vector>

namespace coreg::detail {

int conjugate_gradient(const std::function<Vector(const Vector&)>& op, const Vector& rhs,
                       Vector& x, double tol, int max_iters) {
  if (x.size() != rhs.size()) x = Vector::Zero(rhs.size());
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return 0;
  }
  Vector r = rhs - op(x);
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= tol * bnorm) return it;
    const Vector ap = op(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  if (std::sqrt(rr) <= tol * bnorm) return max_iters;
  throw SolverError("conjugate gradient did not converge: relative residual " +
                    std::to_string(std::sqrt(rr) / bnorm) + " > " + std::to_string(tol));
}

double lasso_objective(const Matrix& H, const Vector& q, const Vector& w, const Vector& z) {
  return 0.5 * z.dot(H * z) - q.dot(z) + w.dot(z.cwiseAbs());
}

PolishResult active_set_polish(const Matrix& H, const Vector& q, const Vector& w, const Vector& z0,
                               int max_rounds) {
  const Index p = H.rows();
  PolishResult out;
  out.z = z0;

  // sign: 0 inactive, ±1 active penalized, 2 smooth (always active)
  std::vector<int> state(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    if (w[j] == 0.0) {
      state[j] = 2;
    } else if (z0[j] != 0.0) {
      state[j] = z0[j] > 0.0 ? 1 : -1;
    } else {
      state[j] = 0;
    }
  }

  const double hscale = H.cwiseAbs().maxCoeff();
  const double qscale = q.cwiseAbs().maxCoeff();

  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Index> act;
    for (Index j = 0; j < p; ++j)
      if (state[j] != 0) act.push_back(j);
    const Index k = static_cast<Index>(act.size());

    Vector z = Vector::Zero(p);
    if (k > 0) {
      Matrix hs(k, k);
      Vector rhs(k);
      for (Index a = 0; a < k; ++a) {
        const Index ja = act[a];
        rhs[a] = q[ja] - (state[ja] == 2 ? 0.0 : w[ja] * state[ja]);
        for (Index b = 0; b < k; ++b) hs(a, b) = H(ja, act[b]);
      }
      Eigen::LDLT<Matrix> ldlt(hs);
      if (ldlt.info() != Eigen::Success) return out;
      const Vector zs = ldlt.solve(rhs);
      if (!zs.allFinite()) return out;
      for (Index a = 0; a < k; ++a) z[act[a]] = zs[a];
    }

    const Vector g = H * z - q;
    const double abs_tol = 1e-12 * (hscale * z.cwiseAbs().sum() + qscale) + 1e-300;
    bool changed = false;
    double worst = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (state[j] == 2) {
        worst = std::max(worst, std::abs(g[j]) - abs_tol);
      } else if (state[j] != 0) {
        // stationarity holds by construction; the sign must agree
        if (z[j] * state[j] <= 0.0) {
          state[j] = 0;
          changed = true;
        }
      } else {
        const double excess = std::abs(g[j]) - w[j] * (1.0 + 1e-9) - abs_tol;
        if (excess > 0.0) {
          state[j] = g[j] > 0.0 ? -1 : 1;
          changed = true;
          worst = std::max(worst, excess);
        }
      }
    }
    out.violation = std::max(worst, 0.0);
    if (!changed) {
      out.z = std::move(z);
      out.certified = true;
      return out;
    }
  }
  return out;
}

}  // namespace coreg::detail
