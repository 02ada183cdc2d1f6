#include "coreg/solvers.hpp"

#include "coreg/error.hpp"
#include "coreg/rng.hpp"
#include "coreg/text.hpp"
#include "dense_kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>

namespace coreg {

const char* to_string(Model model) { return model == Model::relaxed ? "relaxed" : "strict"; }

Model parse_model(const std::string& s) {
  if (s == "relaxed") return Model::relaxed;
  if (s == "strict") return Model::strict;
  throw Error("unknown model '" + s + "' (expected relaxed or strict)");
}

void CoRegData::validate() const {
  if (!w || !a) throw Error("problem operators not set");
  if (a->domain_dim() != w->codomain_dim()) {
    throw DimensionError("problem: A domain vs W codomain", w->codomain_dim(), a->domain_dim());
  }
  check_length("problem: weighted l1 dimension vs H", w->codomain_dim(), l1.n());
  check_length("problem: data vs A codomain", a->codomain_dim(), y_delta.size());
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("alpha must be positive and finite");
}

void SolverConfig::validate() const {
  if (max_iters < 0) throw Error("max_iters must be nonnegative");
  if (!(tol > 0.0)) throw Error("tol must be positive");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!(rho > 0.0)) throw Error("rho must be positive");
  if (!(lambda_relax > 0.0 && lambda_relax < 2.0)) throw Error("lambda_relax must lie in (0, 2)");
  if (polish_interval <= 0) throw Error("polish_interval must be positive");
}

std::string SolverConfig::describe() const {
  return "max_iters=" + std::to_string(max_iters) + ",tol=" + text::format_double(tol) +
         ",gamma=" + text::format_double(gamma) + ",lambda_relax=" +
         text::format_double(lambda_relax) + ",rho=" + text::format_double(rho) +
         ",seed=" + std::to_string(seed) + ",polish=" + (polish ? "1" : "0") +
         ",polish_interval=" + std::to_string(polish_interval);
}

TraceSink csv_trace_sink(std::ostream& os) {
  os << "iter,objective,fpr,primal_res,dual_res\n";
  return [&os](const TraceRow& r) {
    os << r.iter << ',' << text::format_double(r.objective) << ',' << text::format_double(r.fpr)
       << ',' << text::format_double(r.primal_res) << ',' << text::format_double(r.dual_res)
       << '\n';
  };
}

double objective_relaxed(const RelaxedProblem& p, const Vector& x, const Vector& h) {
  p.validate();
  return 0.5 * (p.w->apply(x) - h).squaredNorm() + 0.5 * (p.a->apply(h) - p.y_delta).squaredNorm() +
         p.alpha * (p.r.eval(x) + p.l1.eval(h));
}

double objective_strict(const StrictProblem& p, const Vector& x) {
  p.validate();
  const Vector wx = p.w->apply(x);
  return 0.5 * (p.a->apply(wx) - p.y_delta).squaredNorm() +
         p.alpha * (p.r.eval(x) + p.l1.eval(wx));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_finite(const Vector& v, const char* what, int iter) {
  if (!v.allFinite()) {
    throw SolverError(std::string("non-finite ") + what + " at iteration " + std::to_string(iter));
  }
}

// Splitting steps shrink with the prox threshold, so a tiny alpha would
// otherwise stop the iteration far from the minimizer.
double stop_threshold(double tol, double prox_scale) {
  return tol * std::min(1.0, std::max(prox_scale, 1e-6));
}

Vector seeded_start(std::uint64_t seed, std::uint64_t stream, Index n) {
  Vector v = Vector::Zero(n);
  if (seed == 0) return v;
  const CounterRng rng(seed, stream);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

// Φ with (Φh)_λ = ⟨φ_λ, h⟩.
Matrix analysis_matrix(const WaveletBasis& basis) {
  const Index n = basis.n();
  Matrix phi(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    phi.col(j) = basis.analyze(e).values;
    e[j] = 0.0;
  }
  return phi;
}

std::optional<Matrix> dense_inverse(const Matrix& m) {
  if (m.rows() != m.cols()) return std::nullopt;
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.inverse();
}

// ------------------------------------------------------------------ DR

class RelaxedSolver {
 public:
  RelaxedSolver(const RelaxedProblem& p, const SolverConfig& cfg)
      : p_(p), cfg_(cfg), nx_(p.w->domain_dim()), nh_(p.w->codomain_dim()),
        product_(p.w, p.a) {
    dense_ = nh_ <= cfg.dense_limit && nx_ <= cfg.dense_limit;
    mtb_ = Vector::Zero(nx_ + nh_);
    mtb_.tail(nh_) = p.a->adjoint_apply(p.y_delta);
    if (dense_) {
      wd_ = materialize(*p.w);
      ad_ = materialize(*p.a);
      const Index n = nx_ + nh_;
      Matrix mtm(n, n);
      mtm.topLeftCorner(nx_, nx_) = wd_.transpose() * wd_;
      mtm.topRightCorner(nx_, nh_) = -wd_.transpose();
      mtm.bottomLeftCorner(nh_, nx_) = -wd_;
      mtm.bottomRightCorner(nh_, nh_) = Matrix::Identity(nh_, nh_) + ad_.transpose() * ad_;
      mtm_ = mtm;
      llt_.compute(Matrix::Identity(n, n) + cfg.gamma * mtm);
      if (llt_.info() != Eigen::Success) throw SolverError("DR: Cholesky of I + γM*M failed");
    }
  }

  SolveResult run() {
    const auto t0 = Clock::now();
    const Index n = nx_ + nh_;
    Vector z = seeded_start(cfg_.seed, 1, n);
    Vector w = Vector::Zero(n);
    Vector pg = Vector::Zero(n);
    Vector coeffs = Vector::Zero(nh_);
    SolveResult res;
    bool stop = false;
    int k = 0;
    for (; k < cfg_.max_iters && !stop; ++k) {
      w = prox_f(z);
      pg = prox_g(2.0 * w - z, coeffs);
      const Vector z_next = z + cfg_.lambda_relax * (pg - w);
      require_finite(z_next, "DR iterate", k);
      const double fpr = (z_next - z).norm();
      const double rel = fpr / std::max(1.0, z_next.norm());
      z = z_next;
      res.fixed_point_residual = rel;
      if (cfg_.trace && (k % cfg_.trace_every == 0)) {
        const Vector x = w.head(nx_), h = w.tail(nh_);
        cfg_.trace({k + 1, objective_relaxed(p_, x, h), fpr, (p_.w->apply(x) - h).norm(), 0.0});
      }
      if (rel <= stop_threshold(cfg_.tol, cfg_.gamma * p_.alpha)) {
        stop = true;
        res.converged = true;
      } else if (cfg_.polish && dense_ && (k + 1) % cfg_.polish_interval == 0) {
        stop = try_polish(pg.head(nx_), coeffs, z, res);
      }
    }
    res.iterations = k;
    if (!res.polished) {
      w = prox_f(z);
      res.x = w.head(nx_);
      res.h = w.tail(nh_);
      if (!res.converged && cfg_.polish && dense_) {
        try_polish(pg.head(nx_), coeffs, z, res);
      }
    }
    res.wx = p_.w->apply(res.x);
    res.primal_residual = (res.wx - res.h).norm();
    res.objective = objective_relaxed(p_, res.x, res.h);
    res.wall_time = seconds_since(t0);
    return res;
  }

 private:
  Vector prox_f(const Vector& z) {
    const Vector rhs = z + cfg_.gamma * mtb_;
    if (dense_) return llt_.solve(rhs);
    auto op = [this](const Vector& v) -> Vector {
      return v + cfg_.gamma * product_.adjoint_apply(product_.apply(v));
    };
    if (cg_warm_.size() != rhs.size()) cg_warm_ = rhs;
    detail::conjugate_gradient(op, rhs, cg_warm_, cfg_.cg_tol, 20 * static_cast<int>(rhs.size()) + 100);
    return cg_warm_;
  }

  // Also returns the thresholded wavelet coefficients of the h-block.
  Vector prox_g(const Vector& v, Vector& coeffs) const {
    const double t = cfg_.gamma * p_.alpha;
    Vector out(v.size());
    out.head(nx_) = p_.r.prox(v.head(nx_), t);
    coeffs = p_.l1.prox_coefficients(p_.l1.basis().analyze(v.tail(nh_)).values, t);
    out.tail(nh_) = p_.l1.basis().synthesize(CoefficientVector{coeffs});
    return out;
  }

  void build_polish_system() {
    if (polish_ready_) return;
    const Matrix phi = analysis_matrix(p_.l1.basis());
    const Matrix a_syn = ad_ * phi.transpose();  // A Φᵀ
    const Matrix phi_w = phi * wd_;              // Φ W
    const Index n = nx_ + nh_;
    H_.resize(n, n);
    H_.topLeftCorner(nx_, nx_) =
        wd_.transpose() * wd_ + p_.alpha * Matrix::Identity(nx_, nx_);
    H_.topRightCorner(nx_, nh_) = -phi_w.transpose();
    H_.bottomLeftCorner(nh_, nx_) = -phi_w;
    H_.bottomRightCorner(nh_, nh_) = Matrix::Identity(nh_, nh_) + a_syn.transpose() * a_syn;
    q_ = Vector::Zero(n);
    q_.tail(nh_) = a_syn.transpose() * p_.y_delta;
    weights_ = Vector::Zero(n);
    weights_.tail(nh_) = p_.alpha * p_.l1.kappa();
    polish_ready_ = true;
  }

  // On success seats z at the DR fixed point of the certified minimizer.
  bool try_polish(const Vector& x_guess, const Vector& coeff_guess, Vector& z, SolveResult& res) {
    build_polish_system();
    Vector z0(nx_ + nh_);
    z0 << x_guess, coeff_guess;
    const auto pol = detail::active_set_polish(H_, q_, weights_, z0);
    if (!pol.certified) return false;
    Vector w(nx_ + nh_);
    w.head(nx_) = pol.z.head(nx_);
    w.tail(nh_) = p_.l1.basis().synthesize(CoefficientVector{pol.z.tail(nh_)});
    // prox_{γf}(z) = w  ⇔  z = w + γ∇f(w)
    const Vector grad = product_.adjoint_apply(product_.apply(w)) - mtb_;
    const Vector z_star = w + cfg_.gamma * grad;
    Vector coeffs;
    const Vector w1 = prox_f(z_star);
    const Vector z_next = z_star + cfg_.lambda_relax * (prox_g(2.0 * w1 - z_star, coeffs) - w1);
    z = z_star;
    res.fixed_point_residual = (z_next - z_star).norm() / std::max(1.0, z_star.norm());
    res.x = w.head(nx_);
    res.h = w.tail(nh_);
    res.polished = true;
    res.converged = true;
    return true;
  }

  const RelaxedProblem& p_;
  const SolverConfig& cfg_;
  Index nx_, nh_;
  ProductMap product_;
  bool dense_ = false;
  Matrix wd_, ad_, mtm_;
  Eigen::LLT<Matrix> llt_;
  Vector mtb_;
  Vector cg_warm_;
  bool polish_ready_ = false;
  Matrix H_;
  Vector q_, weights_;
};

// ------------------------------------------------------------------ ADMM

class StrictSolver {
 public:
  StrictSolver(const StrictProblem& p, const SolverConfig& cfg)
      : p_(p), cfg_(cfg), nx_(p.w->domain_dim()), nh_(p.w->codomain_dim()) {
    dense_ = nh_ <= cfg.dense_limit && nx_ <= cfg.dense_limit;
    awty_ = p.w->adjoint_apply(p.a->adjoint_apply(p.y_delta));
    if (dense_) {
      wd_ = materialize(*p.w);
      ad_ = materialize(*p.a);
      aw_ = ad_ * wd_;
      const Matrix k = aw_.transpose() * aw_ + p.alpha * Matrix::Identity(nx_, nx_) +
                       cfg.rho * wd_.transpose() * wd_;
      llt_.compute(k);
      if (llt_.info() != Eigen::Success) throw SolverError("ADMM: Cholesky of x-update system failed");
    }
  }

  SolveResult run() {
    const auto t0 = Clock::now();
    Vector h = seeded_start(cfg_.seed, 2, nh_);
    Vector u = seeded_start(cfg_.seed, 3, nh_);
    Vector x = Vector::Zero(nx_);
    Vector wx = Vector::Zero(nh_);
    Vector coeffs = p_.l1.basis().analyze(h).values;
    SolveResult res;
    bool stop = false;
    int k = 0;
    for (; k < cfg_.max_iters && !stop; ++k) {
      Residuals r = step(x, wx, h, u, coeffs);
      require_finite(x, "ADMM iterate", k);
      res.fixed_point_residual = r.relative;
      res.primal_residual = r.primal;
      res.dual_residual = r.dual;
      if (cfg_.trace && (k % cfg_.trace_every == 0)) {
        cfg_.trace({k + 1, objective_strict(p_, x), r.relative, r.primal, r.dual});
      }
      if (r.relative <= stop_threshold(cfg_.tol, p_.alpha / cfg_.rho)) {
        stop = true;
        res.converged = true;
      } else if (cfg_.polish && polishable() && (k + 1) % cfg_.polish_interval == 0) {
        stop = try_polish(coeffs, x, wx, h, u, res);
      }
    }
    res.iterations = k;
    if (!res.converged && cfg_.polish && polishable()) try_polish(coeffs, x, wx, h, u, res);
    res.x = x;
    res.h = h;
    res.wx = p_.w->apply(x);
    res.objective = objective_strict(p_, x);
    res.wall_time = seconds_since(t0);
    return res;
  }

 private:
  struct Residuals {
    double primal, dual, relative;
  };

  Residuals step(Vector& x, Vector& wx, Vector& h, Vector& u, Vector& coeffs) {
    const Vector rhs = awty_ + cfg_.rho * p_.w->adjoint_apply(h - u);
    x = solve_x(rhs, x);
    wx = p_.w->apply(x);
    coeffs = p_.l1.prox_coefficients(p_.l1.basis().analyze(wx + u).values, p_.alpha / cfg_.rho);
    Vector h_next = p_.l1.basis().synthesize(CoefficientVector{coeffs});
    u += wx - h_next;
    Residuals r;
    r.primal = (wx - h_next).norm();
    r.dual = cfg_.rho * p_.w->adjoint_apply(h_next - h).norm();
    const double pscale = std::max({1.0, wx.norm(), h_next.norm()});
    const double dscale = std::max(1.0, cfg_.rho * p_.w->adjoint_apply(u).norm());
    r.relative = std::max(r.primal / pscale, r.dual / dscale);
    h = std::move(h_next);
    return r;
  }

  Vector solve_x(const Vector& rhs, const Vector& warm) {
    if (dense_) return llt_.solve(rhs);
    auto op = [this](const Vector& v) -> Vector {
      const Vector wv = p_.w->apply(v);
      return p_.w->adjoint_apply(p_.a->adjoint_apply(p_.a->apply(wv)) + cfg_.rho * wv) +
             p_.alpha * v;
    };
    Vector x = warm;
    detail::conjugate_gradient(op, rhs, x, cfg_.cg_tol, 20 * static_cast<int>(rhs.size()) + 100);
    return x;
  }

  bool polishable() {
    if (!dense_) return false;
    if (!winv_checked_) {
      winv_checked_ = true;
      winv_ = dense_inverse(wd_);
    }
    return winv_.has_value();
  }

  bool try_polish(const Vector& coeff_guess, Vector& x, Vector& wx, Vector& h, Vector& u,
                  SolveResult& res) {
    if (!polish_ready_) {
      const Matrix phi = analysis_matrix(p_.l1.basis());
      const Matrix a_syn = ad_ * phi.transpose();
      b_ = *winv_ * phi.transpose();  // x = B c
      H_ = a_syn.transpose() * a_syn + p_.alpha * b_.transpose() * b_;
      q_ = a_syn.transpose() * p_.y_delta;
      weights_ = p_.alpha * p_.l1.kappa();
      polish_ready_ = true;
    }
    const auto pol = detail::active_set_polish(H_, q_, weights_, coeff_guess);
    if (!pol.certified) return false;
    const Vector x_star = b_ * pol.z;
    const Vector h_star = p_.l1.basis().synthesize(CoefficientVector{pol.z});
    // Dual seat: ρu = −W^{-T}∇F(x⋆), F(x) = ½‖AWx − y‖² + α‖x‖²/2.
    const Vector grad = aw_.transpose() * (aw_ * x_star - p_.y_delta) + p_.alpha * x_star;
    Vector u_star = -(winv_->transpose() * grad) / cfg_.rho;
    Vector x1 = x_star, wx1, h1 = h_star, coeffs1;
    const Residuals r = step(x1, wx1, h1, u_star, coeffs1);
    x = x_star;
    wx = p_.w->apply(x_star);
    h = h_star;
    u = u_star;
    res.fixed_point_residual = r.relative;
    res.primal_residual = (wx - h).norm();
    res.dual_residual = r.dual;
    res.polished = true;
    res.converged = true;
    return true;
  }

  const StrictProblem& p_;
  const SolverConfig& cfg_;
  Index nx_, nh_;
  bool dense_ = false;
  Matrix wd_, ad_, aw_;
  Eigen::LLT<Matrix> llt_;
  Vector awty_;
  bool winv_checked_ = false;
  std::optional<Matrix> winv_;
  bool polish_ready_ = false;
  Matrix H_, b_;
  Vector q_, weights_;
};

void check_reference_size(const CoRegData& p) {
  if (p.w->domain_dim() > 256 || p.w->codomain_dim() > 256) {
    throw Error("reference_solve supports n <= 256");
  }
}

}  // namespace

SolveResult solve_relaxed(const RelaxedProblem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  return RelaxedSolver(p, cfg).run();
}

SolveResult solve_strict(const StrictProblem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  return StrictSolver(p, cfg).run();
}

SolverConfig reference_config(SolverConfig base) {
  base.max_iters = 500000;
  base.tol = 1e-14;
  base.polish = true;
  return base;
}

SolveResult reference_solve(const RelaxedProblem& p, const SolverConfig& cfg) {
  p.validate();
  check_reference_size(p);
  return solve_relaxed(p, reference_config(cfg));
}

SolveResult reference_solve(const StrictProblem& p, const SolverConfig& cfg) {
  p.validate();
  check_reference_size(p);
  return solve_strict(p, reference_config(cfg));
}

}  // namespace coreg
